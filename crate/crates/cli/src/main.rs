mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use verdict_facts::extract::Method;

use config::{Backend, RunConfig};
use error::CliError;

/// Extract factual statements from criminal court decisions.
#[derive(Debug, Parser)]
#[command(name = "verdict-facts", version, arg_required_else_help = true)]
struct Cli {
    /// JSON configuration file layered over the defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print the effective configuration as JSON and exit.
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a dump, link it to the registry and report coverage.
    Ingest(IngestArgs),
    /// Re-download unmatched registry rows from the court API.
    Fetch(FetchArgs),
    /// Section marker tools.
    #[command(subcommand)]
    Markers(MarkersCommand),
    /// Extract factual statements from a corpus.
    Extract(ExtractArgs),
    /// Compare results with gold annotations.
    Evaluate(EvaluateArgs),
    /// Synthetic corpora with known answers.
    #[command(subcommand)]
    Fixtures(FixturesCommand),
    /// Render tables from saved evaluation and linkage reports.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Dump file or directory of `*.jsonl` dumps.
    #[arg(long)]
    dump: PathBuf,
    /// Documents fetched from the API, in dump format.
    #[arg(long)]
    fetched: Option<PathBuf>,
    /// Administrative registry (comma- or tab-separated).
    #[arg(long)]
    admin: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    first_year: Option<i32>,
    #[arg(long)]
    last_year: Option<i32>,
}

#[derive(Debug, Args)]
struct FetchArgs {
    /// Registry rows to fetch, as written by `ingest`.
    #[arg(long)]
    unmatched: PathBuf,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    max_retries: Option<u32>,
    #[arg(long)]
    concurrency: Option<usize>,
    /// Pause between requests of one worker, in milliseconds.
    #[arg(long)]
    interval_ms: Option<u64>,
    /// Fetched documents in dump format.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum MarkersCommand {
    /// List spaced-out heading expressions for annotation.
    Mine {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Drop expressions seen in fewer documents.
        #[arg(long, default_value_t = 1)]
        min_docs: usize,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Baseline,
    Advanced,
    Llm,
    Combined,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Baseline => Method::Baseline,
            MethodArg::Advanced => Method::Advanced,
            MethodArg::Llm => Method::Llm,
            MethodArg::Combined => Method::Combined,
        }
    }
}

#[derive(Debug, Args)]
struct ExtractArgs {
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Dump file or directory of `*.jsonl` dumps.
    #[arg(long)]
    corpus: PathBuf,
    /// Marker set JSON with `start_markers` and `end_markers`.
    #[arg(long)]
    markers: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Keep records already in the output and process only the rest.
    #[arg(long)]
    resume: bool,
    #[arg(long, value_enum)]
    provider: Option<Backend>,
    /// Replay fixture for the replay provider.
    #[arg(long)]
    replay: Option<PathBuf>,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    concurrency: Option<usize>,
    #[arg(long)]
    ground_threshold: Option<f64>,
    /// Stop after this many new records.
    #[arg(long)]
    max_docs: Option<usize>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    gold: Option<PathBuf>,
    /// Write the evaluation as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSONL of `{generated, source}` pairs for the hallucination breakdown.
    #[arg(long)]
    pairs: Option<PathBuf>,
    /// Also print the difficult-case breakdown.
    #[arg(long)]
    difficult: bool,
}

#[derive(Debug, Subcommand)]
enum FixturesCommand {
    /// Write corpus/, gold.jsonl, planted.jsonl and replay.jsonl.
    Generate {
        /// Fixture spec JSON; defaults apply to missing fields.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Evaluation files written by `evaluate --out`.
    #[arg(long, num_args = 1..)]
    evaluations: Vec<PathBuf>,
    /// Linkage report written by `ingest`.
    #[arg(long)]
    linkage: Option<PathBuf>,
    #[arg(long)]
    difficult: bool,
}

fn apply_flags(cfg: &mut RunConfig, command: &Command) {
    match command {
        Command::Ingest(a) => {
            if let Some(y) = a.first_year {
                cfg.ingest.years.first = y;
            }
            if let Some(y) = a.last_year {
                cfg.ingest.years.last = y;
            }
        }
        Command::Fetch(a) => {
            if a.endpoint.is_some() {
                cfg.ingest.endpoint.clone_from(&a.endpoint);
            }
            if let Some(n) = a.max_retries {
                cfg.ingest.fetch.max_retries = n;
            }
            if let Some(n) = a.concurrency {
                cfg.ingest.fetch.concurrency = n;
            }
            if let Some(ms) = a.interval_ms {
                cfg.ingest.fetch.interval = std::time::Duration::from_millis(ms);
            }
        }
        Command::Extract(a) => {
            if let Some(m) = a.method {
                cfg.extract.method = m.into();
            }
            if a.markers.is_some() {
                cfg.pipeline.marker_set_path.clone_from(&a.markers);
            }
            if a.out.is_some() {
                cfg.pipeline.output_path.clone_from(&a.out);
            }
            if let Some(b) = a.provider {
                cfg.provider.backend = b;
            }
            if a.replay.is_some() {
                cfg.provider.replay_path.clone_from(&a.replay);
            }
            if a.endpoint.is_some() {
                cfg.pipeline.provider.endpoint.clone_from(&a.endpoint);
            }
            if let Some(n) = a.concurrency {
                cfg.pipeline.concurrency_bound = n;
            }
            if let Some(t) = a.ground_threshold {
                cfg.pipeline.ground_threshold = t;
            }
        }
        Command::Evaluate(a) => {
            if a.gold.is_some() {
                cfg.evaluation.gold_path.clone_from(&a.gold);
            }
        }
        Command::Markers(_) | Command::Fixtures(_) | Command::Report(_) => {}
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(command) = &cli.command {
        apply_flags(&mut cfg, command);
    }
    cfg.validate()?;
    if cli.print_config {
        println!("{}", cfg.to_json());
        return Ok(());
    }
    match cli.command {
        None => Err(CliError::new("usage", "no subcommand given; see --help")),
        Some(Command::Ingest(a)) => commands::ingest(&cfg, &a.dump, a.fetched.as_deref(), &a.admin, &a.out),
        Some(Command::Fetch(a)) => commands::fetch(&cfg, &a.unmatched, &a.out),
        Some(Command::Markers(MarkersCommand::Mine { corpus, out, min_docs })) => {
            commands::mine(&cfg, &corpus, &out, min_docs)
        }
        Some(Command::Extract(a)) => commands::extract(&cfg, &a.corpus, a.resume, a.max_docs),
        Some(Command::Evaluate(a)) => commands::evaluate(&cfg, &a.results, a.out.as_deref(), a.pairs.as_deref(), a.difficult),
        Some(Command::Fixtures(FixturesCommand::Generate { spec, out })) => commands::generate(spec.as_deref(), &out),
        Some(Command::Report(a)) => commands::report(&cfg, &a.evaluations, a.linkage.as_deref(), a.difficult),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(if e.kind == "usage" { 2 } else { 1 })
        }
    }
}
