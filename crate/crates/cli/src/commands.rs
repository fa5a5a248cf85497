use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use verdict_facts::evaluate::{
    compare_all, hallucination_report, load_gold, method_report, render_difficult_table, render_hallucination_table,
    render_method_table, render_quality_table, HallucinationReport, MethodReport,
};
use verdict_facts::extract::{CompiledMarkers, Method};
use verdict_facts::fixtures::{generate_corpus, DocKind, FixtureSpec};
use verdict_facts::ingest::{
    coverage_report, fetch_missing, link_corpus, load_admin, load_corpus_dir, write_admin, write_dump, CoverageOptions,
    DocSource, HttpRetriever, LinkageReport, VerdictDocument, YearRange,
};
use verdict_facts::llm::{GenerationProvider, HttpProvider, LlmResult, ReplayProvider, StubProvider, OUTPUT_FIELD};
use verdict_facts::markers::{default_phrases, MarkerSet, PhraseLists};
use verdict_facts::pipeline::{read_results, run_corpus, Cascade, Extractor, RunOptions};
use verdict_facts::sparing::mine_markers;

use crate::config::{credential, Backend, RunConfig, COURT_KEY_ENV, PROVIDER_KEY_ENV};
use crate::error::CliError;

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n").and_then(|_| out.flush()).map_err(|e| CliError::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let body = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&body).map_err(|e| CliError::new("format", format!("{}: {e}", path.display())))
}

fn load_docs(path: &Path, years: YearRange) -> Result<Vec<VerdictDocument>, CliError> {
    if !path.exists() {
        return Err(CliError::new("io", format!("{} does not exist", path.display())));
    }
    let parsed = load_corpus_dir(path, years)?;
    if parsed.corrupt + parsed.out_of_range + parsed.duplicates > 0 {
        eprintln!(
            "skipped {} corrupt, {} out-of-range and {} duplicate records in {}",
            parsed.corrupt,
            parsed.out_of_range,
            parsed.duplicates,
            path.display()
        );
    }
    Ok(parsed.documents)
}

pub fn ingest(cfg: &RunConfig, dump: &Path, fetched: Option<&Path>, admin: &Path, out: &Path) -> Result<(), CliError> {
    let mut docs = load_docs(dump, cfg.ingest.years)?;
    if let Some(f) = fetched {
        docs.extend(load_docs(f, cfg.ingest.years)?.into_iter().map(|d| d.with_source(DocSource::ApiFetch)));
    }
    let registry = load_admin(admin)?;
    let linkage = link_corpus(&docs, &registry)?;
    let table = coverage_report(
        &linkage.report,
        &CoverageOptions {
            thresholds: cfg.ingest.coverage_thresholds.clone(),
        },
    )?;

    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let corpus_path = out.join("corpus.jsonl");
    let mut w = create(&corpus_path)?;
    write_dump(&docs, &mut w).map_err(|e| CliError::io(&corpus_path, e))?;
    write_json(&out.join("linkage.json"), &linkage.report)?;
    write_json(&out.join("pairs.json"), &linkage.pairs)?;
    let unmatched_path = out.join("unmatched.csv");
    write_admin(&linkage.unmatched, create(&unmatched_path)?)?;
    std::fs::write(out.join("coverage.txt"), &table).map_err(|e| CliError::io(out, e))?;
    print!("{table}");
    Ok(())
}

pub fn fetch(cfg: &RunConfig, unmatched: &Path, out: &Path) -> Result<(), CliError> {
    let endpoint = cfg
        .ingest
        .endpoint
        .as_deref()
        .ok_or_else(|| CliError::new("config", "fetch needs --endpoint or ingest.endpoint"))?;
    let rows = load_admin(unmatched)?;
    let retriever = HttpRetriever::new(endpoint, Duration::from_millis(cfg.ingest.timeout_ms), credential(COURT_KEY_ENV))?;
    let outcome = fetch_missing(&rows, &retriever, &cfg.ingest.fetch)?;
    let mut w = create(out)?;
    write_dump(&outcome.documents, &mut w).map_err(|e| CliError::io(out, e))?;
    let failures_path = out.with_extension("failures.jsonl");
    let mut f = create(&failures_path)?;
    for failure in &outcome.failures {
        serde_json::to_writer(&mut f, failure)?;
        f.write_all(b"\n").map_err(|e| CliError::io(&failures_path, e))?;
    }
    f.flush().map_err(|e| CliError::io(&failures_path, e))?;
    println!(
        "{}",
        serde_json::json!({
            "requested": rows.len(),
            "fetched": outcome.documents.len(),
            "failed": outcome.failures.len(),
            "requests": outcome.requests,
        })
    );
    Ok(())
}

pub fn mine(cfg: &RunConfig, corpus: &Path, out: &Path, min_docs: usize) -> Result<(), CliError> {
    let docs = load_docs(corpus, cfg.ingest.years)?;
    let candidates: Vec<_> = mine_markers(&docs).into_iter().filter(|c| c.document_count >= min_docs).collect();
    write_json(out, &candidates)?;
    println!("{} candidate expressions from {} documents", candidates.len(), docs.len());
    Ok(())
}

fn phrase_lists(cfg: &RunConfig) -> Result<PhraseLists, CliError> {
    match &cfg.pipeline.marker_set_path {
        Some(p) => Ok(PhraseLists::load(p)?),
        None => Ok(default_phrases()),
    }
}

/// Always answers that the document holds no statement.
fn silent_stub() -> StubProvider {
    let out = serde_json::json!({ OUTPUT_FIELD: null }).to_string();
    StubProvider::fixed(LlmResult::ok(out, 0, 0))
}

fn provider(cfg: &RunConfig) -> Result<Box<dyn GenerationProvider>, CliError> {
    Ok(match cfg.provider.backend {
        Backend::Replay => {
            let path = cfg
                .provider
                .replay_path
                .as_ref()
                .ok_or_else(|| CliError::new("config", "replay provider needs --replay or provider.replay_path"))?;
            Box::new(ReplayProvider::load(path)?)
        }
        Backend::Http => Box::new(HttpProvider::new(&cfg.pipeline.provider, credential(PROVIDER_KEY_ENV))?),
        Backend::Stub => Box::new(silent_stub()),
    })
}

pub fn extract(cfg: &RunConfig, corpus: &Path, resume: bool, max_docs: Option<usize>) -> Result<(), CliError> {
    let out: PathBuf = cfg
        .pipeline
        .output_path
        .clone()
        .ok_or_else(|| CliError::new("config", "extract needs --out or pipeline.output_path"))?;
    let docs = load_docs(corpus, YearRange { first: i32::MIN, last: i32::MAX })?;
    let lists = phrase_lists(cfg)?;
    let method = cfg.extract.method;
    let needs_model = matches!(method, Method::Llm | Method::Combined);
    let backend = if needs_model { Some(provider(cfg)?) } else { None };

    let extractor = match method {
        Method::Baseline => Extractor::Baseline(lists),
        Method::Advanced => Extractor::Advanced(CompiledMarkers::new(&MarkerSet::try_from(lists)?)?),
        Method::Llm | Method::Combined => {
            let markers = MarkerSet::try_from(lists)?;
            let cascade = Cascade::new(&markers, backend.as_deref().expect("model backend"), &cfg.pipeline)?;
            if method == Method::Llm {
                Extractor::Llm(cascade)
            } else {
                Extractor::Combined(cascade)
            }
        }
    };
    let options = RunOptions {
        resume,
        concurrency_bound: cfg.pipeline.concurrency_bound,
        max_docs,
    };
    let summary = run_corpus(&docs, &extractor, &out, &options)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

/// What `evaluate --out` writes and `report` reads.
#[derive(Debug, Serialize, Deserialize)]
struct Evaluation {
    report: MethodReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hallucination: Option<HallucinationReport>,
}

#[derive(Debug, Deserialize)]
struct Pair {
    generated: String,
    source: String,
}

fn load_pairs(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut pairs = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let p: Pair = serde_json::from_str(&line)
            .map_err(|e| CliError::new("format", format!("{} line {}: {e}", path.display(), i + 1)))?;
        pairs.push((p.generated, p.source));
    }
    Ok(pairs)
}

fn print_tables(evals: &[Evaluation], difficult: bool) {
    let reports: Vec<MethodReport> = evals.iter().map(|e| e.report.clone()).collect();
    println!("{}", render_method_table(&reports));
    println!("{}", render_quality_table(&reports));
    if difficult {
        for r in &reports {
            println!("{}", render_difficult_table(r));
        }
    }
    for h in evals.iter().filter_map(|e| e.hallucination.as_ref()) {
        println!("{}", render_hallucination_table(h));
    }
}

pub fn evaluate(cfg: &RunConfig, results: &Path, out: Option<&Path>, pairs: Option<&Path>, difficult: bool) -> Result<(), CliError> {
    let gold_path = cfg
        .evaluation
        .gold_path
        .as_ref()
        .ok_or_else(|| CliError::new("config", "evaluate needs --gold or evaluation.gold_path"))?;
    let outcomes = read_results(results)?;
    let gold = load_gold(gold_path)?;
    let method = outcomes.first().map_or(cfg.extract.method, |o| o.method);
    if let Some(o) = outcomes.iter().find(|o| o.method != method) {
        return Err(CliError::new("evaluate", format!("results mix methods ({:?} and {:?})", method, o.method)));
    }
    let report = method_report(method, &compare_all(&outcomes, &gold, method)?)?;
    let hallucination = pairs.map(load_pairs).transpose()?.map(|p| hallucination_report(&p)).transpose()?;
    let eval = Evaluation { report, hallucination };
    if let Some(path) = out {
        write_json(path, &eval)?;
    }
    print_tables(std::slice::from_ref(&eval), difficult);
    Ok(())
}

pub fn generate(spec: Option<&Path>, out: &Path) -> Result<(), CliError> {
    let spec: FixtureSpec = match spec {
        Some(p) => read_json(p)?,
        None => FixtureSpec::default(),
    };
    let corpus = generate_corpus(&spec)?;
    corpus.write_to(out)?;
    println!(
        "{} documents: {} clean, {} noisy, {} procedural, {} unusual opener",
        corpus.docs.len(),
        corpus.count(DocKind::Clean),
        corpus.count(DocKind::Noisy),
        corpus.count(DocKind::Procedural),
        corpus.count(DocKind::UnusualOpener)
    );
    Ok(())
}

pub fn report(cfg: &RunConfig, evaluations: &[PathBuf], linkage: Option<&Path>, difficult: bool) -> Result<(), CliError> {
    if evaluations.is_empty() && linkage.is_none() {
        return Err(CliError::new("usage", "report needs --evaluations or --linkage"));
    }
    if let Some(path) = linkage {
        let report: LinkageReport = read_json(path)?;
        let opts = CoverageOptions {
            thresholds: cfg.ingest.coverage_thresholds.clone(),
        };
        println!("{}", coverage_report(&report, &opts)?);
    }
    if !evaluations.is_empty() {
        let evals = evaluations.iter().map(|p| read_json(p)).collect::<Result<Vec<Evaluation>, _>>()?;
        print_tables(&evals, difficult);
    }
    Ok(())
}
