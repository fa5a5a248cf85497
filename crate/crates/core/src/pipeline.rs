//! Rules-then-LLM cascade and resumable corpus runs.

use std::collections::{BTreeMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Condvar, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::{ground, normalize_text};
use crate::extract::{advanced_extract, baseline_extract, CompiledMarkers, ExtractError, ExtractionOutcome, Method, Status};
use crate::ingest::VerdictDocument;
use crate::llm::{
    build_prompt_for_text, estimate_cost, fit_document, llm_extract, parse_model_output, GenerationProvider, LlmError, LlmStatus,
    ParseError, PromptSpec, ProviderConfig,
};
use crate::markers::{MarkerSet, PhraseLists};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("setup: {0}")]
    Setup(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("existing results file {path} is corrupt at line {line}")]
    CorruptResults { path: String, line: usize },
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    AdvancedRules,
    LlmFallback,
}

/// The cascade always runs rules before the model.
pub const STAGE_ORDER: [Stage; 2] = [Stage::AdvancedRules, Stage::LlmFallback];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub marker_set_path: Option<PathBuf>,
    pub provider: ProviderConfig,
    pub ground_threshold: f64,
    pub concurrency_bound: usize,
    pub output_path: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            marker_set_path: None,
            provider: ProviderConfig::default(),
            ground_threshold: 0.5,
            concurrency_bound: 4,
            output_path: None,
        }
    }
}

impl PipelineConfig {
    pub fn stage_order(&self) -> [Stage; 2] {
        STAGE_ORDER
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.provider.validate()?;
        if !(0.0..=1.0).contains(&self.ground_threshold) {
            return Err(PipelineError::Setup(format!(
                "ground_threshold {} outside [0, 1]",
                self.ground_threshold
            )));
        }
        if self.concurrency_bound == 0 {
            return Err(PipelineError::Setup("concurrency_bound must be positive".into()));
        }
        Ok(())
    }
}

/// Counting semaphore bounding provider calls in flight.
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Gate {
    fn new(n: usize) -> Self {
        Self {
            free: Mutex::new(n),
            cv: Condvar::new(),
        }
    }

    fn run<T>(&self, f: impl FnOnce() -> T) -> T {
        let mut free = self.cv.wait_while(self.free.lock().expect("gate"), |n| *n == 0).expect("gate");
        *free -= 1;
        drop(free);
        let out = f();
        *self.free.lock().expect("gate") += 1;
        self.cv.notify_one();
        out
    }
}

/// What one document cost the provider.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LlmUsage {
    pub calls: usize,
    pub cost_usd: f64,
}

/// Advanced rules with model fallback. Model output is always grounded.
pub struct Cascade<'p> {
    compiled: CompiledMarkers,
    prompt: PromptSpec,
    provider: &'p dyn GenerationProvider,
    config: ProviderConfig,
    ground_threshold: f64,
    gate: Gate,
}

impl<'p> Cascade<'p> {
    pub fn new(markers: &MarkerSet, provider: &'p dyn GenerationProvider, config: &PipelineConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        Ok(Self {
            compiled: CompiledMarkers::new(markers)?,
            prompt: PromptSpec::default_for(markers),
            provider,
            config: config.provider.clone(),
            ground_threshold: config.ground_threshold,
            gate: Gate::new(config.provider.max_in_flight),
        })
    }

    pub fn with_prompt(mut self, prompt: PromptSpec) -> Self {
        self.prompt = prompt;
        self
    }

    pub fn prompt(&self) -> &PromptSpec {
        &self.prompt
    }

    pub fn extract(&self, doc: &VerdictDocument) -> (ExtractionOutcome, LlmUsage) {
        let rules = advanced_extract(doc, &self.compiled);
        if rules.is_extracted() {
            let mut out = rules.with_score(1.0);
            out.method = Method::Combined;
            out.diagnostics = "rules".into();
            return (out, LlmUsage::default());
        }
        self.model(doc, Method::Combined)
    }

    /// The model path alone, without trying rules first.
    pub fn llm_only(&self, doc: &VerdictDocument) -> (ExtractionOutcome, LlmUsage) {
        self.model(doc, Method::Llm)
    }

    fn model(&self, doc: &VerdictDocument, method: Method) -> (ExtractionOutcome, LlmUsage) {
        let id = doc.doc_id.as_str();
        let fail = |why: String| ExtractionOutcome::failed(id, method, why);
        let (text, truncated) = fit_document(&doc.raw_text, self.config.max_input_chars);
        let prompt = match build_prompt_for_text(&text, &self.prompt) {
            Ok(p) => p,
            Err(e) => return (fail(format!("llm: {e}")), LlmUsage::default()),
        };
        let result = self.gate.run(|| llm_extract(&prompt, self.provider));
        let output_chars = result.raw_output.as_deref().map_or(0, |s| s.chars().count());
        let cost = estimate_cost(
            prompt.document_chars as i64,
            prompt.template_chars as i64,
            output_chars as i64,
            &self.config,
        )
        .unwrap_or(0.0);
        let usage = LlmUsage { calls: 1, cost_usd: cost };
        let note = if truncated { "llm; input truncated" } else { "llm" };

        let raw = match (result.status, result.raw_output) {
            (LlmStatus::Ok, Some(raw)) => raw,
            (status, _) => {
                let code = serde_json::to_value(status).ok().and_then(|v| v.as_str().map(String::from));
                return (fail(format!("{note}: {}", code.unwrap_or_default())), usage);
            }
        };
        let candidate = match parse_model_output(&raw) {
            Ok(c) => c,
            Err(ParseError::NoStatement) => {
                return (
                    ExtractionOutcome::no_match(id, method, format!("{note}: no factual statement reported")),
                    usage,
                )
            }
            Err(e) => return (fail(format!("{note}: parse error: {e}")), usage),
        };
        if normalize_text(&candidate).is_empty() {
            return (fail(format!("{note}: empty candidate")), usage);
        }
        match ground(&candidate, &doc.raw_text, self.ground_threshold) {
            Ok(Some(g)) => {
                let out = ExtractionOutcome::extracted(id, method, &doc.raw_text, g.start_offset, g.end_offset, note)
                    .with_score(g.score);
                (out, usage)
            }
            Ok(None) => (fail(format!("{note}: not grounded in source")), usage),
            Err(e) => (fail(format!("{note}: {e}")), usage),
        }
    }
}

/// Rules first; the provider only sees documents the rules could not handle.
pub fn extract_combined(doc: &VerdictDocument, cascade: &Cascade<'_>) -> ExtractionOutcome {
    cascade.extract(doc).0
}

/// Extraction method for a whole run.
pub enum Extractor<'p> {
    Baseline(PhraseLists),
    Advanced(CompiledMarkers),
    Llm(Cascade<'p>),
    Combined(Cascade<'p>),
}

impl Extractor<'_> {
    pub fn method(&self) -> Method {
        match self {
            Extractor::Baseline(_) => Method::Baseline,
            Extractor::Advanced(_) => Method::Advanced,
            Extractor::Llm(_) => Method::Llm,
            Extractor::Combined(_) => Method::Combined,
        }
    }

    pub fn extract(&self, doc: &VerdictDocument) -> (ExtractionOutcome, LlmUsage) {
        match self {
            Extractor::Baseline(p) => {
                let out = baseline_extract(doc, &p.start_markers, &p.end_markers)
                    .unwrap_or_else(|e| ExtractionOutcome::failed(&doc.doc_id, Method::Baseline, e.to_string()));
                (out, LlmUsage::default())
            }
            Extractor::Advanced(m) => (advanced_extract(doc, m), LlmUsage::default()),
            Extractor::Llm(c) => c.llm_only(doc),
            Extractor::Combined(c) => c.extract(doc),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub resume: bool,
    pub concurrency_bound: usize,
    /// Stop after writing this many new records, as if interrupted.
    pub max_docs: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub documents: usize,
    pub skipped: usize,
    pub written: usize,
    pub by_status: BTreeMap<String, usize>,
    pub by_path: BTreeMap<String, usize>,
    pub extraction_rate: f64,
    pub provider_calls: usize,
    pub estimated_cost_usd: f64,
    pub complete: bool,
}

/// Doc ids already present in a results file. A torn last line is cut off.
fn existing_results(path: &Path) -> Result<Vec<ExtractionOutcome>, PipelineError> {
    let mut file = match OpenOptions::new().read(true).write(true).open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_err(path)(e)),
    };
    let mut reader = BufReader::new(&mut file);
    let mut records = Vec::new();
    let mut good_len = 0u64;
    let mut buf = Vec::new();
    let mut line_no = 0;
    loop {
        buf.clear();
        let n = reader.read_until(b'\n', &mut buf).map_err(io_err(path))?;
        if n == 0 {
            break;
        }
        line_no += 1;
        let complete = buf.ends_with(b"\n");
        match serde_json::from_slice::<ExtractionOutcome>(&buf) {
            Ok(r) if complete => {
                records.push(r);
                good_len += n as u64;
            }
            _ if !complete => break,
            _ => {
                return Err(PipelineError::CorruptResults {
                    path: path.display().to_string(),
                    line: line_no,
                })
            }
        }
    }
    drop(reader);
    file.set_len(good_len).map_err(io_err(path))?;
    Ok(records)
}

fn tally(summary: &mut RunSummary, out: &ExtractionOutcome) {
    let status = serde_json::to_value(out.status).expect("status serializes");
    *summary.by_status.entry(status.as_str().unwrap_or_default().to_string()).or_default() += 1;
    if out.status == Status::Extracted {
        let path = match (out.method, out.diagnostics.as_str()) {
            (Method::Combined, "rules") | (Method::Baseline | Method::Advanced, _) => "rules",
            _ => "llm",
        };
        *summary.by_path.entry(path.to_string()).or_default() += 1;
    }
}

/// Run an extractor over a corpus, appending one JSONL record per document
/// in document order.
pub fn run_corpus(
    docs: &[VerdictDocument],
    extractor: &Extractor<'_>,
    output: &Path,
    options: &RunOptions,
) -> Result<RunSummary, PipelineError> {
    let bound = options.concurrency_bound.max(1);
    let mut seen = HashSet::new();
    if let Some(d) = docs.iter().find(|d| !seen.insert(d.doc_id.as_str())) {
        return Err(PipelineError::Setup(format!("duplicate doc_id {:?}", d.doc_id)));
    }

    let previous = if options.resume { existing_results(output)? } else { Vec::new() };
    let mut file = OpenOptions::new()
        .create(true)
        .write(true)
        .truncate(!options.resume)
        .open(output)
        .map_err(|e| PipelineError::Setup(format!("output {} is not writable: {e}", output.display())))?;
    file.seek(SeekFrom::End(0)).map_err(io_err(output))?;

    let mut summary = RunSummary {
        documents: docs.len(),
        ..RunSummary::default()
    };
    let done: HashSet<&str> = previous.iter().map(|r| r.doc_id.as_str()).collect();
    for r in previous.iter().filter(|r| seen.contains(r.doc_id.as_str())) {
        tally(&mut summary, r);
    }
    let pending: Vec<&VerdictDocument> = docs.iter().filter(|d| !done.contains(d.doc_id.as_str())).collect();
    summary.skipped = docs.len() - pending.len();
    let budget = options.max_docs.unwrap_or(usize::MAX).min(pending.len());
    let pending = &pending[..budget];

    let mut writer = std::io::BufWriter::new(&mut file);
    for chunk in pending.chunks(bound * 8) {
        let results = process_chunk(chunk, extractor, bound);
        for (out, usage) in results {
            serde_json::to_writer(&mut writer, &out).map_err(|e| PipelineError::Setup(e.to_string()))?;
            writer.write_all(b"\n").map_err(io_err(output))?;
            tally(&mut summary, &out);
            summary.written += 1;
            summary.provider_calls += usage.calls;
            summary.estimated_cost_usd += usage.cost_usd;
        }
        writer.flush().map_err(io_err(output))?;
    }
    drop(writer);
    file.sync_all().map_err(io_err(output))?;

    let recorded = summary.skipped + summary.written;
    summary.complete = recorded == docs.len();
    let extracted = summary.by_status.get("extracted").copied().unwrap_or(0);
    summary.extraction_rate = if recorded == 0 { 0.0 } else { extracted as f64 / recorded as f64 };
    Ok(summary)
}

fn process_chunk(chunk: &[&VerdictDocument], extractor: &Extractor<'_>, bound: usize) -> Vec<(ExtractionOutcome, LlmUsage)> {
    let slots: Vec<Mutex<Option<(ExtractionOutcome, LlmUsage)>>> = chunk.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..bound.min(chunk.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(doc) = chunk.get(i) else { break };
                *slots[i].lock().expect("slot") = Some(extractor.extract(doc));
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("slot").expect("every document processed"))
        .collect()
}

/// Load a results file written by `run_corpus`.
pub fn read_results(path: &Path) -> Result<Vec<ExtractionOutcome>, PipelineError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|_| PipelineError::CorruptResults {
            path: path.display().to_string(),
            line: i + 1,
        })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{LlmResult, StubProvider};

    fn doc(id: &str, text: &str) -> VerdictDocument {
        VerdictDocument::new(id, "c", "1T/1/2020", Some(2020), text).unwrap()
    }

    fn echo(answer: &'static str) -> StubProvider {
        StubProvider::fixed(LlmResult::ok(format!("{{\"fact_sentence\": \"{answer}\"}}"), 100, 10))
    }

    #[test]
    fn rules_success_never_calls_provider() {
        let stub = echo("whatever");
        let c = Cascade::new(&MarkerSet::default_set(), &stub, &PipelineConfig::default()).unwrap();
        let o = extract_combined(&doc("a", "X is found guilty that he stole a bike, therefore"), &c);
        assert_eq!(o.text.as_deref(), Some("he stole a bike,"));
        assert_eq!((o.method, o.diagnostics.as_str(), o.score), (Method::Combined, "rules", Some(1.0)));
        assert_eq!(stub.calls(), 0);
    }

    #[test]
    fn llm_path_is_grounded() {
        let stub = echo("on Monday he tok a bycicle");
        let c = Cascade::new(&MarkerSet::default_set(), &stub, &PipelineConfig::default()).unwrap();
        let d = doc("a", "The court decided: on Monday he took a bicycle. Sentence follows.");
        let o = extract_combined(&d, &c);
        assert_eq!(stub.calls(), 1);
        assert_eq!(o.diagnostics, "llm");
        assert_eq!(o.text.as_deref(), Some("on Monday he took a bicycle"));
        assert!(o.is_verbatim_in(&d.raw_text));
        assert_eq!(o.score, Some(1.0 - 3.0 / 27.0));
    }

    #[test]
    fn invented_text_is_rejected() {
        let stub = echo("zzzz qqqq xxxx wwww");
        let c = Cascade::new(&MarkerSet::default_set(), &stub, &PipelineConfig::default()).unwrap();
        let o = extract_combined(&doc("a", "The court decided about a bicycle."), &c);
        assert_eq!(o.status, Status::Failed);
        assert!(o.diagnostics.contains("not grounded"));
    }

    #[test]
    fn failures_carry_reasons() {
        let d = doc("a", "nothing relevant here");
        let cases = [
            (LlmResult::refused(LlmStatus::SafetyFlagged, 1), Status::Failed, "safety_flagged"),
            (LlmResult::refused(LlmStatus::TokenLimitExceeded, 1), Status::Failed, "token_limit_exceeded"),
            (LlmResult::ok("sorry", 1, 1), Status::Failed, "parse error"),
            (LlmResult::ok("{\"fact_sentence\": null}", 1, 1), Status::NoMatch, "no factual statement"),
        ];
        for (r, status, why) in cases {
            let stub = StubProvider::fixed(r);
            let c = Cascade::new(&MarkerSet::default_set(), &stub, &PipelineConfig::default()).unwrap();
            let o = extract_combined(&d, &c);
            assert_eq!(o.status, status);
            assert!(o.diagnostics.contains(why), "{}", o.diagnostics);
        }
    }

    #[test]
    fn stage_order_is_fixed() {
        assert_eq!(PipelineConfig::default().stage_order(), [Stage::AdvancedRules, Stage::LlmFallback]);
    }

    #[test]
    fn empty_corpus() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("r.jsonl");
        let ex = Extractor::Advanced(CompiledMarkers::new(&MarkerSet::default_set()).unwrap());
        let s = run_corpus(&[], &ex, &out, &RunOptions::default()).unwrap();
        assert_eq!((s.documents, s.written, s.provider_calls, s.estimated_cost_usd), (0, 0, 0, 0.0));
        assert!(s.complete);
        assert_eq!(std::fs::read_to_string(&out).unwrap(), "");
    }

    #[test]
    fn unwritable_output_is_setup_error() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("missing").join("r.jsonl");
        let ex = Extractor::Advanced(CompiledMarkers::new(&MarkerSet::default_set()).unwrap());
        let r = run_corpus(&[doc("a", "x")], &ex, &out, &RunOptions::default());
        assert!(matches!(r, Err(PipelineError::Setup(_))));
    }

    #[test]
    fn torn_line_is_dropped_on_resume() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("r.jsonl");
        let docs = vec![doc("a", "X is found guilty that y, thus"), doc("b", "none")];
        let ex = Extractor::Advanced(CompiledMarkers::new(&MarkerSet::default_set()).unwrap());
        let full = run_corpus(&docs, &ex, &out, &RunOptions::default()).unwrap();
        assert!(full.complete);
        let reference = std::fs::read_to_string(&out).unwrap();
        let first = reference.lines().next().unwrap();
        std::fs::write(&out, format!("{first}\n{{\"doc_id\":\"b\",\"met")).unwrap();
        let opts = RunOptions {
            resume: true,
            ..RunOptions::default()
        };
        let resumed = run_corpus(&docs, &ex, &out, &opts).unwrap();
        assert_eq!((resumed.skipped, resumed.written), (1, 1));
        assert_eq!(std::fs::read_to_string(&out).unwrap(), reference);
        assert_eq!(resumed.by_status, full.by_status);
    }

    #[test]
    fn corrupt_middle_line_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("r.jsonl");
        std::fs::write(&out, "garbage\n").unwrap();
        let ex = Extractor::Advanced(CompiledMarkers::new(&MarkerSet::default_set()).unwrap());
        let opts = RunOptions {
            resume: true,
            ..RunOptions::default()
        };
        assert!(matches!(
            run_corpus(&[doc("a", "x")], &ex, &out, &opts),
            Err(PipelineError::CorruptResults { line: 1, .. })
        ));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let ex = Extractor::Advanced(CompiledMarkers::new(&MarkerSet::default_set()).unwrap());
        let r = run_corpus(&[doc("a", "x"), doc("a", "y")], &ex, &dir.path().join("r"), &RunOptions::default());
        assert!(matches!(r, Err(PipelineError::Setup(_))));
    }

    #[test]
    fn gate_bounds_in_flight() {
        let gate = Gate::new(2);
        let now = AtomicUsize::new(0);
        let peak = AtomicUsize::new(0);
        std::thread::scope(|s| {
            for _ in 0..8 {
                s.spawn(|| {
                    gate.run(|| {
                        let n = now.fetch_add(1, Ordering::SeqCst) + 1;
                        peak.fetch_max(n, Ordering::SeqCst);
                        std::thread::sleep(std::time::Duration::from_millis(5));
                        now.fetch_sub(1, Ordering::SeqCst);
                    })
                });
            }
        });
        assert!(peak.load(Ordering::SeqCst) <= 2);
    }
}
