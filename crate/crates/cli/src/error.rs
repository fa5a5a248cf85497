use std::fmt;
use std::path::Path;

/// A failure reported as one `error: kind=.. msg=..` line.
#[derive(Debug)]
pub struct CliError {
    pub kind: &'static str,
    pub msg: String,
}

impl CliError {
    pub fn new(kind: &'static str, msg: impl Into<String>) -> Self {
        Self { kind, msg: msg.into() }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self::new("io", format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = self.msg.split_whitespace().collect::<Vec<_>>().join(" ");
        write!(f, "error: kind={} msg={msg:?}", self.kind)
    }
}

macro_rules! kind_from {
    ($($t:ty => $kind:literal),* $(,)?) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::new($kind, e.to_string())
            }
        })*
    };
}

kind_from! {
    verdict_facts::ingest::IngestError => "ingest",
    verdict_facts::markers::MarkerError => "markers",
    verdict_facts::extract::ExtractError => "extract",
    verdict_facts::llm::LlmError => "provider",
    verdict_facts::pipeline::PipelineError => "pipeline",
    verdict_facts::evaluate::EvalError => "evaluate",
    verdict_facts::fixtures::FixtureError => "fixtures",
    serde_json::Error => "format",
}
