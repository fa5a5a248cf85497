//! Effective run configuration.
//!
//! Layers, lowest first: built-in defaults, the `--config` file, command-line
//! flags. Credentials are read from the environment only and never appear in
//! the printed configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use verdict_facts::extract::Method;
use verdict_facts::ingest::{FetchPolicy, YearRange};
use verdict_facts::pipeline::PipelineConfig;

use crate::error::CliError;

/// Bearer token for the model endpoint.
pub const PROVIDER_KEY_ENV: &str = "VERDICT_FACTS_API_KEY";
/// Bearer token for the court document API.
pub const COURT_KEY_ENV: &str = "VERDICT_FACTS_COURT_API_KEY";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub ingest: IngestSettings,
    pub provider: ProviderSettings,
    pub pipeline: PipelineConfig,
    pub extract: ExtractSettings,
    pub evaluation: EvaluationSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestSettings {
    pub years: YearRange,
    /// Per-court success-rate cutoffs reported under the coverage table.
    pub coverage_thresholds: Vec<f64>,
    pub fetch: FetchPolicy,
    pub endpoint: Option<String>,
    pub timeout_ms: u64,
}

impl Default for IngestSettings {
    fn default() -> Self {
        Self {
            years: YearRange::default(),
            coverage_thresholds: vec![0.90, 0.60],
            fetch: FetchPolicy::default(),
            endpoint: None,
            timeout_ms: 30_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Recorded responses keyed by prompt hash.
    #[default]
    Replay,
    /// A live HTTP endpoint.
    Http,
    /// Answers every prompt with "no statement".
    Stub,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderSettings {
    pub backend: Backend,
    pub replay_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractSettings {
    pub method: Method,
}

impl Default for ExtractSettings {
    fn default() -> Self {
        Self { method: Method::Combined }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSettings {
    pub gold_path: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let body = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let cfg: Self = serde_json::from_str(&body)
            .map_err(|e| CliError::new("config", format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.pipeline.validate().map_err(|e| CliError::new("config", e.to_string()))?;
        self.ingest.fetch.validate().map_err(|e| CliError::new("config", e.to_string()))?;
        if self.ingest.years.first > self.ingest.years.last {
            return Err(CliError::new("config", "ingest.years.first is after ingest.years.last"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

pub fn credential(var: &str) -> Option<String> {
    std::env::var(var).ok().filter(|v| !v.is_empty())
}
