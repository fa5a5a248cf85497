//! Prompted extraction through a pluggable text-generation provider.

mod cost;
mod http;
mod parse;
mod prompt;
mod provider;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cost::{estimate_cost, tokens_for};
pub use http::HttpProvider;
pub use parse::{parse_model_output, ParseError, OUTPUT_FIELD};
pub use prompt::{build_prompt, build_prompt_for_text, fit_document, Exemplar, PromptSpec, RenderedPrompt};
pub use provider::{prompt_hash, ReplayEntry, ReplayProvider, StubProvider};

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("invalid provider config: {0}")]
    Config(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed replay line {line}: {msg}")]
    Replay { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LlmStatus {
    Ok,
    TokenLimitExceeded,
    SafetyFlagged,
    TransportError,
}

/// One provider response. `raw_output` is present exactly when the status is ok.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmResult {
    pub status: LlmStatus,
    pub raw_output: Option<String>,
    pub input_tokens: u64,
    pub output_tokens: u64,
}

impl LlmResult {
    pub fn ok(raw_output: impl Into<String>, input_tokens: u64, output_tokens: u64) -> Self {
        Self {
            status: LlmStatus::Ok,
            raw_output: Some(raw_output.into()),
            input_tokens,
            output_tokens,
        }
    }

    pub fn refused(status: LlmStatus, input_tokens: u64) -> Self {
        debug_assert!(status != LlmStatus::Ok);
        Self {
            status,
            raw_output: None,
            input_tokens,
            output_tokens: 0,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == LlmStatus::Ok
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pricing {
    pub input_usd_per_million_tokens: f64,
    pub output_usd_per_million_tokens: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderConfig {
    pub model_name: String,
    pub temperature: f64,
    pub max_output_tokens: u64,
    pub pricing: Pricing,
    pub chars_per_token: f64,
    /// Prompt budget; longer documents lose their middle.
    pub max_input_chars: usize,
    /// Output length assumed when pricing a run ahead of time.
    pub expected_output_chars: u64,
    pub endpoint: Option<String>,
    pub timeout_ms: u64,
    pub max_retries: u32,
    pub max_in_flight: usize,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            model_name: "gemini-2.0-flash".into(),
            temperature: 0.0,
            max_output_tokens: 2048,
            pricing: Pricing {
                input_usd_per_million_tokens: 0.10,
                output_usd_per_million_tokens: 0.40,
            },
            chars_per_token: 4.0,
            max_input_chars: 400_000,
            expected_output_chars: 1257,
            endpoint: None,
            timeout_ms: 60_000,
            max_retries: 3,
            max_in_flight: 4,
        }
    }
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<(), LlmError> {
        let bad = |m: &str| Err(LlmError::Config(m.to_string()));
        if !(self.chars_per_token.is_finite() && self.chars_per_token > 0.0) {
            return bad("chars_per_token must be positive");
        }
        let p = &self.pricing;
        if !(p.input_usd_per_million_tokens >= 0.0 && p.output_usd_per_million_tokens >= 0.0)
            || !p.input_usd_per_million_tokens.is_finite()
            || !p.output_usd_per_million_tokens.is_finite()
        {
            return bad("pricing must be finite and non-negative");
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return bad("temperature must lie in [0, 2]");
        }
        if self.max_in_flight == 0 {
            return bad("max_in_flight must be positive");
        }
        if self.max_input_chars == 0 {
            return bad("max_input_chars must be positive");
        }
        Ok(())
    }
}

/// Single-method generation interface: prompt in, text and token counts out.
pub trait GenerationProvider: Send + Sync {
    fn generate(&self, prompt: &str) -> LlmResult;
}

impl<P: GenerationProvider + ?Sized> GenerationProvider for &P {
    fn generate(&self, prompt: &str) -> LlmResult {
        (**self).generate(prompt)
    }
}

/// One request per call. A provider that claims success without output is
/// reported as a transport error rather than passed on.
pub fn llm_extract(prompt: &RenderedPrompt, provider: &dyn GenerationProvider) -> LlmResult {
    let result = provider.generate(&prompt.text);
    match (&result.status, &result.raw_output) {
        (LlmStatus::Ok, None) => LlmResult::refused(LlmStatus::TransportError, result.input_tokens),
        (LlmStatus::Ok, Some(_)) => result,
        (_, _) => LlmResult {
            raw_output: None,
            ..result
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::VerdictDocument;
    use crate::markers::MarkerSet;

    fn prompt() -> RenderedPrompt {
        let d = VerdictDocument::new("d", "c", "1T/1/2020", Some(2020), "some text").unwrap();
        build_prompt(&d, &PromptSpec::default_for(&MarkerSet::default_set())).unwrap()
    }

    #[test]
    fn stub_echo_is_ok() {
        let stub = StubProvider::fixed(LlmResult::ok("{\"fact_sentence\": \"x\"}", 10, 3));
        let r = llm_extract(&prompt(), &stub);
        assert_eq!(r.status, LlmStatus::Ok);
        assert_eq!(r.raw_output.as_deref(), Some("{\"fact_sentence\": \"x\"}"));
        assert_eq!(stub.calls(), 1);
    }

    #[test]
    fn refusal_carries_no_output() {
        let stub = StubProvider::fixed(LlmResult {
            status: LlmStatus::SafetyFlagged,
            raw_output: Some("partial".into()),
            input_tokens: 5,
            output_tokens: 1,
        });
        let r = llm_extract(&prompt(), &stub);
        assert_eq!(r.status, LlmStatus::SafetyFlagged);
        assert_eq!(r.raw_output, None);
    }

    #[test]
    fn ok_without_output_is_transport_error() {
        let stub = StubProvider::fixed(LlmResult {
            status: LlmStatus::Ok,
            raw_output: None,
            input_tokens: 5,
            output_tokens: 0,
        });
        assert_eq!(llm_extract(&prompt(), &stub).status, LlmStatus::TransportError);
    }

    #[test]
    fn default_config_is_deterministic_and_valid() {
        let c = ProviderConfig::default();
        assert_eq!(c.temperature, 0.0);
        assert_eq!(c.chars_per_token, 4.0);
        c.validate().unwrap();
        let mut bad = c.clone();
        bad.chars_per_token = 0.0;
        assert!(bad.validate().is_err());
        bad = c;
        bad.pricing.output_usd_per_million_tokens = -1.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn config_round_trips_through_json() {
        let c = ProviderConfig::default();
        let back: ProviderConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        let partial: ProviderConfig = serde_json::from_str(r#"{"model_name":"m"}"#).unwrap();
        assert_eq!(partial.chars_per_token, 4.0);
        assert!(serde_json::from_str::<ProviderConfig>(r#"{"modle":"m"}"#).is_err());
    }
}
