//! Rule-based fact-sentence extraction.

mod advanced;
mod baseline;
mod tolerant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::CharIndex;

pub use advanced::{advanced_extract, CompiledMarkers};
pub use baseline::baseline_extract;
pub use tolerant::{compile_tolerant, CompactText, RawMatch, TolerantPattern};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExtractError {
    #[error("cannot compile an empty phrase")]
    EmptyPhrase,
    #[error("{0} phrase list is empty")]
    EmptyList(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Baseline,
    Advanced,
    Llm,
    Combined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Extracted,
    NoMatch,
    Failed,
}

/// Result of one extraction attempt on one document.
///
/// Offsets are char positions in the document's raw text and `text` is the
/// exact slice between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionOutcome {
    pub doc_id: String,
    pub method: Method,
    pub status: Status,
    pub start: Option<usize>,
    pub end: Option<usize>,
    pub text: Option<String>,
    /// Confidence proxy: 1.0 for rule extractions, the grounding score for the LLM path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    pub diagnostics: String,
}

impl ExtractionOutcome {
    pub fn extracted(
        doc_id: &str,
        method: Method,
        raw_text: &str,
        start: usize,
        end: usize,
        diagnostics: impl Into<String>,
    ) -> Self {
        let index = CharIndex::new(raw_text);
        Self {
            doc_id: doc_id.to_string(),
            method,
            status: Status::Extracted,
            start: Some(start),
            end: Some(end),
            text: Some(index.slice(raw_text, start, end).to_string()),
            score: None,
            diagnostics: diagnostics.into(),
        }
    }

    pub fn no_match(doc_id: &str, method: Method, reason: impl Into<String>) -> Self {
        Self::empty(doc_id, method, Status::NoMatch, reason.into())
    }

    pub fn failed(doc_id: &str, method: Method, reason: impl Into<String>) -> Self {
        Self::empty(doc_id, method, Status::Failed, reason.into())
    }

    fn empty(doc_id: &str, method: Method, status: Status, diagnostics: String) -> Self {
        Self {
            doc_id: doc_id.to_string(),
            method,
            status,
            start: None,
            end: None,
            text: None,
            score: None,
            diagnostics,
        }
    }

    pub fn with_score(mut self, score: f64) -> Self {
        self.score = Some(score);
        self
    }

    pub fn is_extracted(&self) -> bool {
        self.status == Status::Extracted
    }

    /// Check the structural invariants against the source text.
    pub fn is_verbatim_in(&self, raw_text: &str) -> bool {
        match (self.status, self.start, self.end, &self.text) {
            (Status::Extracted, Some(s), Some(e), Some(t)) => {
                s < e && crate::text::char_slice(raw_text, s, e) == Some(t.as_str())
            }
            (Status::Extracted, ..) => false,
            (_, None, None, None) => true,
            _ => false,
        }
    }
}

/// Shrink a char range so it neither starts nor ends with whitespace.
pub(crate) fn trim_range(chars: &[char], mut start: usize, mut end: usize) -> Option<(usize, usize)> {
    while start < end && chars[start].is_whitespace() {
        start += 1;
    }
    while end > start && chars[end - 1].is_whitespace() {
        end -= 1;
    }
    (start < end).then_some((start, end))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outcome_serializes_to_record_shape() {
        let o = ExtractionOutcome::extracted("d1", Method::Advanced, "ab cd", 3, 5, "rules");
        let v = serde_json::to_value(&o).unwrap();
        assert_eq!(
            v,
            serde_json::json!({"doc_id":"d1","method":"advanced","status":"extracted","start":3,"end":5,"text":"cd","diagnostics":"rules"})
        );
        let n = ExtractionOutcome::no_match("d2", Method::Baseline, "no start phrase");
        let v = serde_json::to_value(&n).unwrap();
        assert_eq!(v["start"], serde_json::Value::Null);
        assert!(n.is_verbatim_in("anything"));
    }

    #[test]
    fn verbatim_check_catches_tampering() {
        let mut o = ExtractionOutcome::extracted("d", Method::Llm, "Súd rozhodol", 4, 12, "");
        assert!(o.is_verbatim_in("Súd rozhodol"));
        o.text = Some("rozhodol.".into());
        assert!(!o.is_verbatim_in("Súd rozhodol"));
    }

    #[test]
    fn trims_whitespace() {
        let chars: Vec<char> = "  ab \n".chars().collect();
        assert_eq!(trim_range(&chars, 0, chars.len()), Some((2, 4)));
        assert_eq!(trim_range(&chars, 0, 2), None);
    }
}
