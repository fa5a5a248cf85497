//! Decision corpus ingestion and linkage against the administrative registry.

mod admin;
mod coverage;
mod dump;
mod fetch;
mod link;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use admin::{load_admin, parse_admin, write_admin, AdminRecord};
pub use coverage::{coverage_report, CoverageOptions};
pub use dump::{load_corpus_dir, parse_dump, write_dump, DumpParse, DumpRecord, YearRange};
pub use fetch::{
    fetch_missing, DocumentRetriever, FailureReason, FetchFailure, FetchOutcome, FetchPolicy,
    HttpRetriever, RetrievalError, StubRetriever,
};
pub use link::{link_corpus, CourtCoverage, LinkageReport, LinkedPair, Linkage};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read input: {0}")]
    Io(#[from] std::io::Error),
    #[error("docket number is empty")]
    EmptyDocket,
    #[error("document {0} has empty text")]
    EmptyText(String),
    #[error("admin registry: {0}")]
    Admin(String),
    #[error("duplicate admin key (docket {docket:?}, court {court:?})")]
    DuplicateAdminKey { docket: String, court: String },
    #[error("retriever setup: {0}")]
    Setup(String),
    #[error("coverage report invariant violated: {0}")]
    Invariant(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocSource {
    Dump,
    ApiFetch,
}

/// One court decision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictDocument {
    pub doc_id: String,
    pub court_name: String,
    pub docket_number: String,
    pub decision_year: Option<i32>,
    pub raw_text: String,
    pub source: DocSource,
}

impl VerdictDocument {
    pub fn new(
        doc_id: impl Into<String>,
        court_name: impl Into<String>,
        docket_number: impl Into<String>,
        decision_year: Option<i32>,
        raw_text: impl Into<String>,
    ) -> Result<Self, IngestError> {
        let doc_id = doc_id.into();
        let raw_text = raw_text.into();
        if raw_text.is_empty() {
            return Err(IngestError::EmptyText(doc_id));
        }
        Ok(Self {
            doc_id,
            court_name: court_name.into(),
            docket_number: docket_number.into(),
            decision_year,
            raw_text,
            source: DocSource::Dump,
        })
    }

    pub fn with_source(mut self, source: DocSource) -> Self {
        self.source = source;
        self
    }

    pub fn linkage_key(&self) -> Result<LinkKey, IngestError> {
        LinkKey::new(&self.docket_number, &self.court_name)
    }
}

/// Canonical docket key: trimmed, inner whitespace collapsed, lowercased.
pub fn normalize_docket(raw: &str) -> Result<String, IngestError> {
    let key = raw.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    if key.is_empty() {
        return Err(IngestError::EmptyDocket);
    }
    Ok(key)
}

/// Court names fold diacritics as well, through the shared text normalizer.
pub fn normalize_court(raw: &str) -> String {
    crate::align::normalize_text(raw).folded
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinkKey {
    pub docket: String,
    pub court: String,
}

impl LinkKey {
    pub fn new(docket: &str, court: &str) -> Result<Self, IngestError> {
        Ok(Self {
            docket: normalize_docket(docket)?,
            court: normalize_court(court),
        })
    }
}
