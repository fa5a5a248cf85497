//! Annotated opener/closer inventories for fact sentences.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::normalize_text;

#[derive(Debug, Error)]
pub enum MarkerError {
    #[error("cannot read marker config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed marker config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0} marker list is empty")]
    EmptyList(&'static str),
    #[error("marker phrase {0:?} folds to nothing")]
    EmptyPhrase(String),
    #[error("phrase {0:?} is listed both as start and end marker")]
    CrossListed(String),
}

/// Phrase lists exactly as written in a config file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhraseLists {
    pub start_markers: Vec<String>,
    pub end_markers: Vec<String>,
}

impl PhraseLists {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, MarkerError> {
        let path = path.as_ref();
        let body = std::fs::read_to_string(path).map_err(|source| MarkerError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(serde_json::from_str(&body)?)
    }
}

/// Validated marker inventory; phrases are stored folded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MarkerSet {
    start_markers: Vec<String>,
    end_markers: Vec<String>,
}

impl MarkerSet {
    pub fn new<S: AsRef<str>>(start: &[S], end: &[S]) -> Result<Self, MarkerError> {
        let start_markers = fold_list(start, "start")?;
        let end_markers = fold_list(end, "end")?;
        if let Some(p) = start_markers.iter().find(|p| end_markers.contains(p)) {
            return Err(MarkerError::CrossListed(p.clone()));
        }
        Ok(Self {
            start_markers,
            end_markers,
        })
    }

    pub fn start_markers(&self) -> &[String] {
        &self.start_markers
    }

    pub fn end_markers(&self) -> &[String] {
        &self.end_markers
    }

    /// The typical openers and closers of a guilty verdict, in English translation.
    pub fn default_set() -> Self {
        let lists = default_phrases();
        Self::new(&lists.start_markers, &lists.end_markers).expect("default markers are valid")
    }
}

impl TryFrom<PhraseLists> for MarkerSet {
    type Error = MarkerError;

    fn try_from(lists: PhraseLists) -> Result<Self, Self::Error> {
        Self::new(&lists.start_markers, &lists.end_markers)
    }
}

fn fold_list<S: AsRef<str>>(phrases: &[S], which: &'static str) -> Result<Vec<String>, MarkerError> {
    let mut out: Vec<String> = Vec::with_capacity(phrases.len());
    for p in phrases {
        let folded = normalize_text(p.as_ref()).folded;
        if folded.is_empty() {
            return Err(MarkerError::EmptyPhrase(p.as_ref().to_string()));
        }
        if !out.contains(&folded) {
            out.push(folded);
        }
    }
    if out.is_empty() {
        return Err(MarkerError::EmptyList(which));
    }
    Ok(out)
}

pub fn default_phrases() -> PhraseLists {
    PhraseLists {
        start_markers: [
            "is found guilty that",
            "is found guilty",
            "they are guilty that",
            "is acknowledged as guilty that",
            "is acknowledged guilty that",
        ]
        .map(String::from)
        .to_vec(),
        end_markers: ["therefore", "thus"].map(String::from).to_vec(),
    }
}

pub fn load_marker_set(path: impl AsRef<Path>) -> Result<MarkerSet, MarkerError> {
    PhraseLists::load(path)?.try_into()
}
