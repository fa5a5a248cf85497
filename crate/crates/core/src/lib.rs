//! Extraction of fact sentences from court verdicts.

pub mod align;
pub mod extract;
pub mod ingest;
pub mod markers;
pub mod report;
pub mod sparing;
pub mod text;
pub mod llm;
pub mod pipeline;
pub mod evaluate;
pub mod fixtures;
