use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DocSource, IngestError, VerdictDocument};

/// One line of a decision dump.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DumpRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub court: Option<String>,
    pub docket: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub year: Option<i32>,
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<DocSource>,
}

impl From<&VerdictDocument> for DumpRecord {
    fn from(doc: &VerdictDocument) -> Self {
        Self {
            id: Some(doc.doc_id.clone()),
            court: Some(doc.court_name.clone()),
            docket: Some(doc.docket_number.clone()),
            year: doc.decision_year,
            text: Some(doc.raw_text.clone()),
            source: (doc.source != DocSource::Dump).then_some(doc.source),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearRange {
    pub first: i32,
    pub last: i32,
}

impl Default for YearRange {
    fn default() -> Self {
        Self { first: 2018, last: 2022 }
    }
}

impl YearRange {
    pub fn contains(&self, year: i32) -> bool {
        (self.first..=self.last).contains(&year)
    }
}

#[derive(Debug, Clone, Default)]
pub struct DumpParse {
    pub documents: Vec<VerdictDocument>,
    /// Unparsable lines and records missing text, court or docket.
    pub corrupt: usize,
    pub out_of_range: usize,
    pub duplicates: usize,
}

impl DumpParse {
    fn merge(&mut self, other: DumpParse) {
        self.documents.extend(other.documents);
        self.corrupt += other.corrupt;
        self.out_of_range += other.out_of_range;
        self.duplicates += other.duplicates;
    }
}

fn non_empty(field: Option<String>) -> Option<String> {
    field.filter(|s| !s.trim().is_empty())
}

/// Parse a newline-delimited dump. Bad records are counted, never fatal.
pub fn parse_dump<R: BufRead>(mut reader: R, years: YearRange) -> Result<DumpParse, IngestError> {
    let mut out = DumpParse::default();
    let mut ids = HashSet::new();
    let mut buf = Vec::new();
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        let Ok(line) = std::str::from_utf8(&buf) else {
            out.corrupt += 1;
            continue;
        };
        if line.trim().is_empty() {
            continue;
        }
        let Ok(rec) = serde_json::from_str::<DumpRecord>(line) else {
            out.corrupt += 1;
            continue;
        };
        let (Some(court), Some(docket)) = (non_empty(rec.court), non_empty(rec.docket)) else {
            out.corrupt += 1;
            continue;
        };
        let Some(text) = rec.text.filter(|t| !t.is_empty()) else {
            out.corrupt += 1;
            continue;
        };
        if rec.year.is_some_and(|y| !years.contains(y)) {
            out.out_of_range += 1;
            continue;
        }
        let id = rec.id.unwrap_or_else(|| format!("{court}|{docket}"));
        if !ids.insert(id.clone()) {
            out.duplicates += 1;
            continue;
        }
        let doc = VerdictDocument::new(id, court, docket, rec.year, text)?
            .with_source(rec.source.unwrap_or(DocSource::Dump));
        out.documents.push(doc);
    }
    Ok(out)
}

pub fn write_dump<W: Write>(docs: &[VerdictDocument], mut out: W) -> std::io::Result<()> {
    for doc in docs {
        serde_json::to_writer(&mut out, &DumpRecord::from(doc))?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Load a corpus from a dump file or from every `*.jsonl` file in a directory.
pub fn load_corpus_dir(path: &Path, years: YearRange) -> Result<DumpParse, IngestError> {
    let mut files = Vec::new();
    if path.is_dir() {
        for entry in std::fs::read_dir(path)? {
            let p = entry?.path();
            if p.extension().is_some_and(|e| e == "jsonl") {
                files.push(p);
            }
        }
        files.sort();
    } else {
        files.push(path.to_path_buf());
    }
    let mut all = DumpParse::default();
    for f in files {
        all.merge(parse_dump(BufReader::new(File::open(&f)?), years)?);
    }
    // ids must stay unique across files too
    let mut seen = HashSet::new();
    let before = all.documents.len();
    all.documents.retain(|d| seen.insert(d.doc_id.clone()));
    all.duplicates += before - all.documents.len();
    Ok(all)
}
