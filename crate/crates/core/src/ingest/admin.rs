use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{IngestError, LinkKey};

/// A row of the administrative registry of decided cases.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdminRecord {
    pub docket_number: String,
    pub court_name: String,
    pub decision_year: i32,
}

impl AdminRecord {
    pub fn new(docket: impl Into<String>, court: impl Into<String>, year: i32) -> Self {
        Self {
            docket_number: docket.into(),
            court_name: court.into(),
            decision_year: year,
        }
    }

    pub fn key(&self) -> Result<LinkKey, IngestError> {
        LinkKey::new(&self.docket_number, &self.court_name)
    }
}

/// Parse a comma- or tab-separated registry; the delimiter is taken from the header line.
pub fn parse_admin<R: Read>(mut input: R) -> Result<Vec<AdminRecord>, IngestError> {
    let mut body = String::new();
    input.read_to_string(&mut body)?;
    let header = body.lines().next().unwrap_or_default();
    let delimiter = if header.contains('\t') { b'\t' } else { b',' };

    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let mut records = Vec::new();
    for row in reader.deserialize::<AdminRecord>() {
        let rec = row.map_err(|e| IngestError::Admin(e.to_string()))?;
        records.push(rec);
    }
    check_unique(&records)?;
    Ok(records)
}

pub fn load_admin(path: &Path) -> Result<Vec<AdminRecord>, IngestError> {
    parse_admin(std::fs::File::open(path)?)
}

/// Write rows as a comma-separated registry with a header line.
pub fn write_admin<W: std::io::Write>(records: &[AdminRecord], out: W) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r).map_err(|e| IngestError::Admin(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub(super) fn check_unique(records: &[AdminRecord]) -> Result<(), IngestError> {
    let mut keys = HashSet::new();
    for r in records {
        if !keys.insert(r.key()?) {
            return Err(IngestError::DuplicateAdminKey {
                docket: r.docket_number.clone(),
                court: r.court_name.clone(),
            });
        }
    }
    Ok(())
}
