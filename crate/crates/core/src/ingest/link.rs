use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::admin::check_unique;
use super::{AdminRecord, DocSource, IngestError, LinkKey, VerdictDocument};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CourtCoverage {
    pub attempted: usize,
    pub matched: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkageReport {
    pub total_admin: usize,
    pub matched_dump: usize,
    pub matched_api: usize,
    pub unmatched: usize,
    /// Keyed by folded court name.
    pub per_court: BTreeMap<String, CourtCoverage>,
}

impl LinkageReport {
    pub fn linked(&self) -> usize {
        self.matched_dump + self.matched_api
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if self.linked() + self.unmatched != self.total_admin {
            return Err(IngestError::Invariant(format!(
                "{} + {} + {} != {}",
                self.matched_dump, self.matched_api, self.unmatched, self.total_admin
            )));
        }
        for (court, c) in &self.per_court {
            let expected = if c.attempted == 0 {
                0.0
            } else {
                c.matched as f64 / c.attempted as f64
            };
            if c.matched > c.attempted || (c.rate - expected).abs() > 1e-12 {
                return Err(IngestError::Invariant(format!("court {court:?} rate {}", c.rate)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkedPair {
    pub admin: AdminRecord,
    pub doc_id: String,
    pub source: DocSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Linkage {
    pub report: LinkageReport,
    pub pairs: Vec<LinkedPair>,
    pub unmatched: Vec<AdminRecord>,
}

/// Link documents to registry rows on (normalized docket, normalized court).
///
/// When several documents share a key, dump documents win over fetched ones
/// and then the smallest `doc_id`, so the outcome does not depend on input order.
pub fn link_corpus(docs: &[VerdictDocument], admin: &[AdminRecord]) -> Result<Linkage, IngestError> {
    check_unique(admin)?;

    let mut by_key: HashMap<LinkKey, &VerdictDocument> = HashMap::new();
    for doc in docs {
        let Ok(key) = doc.linkage_key() else { continue };
        by_key
            .entry(key)
            .and_modify(|cur| {
                let rank = |d: &VerdictDocument| (d.source != DocSource::Dump, d.doc_id.clone());
                if rank(doc) < rank(cur) {
                    *cur = doc;
                }
            })
            .or_insert(doc);
    }

    let mut keyed: Vec<(LinkKey, &AdminRecord)> = admin
        .iter()
        .map(|r| r.key().map(|k| (k, r)))
        .collect::<Result<_, _>>()?;
    keyed.sort_by(|a, b| a.0.cmp(&b.0));

    let mut report = LinkageReport {
        total_admin: admin.len(),
        matched_dump: 0,
        matched_api: 0,
        unmatched: 0,
        per_court: BTreeMap::new(),
    };
    let mut pairs = Vec::new();
    let mut unmatched = Vec::new();
    for (key, rec) in keyed {
        let court = report.per_court.entry(key.court.clone()).or_insert(CourtCoverage {
            attempted: 0,
            matched: 0,
            rate: 0.0,
        });
        court.attempted += 1;
        match by_key.get(&key) {
            Some(doc) => {
                court.matched += 1;
                match doc.source {
                    DocSource::Dump => report.matched_dump += 1,
                    DocSource::ApiFetch => report.matched_api += 1,
                }
                pairs.push(LinkedPair {
                    admin: rec.clone(),
                    doc_id: doc.doc_id.clone(),
                    source: doc.source,
                });
            }
            None => {
                report.unmatched += 1;
                unmatched.push(rec.clone());
            }
        }
    }
    for c in report.per_court.values_mut() {
        c.rate = c.matched as f64 / c.attempted as f64;
    }
    Ok(Linkage {
        report,
        pairs,
        unmatched,
    })
}
