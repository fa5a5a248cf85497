//! Re-download of registry cases missing from the dump.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::dump::DumpRecord;
use super::{AdminRecord, DocSource, IngestError, LinkKey, VerdictDocument};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RetrievalError {
    #[error("not found")]
    NotFound,
    #[error("rate limited")]
    RateLimited,
    #[error("transport: {0}")]
    Transport(String),
}

impl RetrievalError {
    fn retryable(&self) -> bool {
        !matches!(self, RetrievalError::NotFound)
    }

    fn reason(&self) -> FailureReason {
        match self {
            RetrievalError::NotFound => FailureReason::NotFound,
            RetrievalError::RateLimited => FailureReason::RateLimited,
            RetrievalError::Transport(_) => FailureReason::TransportError,
        }
    }
}

/// Looks up one decision by its registry row.
pub trait DocumentRetriever: Send + Sync {
    fn retrieve(&self, record: &AdminRecord) -> Result<VerdictDocument, RetrievalError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    NotFound,
    TransportError,
    RateLimited,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FetchFailure {
    pub record: AdminRecord,
    pub reason: FailureReason,
    pub attempts: u32,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FetchPolicy {
    pub max_retries: u32,
    /// Pause between consecutive requests of one worker.
    #[serde(with = "millis", rename = "interval_ms")]
    pub interval: Duration,
    /// Maximum requests in flight.
    pub concurrency: usize,
}

impl Default for FetchPolicy {
    fn default() -> Self {
        Self {
            max_retries: 3,
            interval: Duration::from_millis(500),
            concurrency: 4,
        }
    }
}

mod millis {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}

impl FetchPolicy {
    pub fn validate(&self) -> Result<(), IngestError> {
        if self.concurrency == 0 {
            return Err(IngestError::Setup("concurrency must be at least 1".into()));
        }
        if self.max_retries > 100 {
            return Err(IngestError::Setup(format!("max_retries {} is unreasonable", self.max_retries)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FetchOutcome {
    pub documents: Vec<VerdictDocument>,
    pub failures: Vec<FetchFailure>,
    pub requests: usize,
}

enum Attempted {
    Found(VerdictDocument),
    Failed(FetchFailure),
}

fn fetch_one(
    record: &AdminRecord,
    retriever: &dyn DocumentRetriever,
    policy: &FetchPolicy,
    requests: &AtomicUsize,
) -> Attempted {
    let mut attempts = 0;
    loop {
        if attempts > 0 && !policy.interval.is_zero() {
            std::thread::sleep(policy.interval);
        }
        attempts += 1;
        requests.fetch_add(1, Ordering::Relaxed);
        match retriever.retrieve(record) {
            Ok(doc) => return Attempted::Found(doc.with_source(DocSource::ApiFetch)),
            Err(e) if e.retryable() && attempts <= policy.max_retries => continue,
            Err(e) => {
                return Attempted::Failed(FetchFailure {
                    record: record.clone(),
                    reason: e.reason(),
                    attempts,
                    detail: e.to_string(),
                })
            }
        }
    }
}

/// Query the retriever for every unmatched registry row.
///
/// Each row is tried at most `1 + max_retries` times; only transport errors
/// and rate limiting are retried. Results come back in input order.
pub fn fetch_missing(
    unmatched: &[AdminRecord],
    retriever: &dyn DocumentRetriever,
    policy: &FetchPolicy,
) -> Result<FetchOutcome, IngestError> {
    policy.validate()?;
    let requests = AtomicUsize::new(0);
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Attempted>>> = unmatched.iter().map(|_| Mutex::new(None)).collect();

    let workers = policy.concurrency.min(unmatched.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| {
                let mut first = true;
                loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= unmatched.len() {
                        break;
                    }
                    if !first && !policy.interval.is_zero() {
                        std::thread::sleep(policy.interval);
                    }
                    first = false;
                    let result = fetch_one(&unmatched[i], retriever, policy, &requests);
                    *slots[i].lock().expect("slot lock") = Some(result);
                }
            });
        }
    });

    let mut out = FetchOutcome {
        requests: requests.into_inner(),
        ..FetchOutcome::default()
    };
    for slot in slots {
        match slot.into_inner().expect("slot lock").expect("every row attempted") {
            Attempted::Found(doc) => out.documents.push(doc),
            Attempted::Failed(f) => out.failures.push(f),
        }
    }
    Ok(out)
}

/// Scripted retriever for offline runs and tests.
///
/// Rows without a script answer `NotFound`. A script is consumed one
/// response per request; the last response repeats once the script runs out.
#[derive(Default)]
pub struct StubRetriever {
    scripts: HashMap<LinkKey, Mutex<Vec<Result<String, RetrievalError>>>>,
    calls: AtomicUsize,
}

impl StubRetriever {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_document(self, record: &AdminRecord, text: &str) -> Self {
        self.with_script(record, vec![Ok(text.to_string())])
    }

    pub fn with_script(mut self, record: &AdminRecord, script: Vec<Result<String, RetrievalError>>) -> Self {
        let key = record.key().expect("stub record has a docket");
        let mut script = script;
        script.reverse();
        self.scripts.insert(key, Mutex::new(script));
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

impl DocumentRetriever for StubRetriever {
    fn retrieve(&self, record: &AdminRecord) -> Result<VerdictDocument, RetrievalError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        let key = record.key().map_err(|e| RetrievalError::Transport(e.to_string()))?;
        let Some(script) = self.scripts.get(&key) else {
            return Err(RetrievalError::NotFound);
        };
        let mut script = script.lock().expect("script lock");
        let response = if script.len() > 1 {
            script.pop().expect("non-empty")
        } else {
            script.last().cloned().unwrap_or(Err(RetrievalError::NotFound))
        };
        let text = response?;
        VerdictDocument::new(
            format!("api:{}|{}", record.court_name, record.docket_number),
            record.court_name.clone(),
            record.docket_number.clone(),
            Some(record.decision_year),
            text,
        )
        .map_err(|e| RetrievalError::Transport(e.to_string()))
    }
}

/// Retriever for an HTTP search endpoint.
///
/// Issues `GET <endpoint>?docket=..&court=..` and expects a dump-shaped JSON
/// record. 404 maps to not-found, 429 to rate-limited, anything else that is
/// not a 2xx to a transport error.
pub struct HttpRetriever {
    client: reqwest::blocking::Client,
    endpoint: reqwest::Url,
    api_key: Option<String>,
}

impl HttpRetriever {
    pub fn new(endpoint: &str, timeout: Duration, api_key: Option<String>) -> Result<Self, IngestError> {
        let endpoint = reqwest::Url::parse(endpoint)
            .map_err(|e| IngestError::Setup(format!("bad endpoint {endpoint:?}: {e}")))?;
        if !matches!(endpoint.scheme(), "http" | "https") {
            return Err(IngestError::Setup(format!("unsupported scheme {}", endpoint.scheme())));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| IngestError::Setup(e.to_string()))?;
        Ok(Self {
            client,
            endpoint,
            api_key,
        })
    }
}

impl DocumentRetriever for HttpRetriever {
    fn retrieve(&self, record: &AdminRecord) -> Result<VerdictDocument, RetrievalError> {
        let mut req = self
            .client
            .get(self.endpoint.clone())
            .query(&[("docket", &record.docket_number), ("court", &record.court_name)]);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| RetrievalError::Transport(e.to_string()))?;
        match resp.status().as_u16() {
            404 => return Err(RetrievalError::NotFound),
            429 => return Err(RetrievalError::RateLimited),
            s if !(200..300).contains(&s) => return Err(RetrievalError::Transport(format!("HTTP {s}"))),
            _ => {}
        }
        let rec: DumpRecord = resp.json().map_err(|e| RetrievalError::Transport(e.to_string()))?;
        let text = rec.text.filter(|t| !t.is_empty()).ok_or(RetrievalError::NotFound)?;
        let court = rec.court.unwrap_or_else(|| record.court_name.clone());
        let docket = rec.docket.unwrap_or_else(|| record.docket_number.clone());
        let id = rec.id.unwrap_or_else(|| format!("api:{court}|{docket}"));
        VerdictDocument::new(id, court, docket, rec.year.or(Some(record.decision_year)), text)
            .map_err(|e| RetrievalError::Transport(e.to_string()))
    }
}
