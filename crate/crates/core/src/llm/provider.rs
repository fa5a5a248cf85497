use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{GenerationProvider, LlmError, LlmResult, LlmStatus};

/// Hex SHA-256 of the prompt text; the replay lookup key.
pub fn prompt_hash(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

type Responder = Box<dyn Fn(&str) -> LlmResult + Send + Sync>;

/// Deterministic in-process provider that counts its calls.
pub struct StubProvider {
    respond: Responder,
    calls: AtomicUsize,
}

impl StubProvider {
    pub fn from_fn(f: impl Fn(&str) -> LlmResult + Send + Sync + 'static) -> Self {
        Self {
            respond: Box::new(f),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn fixed(result: LlmResult) -> Self {
        Self::from_fn(move |_| result.clone())
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl GenerationProvider for StubProvider {
    fn generate(&self, prompt: &str) -> LlmResult {
        self.calls.fetch_add(1, Ordering::SeqCst);
        (self.respond)(prompt)
    }
}

/// One recorded response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayEntry {
    pub prompt_hash: String,
    pub status: LlmStatus,
    #[serde(default)]
    pub raw_output: Option<String>,
    #[serde(default)]
    pub input_tokens: u64,
    #[serde(default)]
    pub output_tokens: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doc_id: Option<String>,
}

impl ReplayEntry {
    pub fn new(prompt: &str, result: &LlmResult) -> Self {
        Self {
            prompt_hash: prompt_hash(prompt),
            status: result.status,
            raw_output: result.raw_output.clone(),
            input_tokens: result.input_tokens,
            output_tokens: result.output_tokens,
            doc_id: None,
        }
    }

    fn result(&self) -> LlmResult {
        LlmResult {
            status: self.status,
            raw_output: self.raw_output.clone(),
            input_tokens: self.input_tokens,
            output_tokens: self.output_tokens,
        }
    }
}

/// Plays back recorded responses keyed by prompt hash. Unknown prompts get
/// a transport error.
#[derive(Debug, Default)]
pub struct ReplayProvider {
    entries: HashMap<String, ReplayEntry>,
    calls: AtomicUsize,
    misses: AtomicUsize,
}

impl ReplayProvider {
    pub fn new(entries: impl IntoIterator<Item = ReplayEntry>) -> Self {
        let mut map = HashMap::new();
        for e in entries {
            // first recording of a prompt wins
            map.entry(e.prompt_hash.clone()).or_insert(e);
        }
        Self {
            entries: map,
            ..Self::default()
        }
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self, LlmError> {
        let mut entries = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|source| LlmError::Io {
                path: "<replay>".into(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let e: ReplayEntry = serde_json::from_str(&line).map_err(|e| LlmError::Replay {
                line: i + 1,
                msg: e.to_string(),
            })?;
            if (e.status == LlmStatus::Ok) != e.raw_output.is_some() {
                return Err(LlmError::Replay {
                    line: i + 1,
                    msg: "raw_output must be present exactly when status is ok".into(),
                });
            }
            entries.push(e);
        }
        Ok(Self::new(entries))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| LlmError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::read(std::io::BufReader::new(file))
    }

    pub fn write<W: Write>(entries: &[ReplayEntry], mut out: W) -> std::io::Result<()> {
        for e in entries {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::SeqCst)
    }
}

impl GenerationProvider for ReplayProvider {
    fn generate(&self, prompt: &str) -> LlmResult {
        self.calls.fetch_add(1, Ordering::SeqCst);
        match self.entries.get(&prompt_hash(prompt)) {
            Some(e) => e.result(),
            None => {
                self.misses.fetch_add(1, Ordering::SeqCst);
                LlmResult::refused(LlmStatus::TransportError, 0)
            }
        }
    }
}
