//! Whitespace- and diacritic-tolerant phrase matching.
//!
//! A tolerant pattern accepts any amount of whitespace between any two
//! adjacent characters of its phrase, and compares letters after folding.
//! Both properties fall out of matching on a *compact* projection of the
//! document: folded chars with every whitespace char removed, each
//! remembering its position in the raw text. A hit must sit on word
//! boundaries of the raw text.

use super::ExtractError;
use crate::align::fold_char;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TolerantPattern {
    pub phrase: String,
    compact: Vec<char>,
}

pub fn compile_tolerant(phrase: &str) -> Result<TolerantPattern, ExtractError> {
    let compact: Vec<char> = phrase
        .chars()
        .filter(|c| !c.is_whitespace())
        .flat_map(fold_char)
        .collect();
    if compact.is_empty() {
        return Err(ExtractError::EmptyPhrase);
    }
    Ok(TolerantPattern {
        phrase: phrase.to_string(),
        compact,
    })
}

/// A matched region of the raw text, as char offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawMatch {
    pub start: usize,
    pub end: usize,
}

/// Folded, whitespace-free view of a document.
#[derive(Debug, Clone)]
pub struct CompactText {
    raw: Vec<char>,
    chars: Vec<char>,
    origin: Vec<usize>,
}

impl CompactText {
    pub fn new(text: &str) -> Self {
        let raw: Vec<char> = text.chars().collect();
        let mut chars = Vec::with_capacity(raw.len());
        let mut origin = Vec::with_capacity(raw.len());
        for (i, &c) in raw.iter().enumerate() {
            if c.is_whitespace() {
                continue;
            }
            for f in fold_char(c) {
                chars.push(f);
                origin.push(i);
            }
        }
        Self { raw, chars, origin }
    }

    pub fn raw_chars(&self) -> &[char] {
        &self.raw
    }

    fn bounded(&self, k: usize, len: usize) -> Option<RawMatch> {
        let last = k + len - 1;
        // a hit must cover whole raw chars
        if k > 0 && self.origin[k - 1] == self.origin[k] {
            return None;
        }
        if last + 1 < self.origin.len() && self.origin[last + 1] == self.origin[last] {
            return None;
        }
        let start = self.origin[k];
        let end = self.origin[last] + 1;
        let word = |c: char| c.is_alphanumeric();
        if start > 0 && word(self.raw[start - 1]) {
            return None;
        }
        if end < self.raw.len() && word(self.raw[end]) {
            return None;
        }
        Some(RawMatch { start, end })
    }
}

impl TolerantPattern {
    pub fn compact_len(&self) -> usize {
        self.compact.len()
    }

    /// Earliest hit whose raw start is at or after `from`.
    pub fn find_from(&self, text: &CompactText, from: usize) -> Option<RawMatch> {
        self.find_iter(text, from).next()
    }

    /// All hits with raw start at or after `from`, in order.
    pub fn find_iter<'a>(&'a self, text: &'a CompactText, from: usize) -> impl Iterator<Item = RawMatch> + 'a {
        let n = self.compact.len();
        let first = text.origin.partition_point(|&o| o < from);
        let last_start = text.chars.len().saturating_sub(n - 1);
        (first..last_start.max(first))
            .filter(move |&k| text.chars[k..k + n] == self.compact[..])
            .filter_map(move |k| text.bounded(k, n))
    }

    pub fn is_match(&self, text: &str) -> bool {
        self.find_from(&CompactText::new(text), 0).is_some()
    }
}
