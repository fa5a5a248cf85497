//! Fixed-phrase extraction: literal, case- and whitespace-sensitive.

use super::{trim_range, ExtractError, ExtractionOutcome, Method};
use crate::ingest::VerdictDocument;
use crate::text::CharIndex;

/// Earliest word-bounded literal hit of any phrase at or after byte `from`.
/// At equal offsets the longer phrase wins. Returns byte range and phrase index.
fn first_literal<S: AsRef<str>>(text: &str, phrases: &[S], from: usize) -> Vec<(usize, usize, usize)> {
    let word = |c: Option<char>| c.is_some_and(char::is_alphanumeric);
    let mut hits = Vec::new();
    for (i, p) in phrases.iter().enumerate() {
        let p = p.as_ref();
        if p.is_empty() {
            continue;
        }
        for (b, _) in text[from..].match_indices(p) {
            let start = from + b;
            let end = start + p.len();
            if word(text[..start].chars().next_back()) || word(text[end..].chars().next()) {
                continue;
            }
            hits.push((start, end, i));
        }
    }
    hits.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
    hits
}

/// Extract the text between the first start phrase and the next end phrase.
pub fn baseline_extract<S: AsRef<str>>(
    doc: &VerdictDocument,
    start_phrases: &[S],
    end_phrases: &[S],
) -> Result<ExtractionOutcome, ExtractError> {
    if start_phrases.is_empty() {
        return Err(ExtractError::EmptyList("start"));
    }
    if end_phrases.is_empty() {
        return Err(ExtractError::EmptyList("end"));
    }
    let text = &doc.raw_text;
    let Some(&(_, start_end, si)) = first_literal(text, start_phrases, 0).first() else {
        return Ok(ExtractionOutcome::no_match(&doc.doc_id, Method::Baseline, "no start phrase"));
    };

    let index = CharIndex::new(text);
    let chars: Vec<char> = text.chars().collect();
    let from = index.char_at_byte(start_end);
    for (end_start, _, ei) in first_literal(text, end_phrases, start_end) {
        let to = index.char_at_byte(end_start);
        if let Some((s, e)) = trim_range(&chars, from, to) {
            let diag = format!(
                "start={:?}; end={:?}",
                start_phrases[si].as_ref(),
                end_phrases[ei].as_ref()
            );
            return Ok(ExtractionOutcome::extracted(&doc.doc_id, Method::Baseline, text, s, e, diag));
        }
    }
    Ok(ExtractionOutcome::no_match(
        &doc.doc_id,
        Method::Baseline,
        format!("no end phrase after start {:?}", start_phrases[si].as_ref()),
    ))
}
