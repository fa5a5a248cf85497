//! Letter-spaced ("sparing") headings.
//!
//! Decisions mark section openings by spacing out the letters of a word:
//! `R o z s u d o k`. A span is a chain of letter groups of one or two
//! letters joined by single spaces. Two-letter groups are tolerated because
//! PDF conversion occasionally glues neighbouring letters, but single letters
//! must dominate. Words spaced apart by wider gaps come out as separate spans.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::align::normalize_text;
use crate::ingest::VerdictDocument;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparingSpan {
    /// Char offsets into the scanned text.
    pub start_offset: usize,
    pub end_offset: usize,
    pub collapsed: String,
    pub raw: String,
}

impl SparingSpan {
    pub fn collapse(&self) -> String {
        collapse(&self.raw)
    }
}

fn is_letter(c: char) -> bool {
    c.is_alphabetic() || unicode_normalization::char::is_combining_mark(c)
}

fn is_gap(c: char) -> bool {
    c == ' ' || c == '\u{a0}'
}

/// Remove single spaces sitting between two letters. Order and case are kept.
pub fn collapse(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    for (i, &c) in chars.iter().enumerate() {
        let squeezable = is_gap(c)
            && i > 0
            && i + 1 < chars.len()
            && is_letter(chars[i - 1])
            && is_letter(chars[i + 1]);
        if !squeezable {
            out.push(c);
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
struct Run {
    start: usize,
    end: usize,
    letters: usize,
}

/// Find all sparing spans, ordered by start offset and non-overlapping.
pub fn detect_sparing(text: &str) -> Vec<SparingSpan> {
    let chars: Vec<char> = text.chars().collect();
    let mut runs = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_alphabetic() {
            let start = i;
            let mut letters = 0;
            while i < chars.len() && is_letter(chars[i]) {
                if chars[i].is_alphabetic() {
                    letters += 1;
                }
                i += 1;
            }
            runs.push(Run { start, end: i, letters });
        } else {
            i += 1;
        }
    }

    let mut spans = Vec::new();
    let mut chain: Vec<Run> = Vec::new();
    let flush = |chain: &mut Vec<Run>, spans: &mut Vec<SparingSpan>| {
        if let Some(span) = accept_chain(chain, &chars) {
            spans.push(span);
        }
        chain.clear();
    };

    for run in runs {
        if run.letters > 2 {
            flush(&mut chain, &mut spans);
            continue;
        }
        let joined = chain
            .last()
            .is_some_and(|prev| run.start == prev.end + 1 && is_gap(chars[prev.end]));
        if !joined {
            flush(&mut chain, &mut spans);
        }
        chain.push(run);
    }
    flush(&mut chain, &mut spans);
    spans
}

fn accept_chain(chain: &[Run], chars: &[char]) -> Option<SparingSpan> {
    if chain.len() < 2 {
        return None;
    }
    let singles = chain.iter().filter(|r| r.letters == 1).count();
    if singles <= chain.len() - singles {
        return None;
    }
    let start = chain[0].start;
    let end = chain[chain.len() - 1].end;
    let raw: String = chars[start..end].iter().collect();
    Some(SparingSpan {
        start_offset: start,
        end_offset: end,
        collapsed: collapse(&raw),
        raw,
    })
}

/// A sparing expression seen across a corpus, awaiting human annotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkerCandidate {
    pub expression: String,
    pub document_count: usize,
    pub mean_relative_position: f64,
    /// 1-based order of first appearance within a document → documents.
    pub position_rank_histogram: BTreeMap<usize, usize>,
}

#[derive(Default)]
struct Tally {
    documents: usize,
    positions: Vec<f64>,
    ranks: BTreeMap<usize, usize>,
}

/// Collect sparing expressions over a corpus with their positional profile.
///
/// Sorted by document count (descending), then mean relative position.
pub fn mine_markers(docs: &[VerdictDocument]) -> Vec<MarkerCandidate> {
    let mut tallies: HashMap<String, Tally> = HashMap::new();
    for doc in docs {
        let len = doc.raw_text.chars().count().max(1) as f64;
        let mut seen: Vec<String> = Vec::new();
        for span in detect_sparing(&doc.raw_text) {
            let expr = normalize_text(&span.collapsed).folded;
            if expr.is_empty() || seen.contains(&expr) {
                continue;
            }
            seen.push(expr.clone());
            let tally = tallies.entry(expr).or_default();
            tally.documents += 1;
            tally.positions.push(span.start_offset as f64 / len);
            *tally.ranks.entry(seen.len()).or_default() += 1;
        }
    }

    let mut out: Vec<MarkerCandidate> = tallies
        .into_iter()
        .map(|(expression, mut t)| {
            // sorted summation keeps the mean independent of corpus order
            t.positions.sort_by(f64::total_cmp);
            let mean = t.positions.iter().sum::<f64>() / t.positions.len() as f64;
            MarkerCandidate {
                expression,
                document_count: t.documents,
                mean_relative_position: mean.clamp(0.0, 1.0),
                position_rank_histogram: t.ranks,
            }
        })
        .collect();
    out.sort_by(|a, b| {
        b.document_count
            .cmp(&a.document_count)
            .then(a.mean_relative_position.total_cmp(&b.mean_relative_position))
            .then_with(|| a.expression.cmp(&b.expression))
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detects_single_header() {
        let spans = detect_sparing("R o z s u d o k");
        assert_eq!(spans.len(), 1);
        assert_eq!(spans[0].collapsed, "Rozsudok");
        assert_eq!((spans[0].start_offset, spans[0].end_offset), (0, 15));
    }

    #[test]
    fn plain_prose_has_no_sparing() {
        assert!(detect_sparing("the court decided").is_empty());
        assert!(detect_sparing("").is_empty());
        // initials are not sparing
        assert!(detect_sparing("judge J. N. Novak").is_empty());
        // a run of ordinary two-letter words is not sparing
        assert!(detect_sparing("je to na nás").is_empty());
    }

    #[test]
    fn tolerates_glued_letters() {
        let spans = detect_sparing("text\nR oz s u d o k\nmore");
        assert_eq!(spans.len(), 1);
        assert_eq!(spans[0].collapsed, "Rozsudok");
        assert_eq!(spans[0].raw, "R oz s u d o k");
    }

    #[test]
    fn spaced_phrase_yields_one_span_per_word() {
        let spans = detect_sparing("obžalovaný  j e   v i n n ý, že");
        let words: Vec<_> = spans.iter().map(|s| s.collapsed.as_str()).collect();
        assert_eq!(words, ["je", "vinný"]);
    }

    #[test]
    fn collapse_examples() {
        assert_eq!(collapse("U z n e s e n i e"), "Uznesenie");
        assert_eq!(collapse("L I K E T H I S"), "LIKETHIS");
        assert_eq!(collapse("Uznesenie"), "Uznesenie");
        assert_eq!(collapse(&collapse("O d ô v o d n e n i e")), "Odôvodnenie");
        for span in detect_sparing("a\nP o u č e n i e :\nb") {
            assert_eq!(span.collapse(), span.collapsed);
        }
    }

    fn doc(id: &str, text: &str) -> VerdictDocument {
        VerdictDocument::new(id, "Court", "1T/1/2020", Some(2020), text).unwrap()
    }

    #[test]
    fn mining_uniform_corpus() {
        let docs: Vec<_> = (0..4)
            .map(|i| doc(&format!("d{i}"), "R o z s u d o k\nbody text here\nP o u č e n i e\n"))
            .collect();
        let mined = mine_markers(&docs);
        assert_eq!(mined[0].expression, "rozsudok");
        assert_eq!(mined[0].document_count, 4);
        assert_eq!(mined[0].position_rank_histogram.get(&1), Some(&4));
        assert_eq!(mined[1].expression, "poucenie");
        assert_eq!(mined[1].position_rank_histogram.get(&2), Some(&4));
    }

    #[test]
    fn mining_tie_break_by_position() {
        // both expressions appear once; A near 0.1, B near 0.5 of the text
        let a = doc("a", &format!("{}\nA a a\n{}", "x".repeat(8), "y".repeat(80)));
        let b = doc("b", &format!("{}\nB b b\n{}", "z".repeat(48), "z".repeat(45)));
        let mined = mine_markers(&[b, a]);
        assert_eq!(mined.len(), 2);
        assert_eq!(mined[0].expression, "aaa");
        assert_eq!(mined[1].expression, "bbb");
    }
}
