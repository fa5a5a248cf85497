//! Text folding, character-level similarity, approximate span location and
//! the hallucination guard.
//!
//! All comparisons happen on *folded* text: canonical decomposition with
//! combining marks dropped, lowercase, whitespace runs collapsed to a single
//! space and trimmed. Every folded char remembers the original char range it
//! came from, so a span found in folded space can be projected back onto the
//! untouched source and sliced verbatim.

use std::cmp::Ordering;

use thiserror::Error;
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::text::CharIndex;

/// Sources up to this many folded chars are searched exhaustively.
pub const EXHAUSTIVE_LIMIT: usize = 500;

/// Half-width of the neighbourhood explored around a seeded alignment.
const REFINE_RADIUS: usize = 24;

#[derive(Debug, Error, PartialEq)]
pub enum AlignError {
    #[error("threshold {0} is outside [0, 1]")]
    Threshold(f64),
}

/// Folded form of a string together with its projection onto the original.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedText {
    pub folded: String,
    /// For each folded char, the `[start, end)` char range of the original.
    pub offset_map: Vec<(usize, usize)>,
    chars: Vec<char>,
}

impl NormalizedText {
    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    /// Original char range covered by the folded range `[start, end)`.
    pub fn project(&self, start: usize, end: usize) -> Option<(usize, usize)> {
        if start >= end || end > self.chars.len() {
            return None;
        }
        Some((self.offset_map[start].0, self.offset_map[end - 1].1))
    }

    /// Whether a folded span may start at `pos`: not on a space and not in
    /// the middle of the expansion of a single original char.
    fn is_start(&self, pos: usize) -> bool {
        self.chars[pos] != ' ' && (pos == 0 || self.offset_map[pos - 1] != self.offset_map[pos])
    }

    /// Whether a folded span may end (exclusively) at `pos`.
    fn is_end(&self, pos: usize) -> bool {
        pos > 0
            && self.chars[pos - 1] != ' '
            && (pos == self.chars.len() || self.offset_map[pos] != self.offset_map[pos - 1])
    }
}

/// Fold one char: lowercase, decompose, drop combining marks.
pub fn fold_char(c: char) -> impl Iterator<Item = char> {
    c.to_lowercase().nfd().filter(|d| !is_combining_mark(*d))
}

pub fn normalize_text(text: &str) -> NormalizedText {
    let mut chars = Vec::with_capacity(text.len());
    let mut offset_map = Vec::with_capacity(text.len());
    let mut pending_space: Option<(usize, usize)> = None;

    for (i, c) in text.chars().enumerate() {
        if c.is_whitespace() {
            pending_space = Some(match pending_space {
                Some((s, _)) => (s, i + 1),
                None => (i, i + 1),
            });
            continue;
        }
        let mut folded = fold_char(c).peekable();
        if folded.peek().is_none() {
            continue;
        }
        if let Some(range) = pending_space.take() {
            if !chars.is_empty() {
                chars.push(' ');
                offset_map.push(range);
            }
        }
        for f in folded {
            chars.push(f);
            offset_map.push((i, i + 1));
        }
    }

    NormalizedText {
        folded: chars.iter().collect(),
        offset_map,
        chars,
    }
}

/// Edit-distance based score, kept as an exact ratio so that ties and band
/// boundaries are decided without float noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Score {
    pub distance: usize,
    pub scale: usize,
}

impl Score {
    pub const PERFECT: Score = Score { distance: 0, scale: 1 };

    pub fn value(self) -> f64 {
        if self.scale == 0 {
            return 1.0;
        }
        (self.scale - self.distance) as f64 / self.scale as f64
    }

    /// Strictly better (higher similarity) than `other`.
    pub fn beats(self, other: Score) -> bool {
        self.cmp_similarity(other) == Ordering::Greater
    }

    fn cmp_similarity(self, other: Score) -> Ordering {
        // value = 1 - d/s, so higher value means smaller d/s.
        let lhs = self.distance as u128 * other.scale.max(1) as u128;
        let rhs = other.distance as u128 * self.scale.max(1) as u128;
        rhs.cmp(&lhs)
    }
}

/// A pluggable character-level similarity over folded text.
pub trait SimilarityMetric {
    fn score(&self, a: &[char], b: &[char]) -> Score;
}

/// `1 - levenshtein / max(len)`; the default metric.
#[derive(Debug, Clone, Copy, Default)]
pub struct Levenshtein;

impl SimilarityMetric for Levenshtein {
    fn score(&self, a: &[char], b: &[char]) -> Score {
        Score {
            distance: levenshtein(a, b),
            scale: a.len().max(b.len()),
        }
    }
}

/// `lcs / max(len)`, an alternative for sensitivity analysis.
#[derive(Debug, Clone, Copy, Default)]
pub struct LcsRatio;

impl SimilarityMetric for LcsRatio {
    fn score(&self, a: &[char], b: &[char]) -> Score {
        let scale = a.len().max(b.len());
        let mut prev = vec![0usize; b.len() + 1];
        let mut cur = vec![0usize; b.len() + 1];
        for &ca in a {
            for (j, &cb) in b.iter().enumerate() {
                cur[j + 1] = if ca == cb {
                    prev[j] + 1
                } else {
                    cur[j].max(prev[j + 1])
                };
            }
            std::mem::swap(&mut prev, &mut cur);
        }
        Score {
            distance: scale - prev[b.len()],
            scale,
        }
    }
}

/// Unit-cost Levenshtein distance over chars.
pub fn levenshtein(a: &[char], b: &[char]) -> usize {
    if a.len() < b.len() {
        return levenshtein(b, a);
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, &ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = diag + usize::from(ca != cb);
            diag = row[j + 1];
            row[j + 1] = sub.min(diag + 1).min(row[j] + 1);
        }
    }
    row[b.len()]
}

pub fn similarity_with(metric: &impl SimilarityMetric, a: &str, b: &str) -> Score {
    let na = normalize_text(a);
    let nb = normalize_text(b);
    metric.score(na.chars(), nb.chars())
}

/// Normalized Levenshtein similarity of the folded forms, in `[0, 1]`.
pub fn similarity(a: &str, b: &str) -> f64 {
    similarity_with(&Levenshtein, a, b).value()
}

/// Best-aligned span of the original source for a candidate string.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpanMatch {
    /// Char offsets into the original source.
    pub start_offset: usize,
    pub end_offset: usize,
    pub score: f64,
    pub exact_score: Score,
}

#[derive(Debug, Clone, Copy)]
struct Best {
    score: Score,
    start: usize,
    end: usize,
}

/// Locate the source span that maximizes similarity with `candidate`.
///
/// Ties resolve to the earliest start, then the shortest span. Sources of at
/// most [`EXHAUSTIVE_LIMIT`] folded chars are searched exhaustively; longer
/// ones are seeded by a semi-global alignment and refined locally.
pub fn locate_span(candidate: &str, source: &str) -> SpanMatch {
    let cand = normalize_text(candidate);
    let src = normalize_text(source);
    locate_normalized(&cand, &src)
}

pub fn locate_normalized(cand: &NormalizedText, src: &NormalizedText) -> SpanMatch {
    let empty = SpanMatch {
        start_offset: 0,
        end_offset: 0,
        score: 0.0,
        exact_score: Score { distance: 1, scale: 1 },
    };
    if cand.is_empty() || src.is_empty() {
        return empty;
    }

    let best = exact_occurrence(cand, src).or_else(|| {
        if src.len() <= EXHAUSTIVE_LIMIT {
            exhaustive(cand.chars(), src, 0, src.len(), src.len(), None)
        } else {
            seeded(cand.chars(), src)
        }
    });

    match best {
        Some(b) => {
            let (start, end) = src.project(b.start, b.end).expect("non-empty folded span");
            SpanMatch {
                start_offset: start,
                end_offset: end,
                score: b.score.value(),
                exact_score: b.score,
            }
        }
        None => empty,
    }
}

fn exact_occurrence(cand: &NormalizedText, src: &NormalizedText) -> Option<Best> {
    let needle = cand.folded.as_str();
    let hay = src.folded.as_str();
    let index = CharIndex::new(hay);
    let mut from = 0;
    while let Some(pos) = hay[from..].find(needle) {
        let byte = from + pos;
        let start = index.char_at_byte(byte);
        let end = start + cand.len();
        if src.is_start(start) && src.is_end(end) {
            return Some(Best {
                score: Score::PERFECT,
                start,
                end,
            });
        }
        from = byte + hay[byte..].chars().next().map_or(1, char::len_utf8);
    }
    None
}

/// Longest span length that could still strictly beat `best`.
fn max_useful_len(m: usize, best: Option<Score>) -> usize {
    match best {
        None => usize::MAX,
        Some(b) if b.distance >= b.scale => usize::MAX,
        Some(b) => {
            // need (L - m) * s < d * L, i.e. L < m * s / (s - d)
            let num = m as u128 * b.scale as u128;
            let den = (b.scale - b.distance) as u128;
            let bound = num.div_ceil(den);
            usize::try_from(bound.saturating_sub(1).max(m as u128)).unwrap_or(usize::MAX)
        }
    }
}

/// Exhaustive search over starts in `[start_lo, start_hi)` with ends up to `end_hi`.
///
/// Columns of the DP are source chars; each column's minimum is a lower
/// bound for every longer span from the same start, which drives pruning.
fn exhaustive(
    cand: &[char],
    src: &NormalizedText,
    start_lo: usize,
    start_hi: usize,
    end_hi: usize,
    seed: Option<Best>,
) -> Option<Best> {
    let m = cand.len();
    let s = src.chars();
    let mut best = seed;
    let mut col = vec![0usize; m + 1];

    for a in start_lo..start_hi.min(s.len()) {
        if !src.is_start(a) {
            continue;
        }
        if matches!(best, Some(b) if b.score.distance == 0) {
            break;
        }
        for (i, v) in col.iter_mut().enumerate() {
            *v = i;
        }
        let mut limit_len = max_useful_len(m, best.map(|b| b.score));
        for j in a..end_hi.min(s.len()) {
            let len = j + 1 - a;
            if len > limit_len {
                break;
            }
            let sc = s[j];
            let mut diag = col[0];
            col[0] = len;
            let mut col_min = col[0];
            for i in 0..m {
                let sub = diag + usize::from(cand[i] != sc);
                diag = col[i + 1];
                let v = sub.min(diag + 1).min(col[i] + 1);
                col[i + 1] = v;
                col_min = col_min.min(v);
            }
            if src.is_end(j + 1) {
                let score = Score {
                    distance: col[m],
                    scale: m.max(len),
                };
                if best.is_none_or(|b| score.beats(b.score)) {
                    best = Some(Best {
                        score,
                        start: a,
                        end: j + 1,
                    });
                    limit_len = max_useful_len(m, Some(score));
                    if score.distance == 0 {
                        break;
                    }
                }
            }
            if let Some(b) = best {
                let widest = m.max(limit_len.min(s.len() - a));
                if col_min as u128 * b.score.scale as u128
                    >= b.score.distance as u128 * widest as u128
                {
                    break;
                }
            }
        }
    }
    best
}

/// Semi-global alignment seed, then exhaustive refinement around it.
fn seeded(cand: &[char], src: &NormalizedText) -> Option<Best> {
    let m = cand.len();
    let s = src.chars();
    // cost[i], origin[i]: best alignment of cand[..i] ending at the current column.
    let mut cost: Vec<usize> = (0..=m).collect();
    let mut origin = vec![0usize; m + 1];
    let mut seed_end = 0;
    let mut seed_start = 0;
    let mut seed_cost = usize::MAX;
    for (j, &sc) in s.iter().enumerate() {
        let mut diag = cost[0];
        let mut diag_origin = origin[0];
        cost[0] = 0;
        origin[0] = j + 1;
        for i in 0..m {
            let sub = diag + usize::from(cand[i] != sc);
            let (up, up_origin) = (cost[i + 1], origin[i + 1]);
            let (left, left_origin) = (cost[i], origin[i]);
            let (mut v, mut o) = (sub, diag_origin);
            if up + 1 < v {
                v = up + 1;
                o = up_origin;
            }
            if left + 1 < v {
                v = left + 1;
                o = left_origin;
            }
            diag = up;
            diag_origin = up_origin;
            cost[i + 1] = v;
            origin[i + 1] = o;
        }
        if cost[m] < seed_cost {
            seed_cost = cost[m];
            seed_end = j + 1;
            seed_start = origin[m];
        }
    }

    let lo = seed_start.saturating_sub(REFINE_RADIUS);
    let hi = (seed_start + REFINE_RADIUS + 1).min(s.len());
    let end_hi = (seed_end + REFINE_RADIUS).min(s.len());
    exhaustive(cand, src, lo, hi, end_hi, None)
}

/// Verbatim excerpt of the source that a candidate was grounded to.
#[derive(Debug, Clone, PartialEq)]
pub struct Grounded {
    pub start_offset: usize,
    pub end_offset: usize,
    pub text: String,
    pub score: f64,
}

/// Replace a generated string by the best-matching verbatim source excerpt.
///
/// Returns `Ok(None)` when no span reaches `threshold`. The returned text is
/// always sliced from `source`, never taken from `candidate`.
pub fn ground(candidate: &str, source: &str, threshold: f64) -> Result<Option<Grounded>, AlignError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(AlignError::Threshold(threshold));
    }
    let found = locate_span(candidate, source);
    if found.end_offset <= found.start_offset || found.score < threshold {
        return Ok(None);
    }
    let index = CharIndex::new(source);
    Ok(Some(Grounded {
        start_offset: found.start_offset,
        end_offset: found.end_offset,
        text: index.slice(source, found.start_offset, found.end_offset).to_string(),
        score: found.score,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_diacritics_and_case() {
        assert_eq!(normalize_text("Súd").folded, "sud");
        assert_eq!(normalize_text("ŽILINA, Košice").folded, "zilina, kosice");
    }

    #[test]
    fn collapses_whitespace() {
        let n = normalize_text("a   b\n c");
        assert_eq!(n.folded, "a b c");
        assert_eq!(n.offset_map[1], (1, 4));
        assert_eq!(n.offset_map[3], (5, 7));
        assert_eq!(normalize_text("  \t x \n").folded, "x");
        assert_eq!(normalize_text("").folded, "");
    }

    #[test]
    fn projection_lands_on_original_chars() {
        let src = "Okresný  súd\nBratislava";
        let n = normalize_text(src);
        let start = n.folded.find("sud").unwrap();
        let (s, e) = n.project(start, start + 3).unwrap();
        assert_eq!(crate::text::char_slice(src, s, e), Some("súd"));
    }

    #[test]
    fn similarity_basics() {
        assert_eq!(similarity("", ""), 1.0);
        assert_eq!(similarity("sud", "súd"), 1.0);
        assert_eq!(similarity("abc", ""), 0.0);
        assert!((similarity("kitten", "sitting") - (1.0 - 3.0 / 7.0)).abs() < 1e-12);
    }

    #[test]
    fn boundary_scores_are_exact() {
        let s = Score { distance: 1, scale: 20 };
        assert_eq!(s.value(), 0.95);
        assert!(Score { distance: 1, scale: 21 }.beats(s));
        assert!(!Score { distance: 2, scale: 40 }.beats(s));
    }

    #[test]
    fn lcs_ratio_metric() {
        let n = |s: &str| normalize_text(s).chars().to_vec();
        let sc = LcsRatio.score(&n("abcd"), &n("abxd"));
        assert_eq!(sc, Score { distance: 1, scale: 4 });
        assert_eq!(similarity_with(&LcsRatio, "Súd", "sud").value(), 1.0);
    }

    #[test]
    fn locates_exact_substring() {
        let src = "Obžalovaný je vinný, že dňa 3. mája ukradol bicykel, čím spáchal";
        let m = locate_span("dna 3. maja ukradol bicykel,", src);
        assert_eq!(m.score, 1.0);
        assert_eq!(
            crate::text::char_slice(src, m.start_offset, m.end_offset),
            Some("dňa 3. mája ukradol bicykel,")
        );
    }

    #[test]
    fn locate_prefers_earliest_then_shortest() {
        let m = locate_span("abc", "xx abd abd");
        assert_eq!((m.start_offset, m.end_offset), (3, 5));
        assert!((m.score - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn long_source_uses_seeded_search() {
        let filler: String = (0..120).map(|i| format!("word{} ", i % 17)).collect();
        let target = "the accused took a red bicycle from the yard of house number 12";
        let src = format!("{filler}{target} {filler}");
        let cand = "the accused took a red bicycIe from the yard of house number 12";
        let m = locate_span(cand, &src);
        let got = crate::text::char_slice(&src, m.start_offset, m.end_offset).unwrap();
        assert_eq!(got, target);
        assert!((m.score - (1.0 - 1.0 / target.len() as f64)).abs() < 1e-12);
    }

    #[test]
    fn ground_never_returns_candidate_text() {
        let src = "He took the bicycle, therefore he committed theft.";
        let g = ground("He took the shiny bicycle,", src, 0.5).unwrap().unwrap();
        assert!(src.contains(&g.text));
        assert!(!g.text.contains("shiny"));
        assert_eq!(ground("zzzz qqqq wwww", src, 0.9).unwrap(), None);
        assert_eq!(ground("x", src, 1.5), Err(AlignError::Threshold(1.5)));
    }
}
