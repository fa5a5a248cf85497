//! Independent reference implementations and random inputs for the
//! integration tests.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use verdict_facts::align::normalize_text;

/// Full-matrix Wagner-Fischer distance.
pub fn edit_distance(a: &[char], b: &[char]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    d[0] = (0..=b.len()).collect();
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let cost = if a[i - 1] == b[j - 1] { 0 } else { 1 };
            d[i][j] = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + cost);
        }
    }
    d[a.len()][b.len()]
}

/// Lowercase, strip marks via NFD, collapse whitespace.
pub fn fold(text: &str) -> Vec<char> {
    use unicode_normalization::char::is_combining_mark;
    use unicode_normalization::UnicodeNormalization;
    let lowered: String = text.to_lowercase().nfd().filter(|c| !is_combining_mark(*c)).collect();
    let words: Vec<&str> = lowered.split_whitespace().collect();
    words.join(" ").chars().collect()
}

/// Similarity as an exact pair `(distance, scale)`.
pub fn similarity_oracle(a: &str, b: &str) -> (usize, usize) {
    let fa = fold(a);
    let fb = fold(b);
    (edit_distance(&fa, &fb), fa.len().max(fb.len()))
}

pub fn ratio(d: usize, s: usize) -> f64 {
    if s == 0 {
        1.0
    } else {
        (s - d) as f64 / s as f64
    }
}

/// Strictly better similarity, compared as exact fractions.
fn better(a: (usize, usize), b: (usize, usize)) -> bool {
    (a.0 as u128) * (b.1.max(1) as u128) < (b.0 as u128) * (a.1.max(1) as u128)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BruteSpan {
    pub start: usize,
    pub end: usize,
    pub distance: usize,
    pub scale: usize,
}

/// Every folded span that begins and ends on whole source chars and not on
/// a space, scored without any pruning. Earliest start wins ties, then the
/// shortest span.
pub fn brute_force_span(candidate: &str, source: &str) -> Option<BruteSpan> {
    let cand = normalize_text(candidate);
    let src = normalize_text(source);
    let c = cand.chars();
    let s = src.chars();
    let map = &src.offset_map;
    if c.is_empty() || s.is_empty() {
        return None;
    }
    let starts = |a: usize| s[a] != ' ' && (a == 0 || map[a - 1] != map[a]);
    let ends = |e: usize| s[e - 1] != ' ' && (e == s.len() || map[e] != map[e - 1]);
    let mut best: Option<BruteSpan> = None;
    for a in (0..s.len()).filter(|&a| starts(a)) {
        // One DP column per appended source char.
        let mut col: Vec<usize> = (0..=c.len()).collect();
        for e in a + 1..=s.len() {
            let ch = s[e - 1];
            let mut next = vec![e - a; c.len() + 1];
            for i in 1..=c.len() {
                let cost = usize::from(c[i - 1] != ch);
                next[i] = (col[i - 1] + cost).min(col[i] + 1).min(next[i - 1] + 1);
            }
            col = next;
            if !ends(e) {
                continue;
            }
            let score = (col[c.len()], c.len().max(e - a));
            if best.is_none_or(|b| better(score, (b.distance, b.scale))) {
                best = Some(BruteSpan {
                    start: map[a].0,
                    end: map[e - 1].1,
                    distance: score.0,
                    scale: score.1,
                });
            }
        }
    }
    best
}

const LETTERS: &[char] = &[
    'a', 'á', 'ä', 'b', 'c', 'č', 'd', 'ď', 'e', 'é', 'f', 'g', 'h', 'i', 'í', 'j', 'k', 'l', 'ľ', 'ĺ', 'm', 'n',
    'ň', 'o', 'ó', 'ô', 'p', 'r', 'ŕ', 's', 'š', 't', 'ť', 'u', 'ú', 'v', 'y', 'ý', 'z', 'ž', 'A', 'Č', 'Ž', 'Š',
    'Ľ', 'É', 'Ô',
];
const FILLER: &[char] = &[' ', ' ', ' ', '\n', '\t', ',', '.', '-', '§', '1', '7'];

/// Diacritic-rich text with irregular whitespace.
pub fn random_text(rng: &mut ChaCha8Rng, len: usize) -> String {
    (0..len)
        .map(|_| {
            if rng.gen_bool(0.8) {
                *LETTERS.choose(rng).unwrap()
            } else {
                *FILLER.choose(rng).unwrap()
            }
        })
        .collect()
}

/// Small alphabet so that near-matches and ties are common.
pub fn random_narrow(rng: &mut ChaCha8Rng, len: usize) -> String {
    const NARROW: &[char] = &['a', 'á', 'b', 'B', ' ', 'c', 'č'];
    (0..len).map(|_| *NARROW.choose(rng).unwrap()).collect()
}

/// Random substitutions, insertions and deletions.
pub fn mutate(rng: &mut ChaCha8Rng, text: &str, edits: usize) -> String {
    let mut chars: Vec<char> = text.chars().collect();
    for _ in 0..edits {
        let pos = rng.gen_range(0..=chars.len());
        match rng.gen_range(0..3) {
            0 if pos < chars.len() => chars[pos] = *LETTERS.choose(rng).unwrap(),
            1 if pos < chars.len() => {
                chars.remove(pos);
            }
            _ => chars.insert(pos, *LETTERS.choose(rng).unwrap()),
        }
    }
    chars.into_iter().collect()
}

/// Char-indexed substring.
pub fn slice(text: &str, start: usize, end: usize) -> String {
    text.chars().skip(start).take(end.saturating_sub(start)).collect()
}

/// A candidate for `source`: a perturbed excerpt, a truncated excerpt or
/// unrelated text.
pub fn adversarial_candidate(rng: &mut ChaCha8Rng, source: &str) -> String {
    let n = source.chars().count();
    let a = rng.gen_range(0..n.max(1));
    let b = (a + rng.gen_range(1..=60)).min(n);
    let excerpt = slice(source, a, b);
    match rng.gen_range(0..4) {
        0 => excerpt,
        1 => {
            let k = rng.gen_range(1..8);
            mutate(rng, &excerpt, k)
        }
        2 => {
            let keep = rng.gen_range(0..=excerpt.chars().count());
            slice(&excerpt, 0, keep)
        }
        _ => {
            let len = rng.gen_range(1..60);
            random_text(rng, len)
        }
    }
}
