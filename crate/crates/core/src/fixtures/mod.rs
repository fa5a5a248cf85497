//! Seeded synthetic verdict corpora with known ground truth.

mod prose;
mod replay;

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::align::normalize_text;
use crate::evaluate::GoldAnnotation;
use crate::ingest::{write_dump, VerdictDocument};
use crate::markers::{default_phrases, MarkerSet};

pub use replay::{generate_replay, replay_from_plan, substitute_letters, truncate_to, ReplayBehavior, Scripted};

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("invalid fixture spec: {0}")]
    Spec(String),
    #[error("cannot plant {0}")]
    Calibration(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Phrase inventory the generator draws markers from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LanguageProfile {
    pub start_phrases: Vec<String>,
    pub end_phrases: Vec<String>,
    pub diacritics: bool,
}

impl Default for LanguageProfile {
    fn default() -> Self {
        let p = default_phrases();
        Self {
            start_phrases: p.start_markers,
            end_phrases: p.end_markers,
            diacritics: true,
        }
    }
}

impl LanguageProfile {
    pub fn marker_set(&self) -> Result<MarkerSet, FixtureError> {
        MarkerSet::new(&self.start_phrases, &self.end_phrases).map_err(|e| FixtureError::Spec(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixtureSpec {
    pub n_docs: usize,
    pub seed: u64,
    pub clean_fraction: f64,
    pub noisy_fraction: f64,
    pub pathological_fraction: f64,
    pub language_profile: LanguageProfile,
    /// Scripted model behavior written next to the corpus.
    pub replay: ReplayBehavior,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        Self {
            n_docs: 400,
            seed: 7,
            clean_fraction: 0.405,
            noisy_fraction: 0.565,
            pathological_fraction: 0.03,
            language_profile: LanguageProfile::default(),
            replay: ReplayBehavior::default(),
        }
    }
}

impl FixtureSpec {
    pub fn validate(&self) -> Result<(), FixtureError> {
        let f = [self.clean_fraction, self.noisy_fraction, self.pathological_fraction];
        if f.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(FixtureError::Spec("fractions must lie in [0, 1]".into()));
        }
        if (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(FixtureError::Spec(format!("fractions sum to {}, not 1", f.iter().sum::<f64>())));
        }
        if self.language_profile.start_phrases.is_empty() || self.language_profile.end_phrases.is_empty() {
            return Err(FixtureError::Spec("language profile needs start and end phrases".into()));
        }
        self.language_profile.marker_set()?;
        self.replay.validate()
    }

    /// Exact per-kind counts by largest remainder.
    pub fn counts(&self) -> [usize; 3] {
        let f = [self.clean_fraction, self.noisy_fraction, self.pathological_fraction];
        let raw: Vec<f64> = f.iter().map(|x| x * self.n_docs as f64).collect();
        let mut counts: Vec<usize> = raw.iter().map(|x| (x + 1e-9).floor() as usize).collect();
        let mut order: Vec<usize> = (0..3).collect();
        order.sort_by(|&a, &b| (raw[b] - counts[b] as f64).total_cmp(&(raw[a] - counts[a] as f64)).then(a.cmp(&b)));
        let mut missing = self.n_docs - counts.iter().sum::<usize>().min(self.n_docs);
        for i in order.into_iter().cycle() {
            if missing == 0 {
                break;
            }
            counts[i] += 1;
            missing -= 1;
        }
        [counts[0], counts[1], counts[2]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocKind {
    /// Canonical markers, written literally.
    Clean,
    /// Whitespace injected inside the start marker.
    Noisy,
    /// No factual statement at all.
    Procedural,
    /// Facts present but opened by a phrase outside the inventory.
    UnusualOpener,
}

/// What the generator planted in one document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Planted {
    pub doc_id: String,
    pub kind: DocKind,
    pub fact_start: Option<usize>,
    pub fact_end: Option<usize>,
    pub opener: Option<String>,
    pub closer: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureDoc {
    pub document: VerdictDocument,
    pub gold: GoldAnnotation,
    pub planted: Planted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureCorpus {
    pub spec: FixtureSpec,
    pub docs: Vec<FixtureDoc>,
}

impl FixtureCorpus {
    pub fn documents(&self) -> Vec<VerdictDocument> {
        self.docs.iter().map(|d| d.document.clone()).collect()
    }

    pub fn gold(&self) -> Vec<GoldAnnotation> {
        self.docs.iter().map(|d| d.gold.clone()).collect()
    }

    pub fn count(&self, kind: DocKind) -> usize {
        self.docs.iter().filter(|d| d.planted.kind == kind).count()
    }

    /// Write `corpus/docs.jsonl`, `gold.jsonl`, `planted.jsonl` and `replay.jsonl`.
    pub fn write_to(&self, dir: &Path) -> Result<(), FixtureError> {
        let io = |p: &Path| {
            let path = p.display().to_string();
            move |source| FixtureError::Io { path, source }
        };
        let corpus_dir = dir.join("corpus");
        std::fs::create_dir_all(&corpus_dir).map_err(io(&corpus_dir))?;
        let docs_path = corpus_dir.join("docs.jsonl");
        let file = std::fs::File::create(&docs_path).map_err(io(&docs_path))?;
        write_dump(&self.documents(), std::io::BufWriter::new(file)).map_err(io(&docs_path))?;

        let gold: Vec<&GoldAnnotation> = self.docs.iter().map(|d| &d.gold).collect();
        let planted: Vec<&Planted> = self.docs.iter().map(|d| &d.planted).collect();
        let gold_path = dir.join("gold.jsonl");
        std::fs::write(&gold_path, jsonl(&gold)).map_err(io(&gold_path))?;
        let planted_path = dir.join("planted.jsonl");
        std::fs::write(&planted_path, jsonl(&planted)).map_err(io(&planted_path))?;

        let replay = generate_replay(self, &self.spec.replay)?;
        let replay_path = dir.join("replay.jsonl");
        let mut out = std::io::BufWriter::new(std::fs::File::create(&replay_path).map_err(io(&replay_path))?);
        crate::llm::ReplayProvider::write(&replay, &mut out).map_err(io(&replay_path))?;
        out.flush().map_err(io(&replay_path))
    }
}

fn jsonl<T: Serialize>(items: &[T]) -> String {
    items
        .iter()
        .map(|i| serde_json::to_string(i).expect("fixture records serialize") + "\n")
        .collect()
}

const COURTS: &[&str] = &[
    "Okresný súd Lúčka",
    "Okresný súd Dolná Lehota",
    "Okresný súd Nové Pole",
    "Okresný súd Stredné Mesto",
    "Okresný súd Trnávka",
    "Okresný súd Krásno",
];

fn doc_rng(seed: u64, index: usize) -> ChaCha8Rng {
    // splitmix-style mixing so neighbouring indices get unrelated streams
    let mut z = seed ^ (index as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

fn strip_marks(s: &str) -> String {
    s.nfd().filter(|c| !is_combining_mark(*c)).nfc().collect()
}

/// Folded text with all whitespace removed.
fn compact(s: &str) -> String {
    normalize_text(s).folded.chars().filter(|c| !c.is_whitespace()).collect()
}

/// Break a phrase so that none of `literals` survives in it. Splits a word
/// with whitespace, or letter-spaces it.
fn inject_break(rng: &mut ChaCha8Rng, phrase: &str, literals: &[String]) -> Option<String> {
    const BREAKS: &[&str] = &["\n", " ", "  ", "\n ", " \n", "\r\n"];
    let words: Vec<&str> = phrase.split(' ').collect();
    for _ in 0..64 {
        let candidates: Vec<usize> = (0..words.len()).filter(|&i| words[i].chars().count() >= 2).collect();
        let &w = candidates.choose(rng)?;
        let chars: Vec<char> = words[w].chars().collect();
        let broken: String = if chars.len() >= 3 && rng.gen_bool(0.25) {
            chars.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
        } else {
            let k = rng.gen_range(1..chars.len());
            let brk = prose::pick(rng, BREAKS);
            chars[..k].iter().collect::<String>() + brk + &chars[k..].iter().collect::<String>()
        };
        let mut out = words.clone();
        out[w] = &broken;
        let joined = out.join(" ");
        if !literals.iter().any(|l| joined.contains(l.as_str())) {
            return Some(joined);
        }
    }
    None
}

struct Builder {
    text: String,
    chars: usize,
}

impl Builder {
    fn push(&mut self, s: &str) {
        self.text.push_str(s);
        self.chars += s.chars().count();
    }
}

fn generate_doc(spec: &FixtureSpec, index: usize, kind: DocKind) -> Result<FixtureDoc, FixtureError> {
    let profile = &spec.language_profile;
    let mut rng = doc_rng(spec.seed, index);
    let year = rng.gen_range(2018..=2022);
    let court = prose::pick(&mut rng, COURTS);
    let docket = format!("{}T/{}/{}", rng.gen_range(1..9), rng.gen_range(1..400), year);
    let accused = prose::name(&mut rng);
    let doc_id = format!("fx{:04}-{index:05}", spec.seed % 10_000);

    let markers: Vec<String> = profile.start_phrases.iter().chain(&profile.end_phrases).map(|p| compact(p)).collect();
    let clean = |s: &str| {
        let c = compact(s);
        !markers.iter().any(|m| c.contains(m.as_str()))
    };

    let mut fact = String::new();
    for _ in 0..64 {
        let raw = prose::fact_sentence(&mut rng, year);
        let f = prose::wrap(&mut rng, &raw);
        if clean(&f) {
            fact = f;
            break;
        }
    }
    let mut reasons = String::new();
    for _ in 0..64 {
        let raw = prose::reasoning(&mut rng, year);
        let r = prose::wrap(&mut rng, &raw);
        if clean(&r) {
            reasons = r;
            break;
        }
    }
    if fact.is_empty() || reasons.is_empty() {
        return Err(FixtureError::Calibration(format!("marker-free prose for document {index}")));
    }

    let (opener, closer) = match kind {
        DocKind::Clean => (
            Some(prose::pick(&mut rng, &profile.start_phrases.iter().map(String::as_str).collect::<Vec<_>>()).to_string()),
            Some(prose::pick(&mut rng, &profile.end_phrases.iter().map(String::as_str).collect::<Vec<_>>()).to_string()),
        ),
        DocKind::Noisy => {
            let start = prose::pick(&mut rng, &profile.start_phrases.iter().map(String::as_str).collect::<Vec<_>>()).to_string();
            let broken = inject_break(&mut rng, &start, &profile.start_phrases)
                .ok_or_else(|| FixtureError::Calibration(format!("a baseline-proof variant of {start:?}")))?;
            let end = prose::pick(&mut rng, &profile.end_phrases.iter().map(String::as_str).collect::<Vec<_>>()).to_string();
            let end = if rng.gen_bool(0.3) {
                inject_break(&mut rng, &end, &[]).unwrap_or(end)
            } else {
                end
            };
            (Some(broken), Some(end))
        }
        DocKind::UnusualOpener => (
            Some(prose::pick(&mut rng, prose::UNUSUAL_OPENERS).to_string()),
            Some(prose::pick(&mut rng, &profile.end_phrases.iter().map(String::as_str).collect::<Vec<_>>()).to_string()),
        ),
        DocKind::Procedural => (None, None),
    };

    let mut b = Builder {
        text: String::new(),
        chars: 0,
    };
    let birth = format!("{}. {}. {}", rng.gen_range(1..29), rng.gen_range(1..13), rng.gen_range(1950..2003));
    let home = format!("{} {}, {}", prose::street(&mut rng), rng.gen_range(1..90), prose::town(&mut rng));
    let judge = prose::name(&mut rng);
    let mut span = None;
    if kind == DocKind::Procedural {
        b.push(&format!(
            "U z n e s e n i e\n{court} v trestnej veci obvineného {accused}, nar. {birth}, bytom {home}, rozhodol o sťažnosti proti uzneseniu o väzbe\nt a k t o :\nSťažnosť sa zamieta.\nO d ô v o d n e n i e\n{reasons}\nP o u č e n i e :\nProti tomuto uzneseniu nie je sťažnosť prípustná.\n",
        ));
    } else {
        let (offense, section) = prose::offense(&mut rng);
        let opener = opener.as_deref().expect("opener planted");
        let closer = closer.as_deref().expect("closer planted");
        b.push(&format!(
            "R o z s u d o k\nv mene Slovenskej republiky\n{court} v senáte zloženom z predsedu senátu {judge} prejednal v trestnej veci obžalovaného {accused}, nar. {birth}, trvale bytom {home}\nt a k t o\nr o z h o d o l :\nObžalovaný {accused}\n{opener}\n"
        ));
        let start = b.chars;
        b.push(&fact);
        span = Some((start, b.chars));
        b.push(&format!(
            "\n{closer} committed the offense of {offense} under section {section} of the criminal code,\na o d s u d z u j e sa\nna trest odňatia slobody v trvaní {} mesiacov.\nO d ô v o d n e n i e\n{reasons}\nP o u č e n i e :\nProti tomuto rozsudku je prípustné odvolanie.\n",
            rng.gen_range(3..60)
        ));
    }

    let mut text = b.text;
    let mut gold_text = fact.clone();
    if !profile.diacritics {
        // stripping keeps char counts since every mark here is a combining one
        text = strip_marks(&text);
        gold_text = strip_marks(&gold_text);
    }
    let document = VerdictDocument::new(&doc_id, court, docket, Some(year), text)
        .map_err(|e| FixtureError::Calibration(e.to_string()))?;
    let gold = match span {
        Some(_) => GoldAnnotation::new(&doc_id, Some(&gold_text)),
        None => GoldAnnotation::new(&doc_id, None),
    };
    Ok(FixtureDoc {
        planted: Planted {
            doc_id,
            kind,
            fact_start: span.map(|s| s.0),
            fact_end: span.map(|s| s.1),
            opener,
            closer,
        },
        document,
        gold,
    })
}

/// Generate a corpus. Every sixth pathological document is procedural; the
/// rest carry facts behind an opener the marker inventory does not know.
pub fn generate_corpus(spec: &FixtureSpec) -> Result<FixtureCorpus, FixtureError> {
    spec.validate()?;
    let [clean, noisy, pathological] = spec.counts();
    let mut slots: Vec<u8> = std::iter::repeat_n(0u8, clean)
        .chain(std::iter::repeat_n(1, noisy))
        .chain(std::iter::repeat_n(2, pathological))
        .collect();
    slots.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let mut seen_pathological = 0;
    let kinds: Vec<DocKind> = slots
        .into_iter()
        .map(|s| match s {
            0 => DocKind::Clean,
            1 => DocKind::Noisy,
            _ => {
                seen_pathological += 1;
                if (seen_pathological - 1) % 6 == 0 {
                    DocKind::Procedural
                } else {
                    DocKind::UnusualOpener
                }
            }
        })
        .collect();
    let docs = kinds
        .iter()
        .enumerate()
        .map(|(i, k)| generate_doc(spec, i, *k))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FixtureCorpus {
        spec: spec.clone(),
        docs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::baseline_extract;
    use crate::text::char_slice;

    fn spec(n: usize, f: [f64; 3]) -> FixtureSpec {
        FixtureSpec {
            n_docs: n,
            clean_fraction: f[0],
            noisy_fraction: f[1],
            pathological_fraction: f[2],
            ..FixtureSpec::default()
        }
    }

    #[test]
    fn counts_are_exact() {
        assert_eq!(FixtureSpec::default().counts(), [162, 226, 12]);
        assert_eq!(spec(100, [0.31, 0.66, 0.03]).counts(), [31, 66, 3]);
        assert_eq!(spec(10, [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]).counts().iter().sum::<usize>(), 10);
    }

    #[test]
    fn fractions_must_sum_to_one() {
        assert!(matches!(generate_corpus(&spec(10, [0.5, 0.4, 0.0])), Err(FixtureError::Spec(_))));
        assert!(matches!(generate_corpus(&spec(10, [1.2, -0.2, 0.0])), Err(FixtureError::Spec(_))));
    }

    #[test]
    fn clean_corpus_is_baseline_extractable() {
        let c = generate_corpus(&spec(10, [1.0, 0.0, 0.0])).unwrap();
        let p = default_phrases();
        for d in &c.docs {
            let o = baseline_extract(&d.document, &p.start_markers, &p.end_markers).unwrap();
            assert_eq!(o.text.as_deref(), Some(d.gold.gold_text.as_str()), "{}", d.document.raw_text);
        }
    }

    #[test]
    fn gold_offsets_index_the_document() {
        let c = generate_corpus(&spec(60, [0.3, 0.5, 0.2])).unwrap();
        for d in &c.docs {
            match (d.planted.fact_start, d.planted.fact_end) {
                (Some(s), Some(e)) => {
                    assert_eq!(char_slice(&d.document.raw_text, s, e), Some(d.gold.gold_text.as_str()));
                    assert!(d.gold.present);
                }
                _ => assert!(!d.gold.present),
            }
        }
        assert_eq!(c.count(DocKind::Procedural), 2);
    }

    #[test]
    fn noisy_docs_hide_every_literal_phrase() {
        let c = generate_corpus(&spec(40, [0.0, 1.0, 0.0])).unwrap();
        for d in &c.docs {
            for p in &c.spec.language_profile.start_phrases {
                assert!(!d.document.raw_text.contains(p.as_str()), "{p:?} in {}", d.document.raw_text);
            }
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let s = spec(30, [0.4, 0.5, 0.1]);
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        generate_corpus(&s).unwrap().write_to(a.path()).unwrap();
        generate_corpus(&s).unwrap().write_to(b.path()).unwrap();
        for f in ["corpus/docs.jsonl", "gold.jsonl", "planted.jsonl", "replay.jsonl"] {
            assert_eq!(
                std::fs::read(a.path().join(f)).unwrap(),
                std::fs::read(b.path().join(f)).unwrap(),
                "{f}"
            );
        }
        let other = FixtureSpec { seed: 8, ..s };
        assert_ne!(generate_corpus(&other).unwrap().docs, generate_corpus(&spec(30, [0.4, 0.5, 0.1])).unwrap().docs);
    }

    #[test]
    fn ascii_profile_has_no_marks() {
        let mut s = spec(5, [1.0, 0.0, 0.0]);
        s.language_profile.diacritics = false;
        let c = generate_corpus(&s).unwrap();
        for d in &c.docs {
            assert!(d.document.raw_text.is_ascii());
            let (a, b) = (d.planted.fact_start.unwrap(), d.planted.fact_end.unwrap());
            assert_eq!(char_slice(&d.document.raw_text, a, b), Some(d.gold.gold_text.as_str()));
        }
    }
}
