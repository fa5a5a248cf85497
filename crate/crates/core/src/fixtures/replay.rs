use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{FixtureCorpus, FixtureDoc, FixtureError};
use crate::llm::{build_prompt, tokens_for, LlmResult, LlmStatus, PromptSpec, ReplayEntry, OUTPUT_FIELD};

/// Share of documents answered perfectly, with seeded edits, or refused.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReplayBehavior {
    pub perfect_fraction: f64,
    pub mutated_fraction: f64,
    pub refuse_fraction: f64,
    pub max_edits: usize,
    pub seed: u64,
}

impl Default for ReplayBehavior {
    fn default() -> Self {
        Self {
            perfect_fraction: 1.0,
            mutated_fraction: 0.0,
            refuse_fraction: 0.0,
            max_edits: 3,
            seed: 11,
        }
    }
}

impl ReplayBehavior {
    pub fn validate(&self) -> Result<(), FixtureError> {
        let f = [self.perfect_fraction, self.mutated_fraction, self.refuse_fraction];
        if f.iter().any(|x| !(0.0..=1.0).contains(x)) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(FixtureError::Spec("replay fractions must lie in [0, 1] and sum to 1".into()));
        }
        if self.max_edits == 0 && self.mutated_fraction > 0.0 {
            return Err(FixtureError::Spec("mutated replies need max_edits >= 1".into()));
        }
        Ok(())
    }
}

/// Scripted reply for one document.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scripted {
    /// The gold statement, or a null statement when there is none.
    Exact,
    /// The gold statement cut short to about `keep` of its length.
    Truncated { keep: f64 },
    /// The gold statement with this many letter substitutions.
    Substituted { edits: usize },
    /// A well-formed reply reporting no statement.
    NoStatement,
    Refuse(LlmStatus),
}

/// Replace `edits` interior ASCII lowercase letters, never two neighbours.
pub fn substitute_letters(text: &str, edits: usize, rng: &mut ChaCha8Rng) -> String {
    let mut chars: Vec<char> = text.chars().collect();
    let margin = 8.min(chars.len() / 4);
    let mut eligible: Vec<usize> = (margin..chars.len().saturating_sub(margin))
        .filter(|&i| chars[i].is_ascii_lowercase())
        .collect();
    eligible.shuffle(rng);
    let mut chosen: Vec<usize> = Vec::new();
    for i in eligible {
        if chosen.len() == edits {
            break;
        }
        if chosen.iter().all(|&j| i.abs_diff(j) > 1) {
            chosen.push(i);
        }
    }
    for i in chosen {
        let shift = rng.gen_range(1..26u8);
        chars[i] = char::from(b'a' + (chars[i] as u8 - b'a' + shift) % 26);
    }
    chars.into_iter().collect()
}

/// Prefix keeping about `keep` of the chars, ending on a non-space.
pub fn truncate_to(text: &str, keep: f64) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut n = ((chars.len() as f64) * keep).round() as usize;
    n = n.clamp(1, chars.len());
    while n > 1 && chars[n - 1].is_whitespace() {
        n -= 1;
    }
    chars[..n].iter().collect()
}

fn reply(statement: Option<&str>) -> String {
    serde_json::json!({ OUTPUT_FIELD: statement }).to_string()
}

fn respond(doc: &FixtureDoc, script: Scripted, rng: &mut ChaCha8Rng, prompt_chars: usize) -> LlmResult {
    let gold = doc.gold.present.then_some(doc.gold.gold_text.as_str());
    let input = tokens_for(prompt_chars as u64, 4.0);
    let out = match (script, gold) {
        (Scripted::Refuse(status), _) => return LlmResult::refused(status, input),
        (Scripted::NoStatement, _) | (_, None) => reply(None),
        (Scripted::Exact, Some(g)) => reply(Some(g)),
        (Scripted::Truncated { keep }, Some(g)) => reply(Some(&truncate_to(g, keep))),
        (Scripted::Substituted { edits }, Some(g)) => reply(Some(&substitute_letters(g, edits, rng))),
    };
    let output = tokens_for(out.chars().count() as u64, 4.0);
    LlmResult::ok(out, input, output)
}

/// One recorded reply per document, keyed by the prompt the cascade will send.
pub fn replay_from_plan(corpus: &FixtureCorpus, plan: &[Scripted], seed: u64) -> Result<Vec<ReplayEntry>, FixtureError> {
    if plan.len() != corpus.docs.len() {
        return Err(FixtureError::Spec(format!(
            "plan has {} entries for {} documents",
            plan.len(),
            corpus.docs.len()
        )));
    }
    let markers = corpus.spec.language_profile.marker_set()?;
    let spec = PromptSpec::default_for(&markers);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    corpus
        .docs
        .iter()
        .zip(plan)
        .map(|(doc, script)| {
            let prompt = build_prompt(&doc.document, &spec).map_err(|e| FixtureError::Spec(e.to_string()))?;
            let result = respond(doc, *script, &mut rng, prompt.text.chars().count());
            let mut entry = ReplayEntry::new(&prompt.text, &result);
            entry.doc_id = Some(doc.document.doc_id.clone());
            Ok(entry)
        })
        .collect()
}

/// Replies drawn by behavior fractions; assignment to documents is seeded.
pub fn generate_replay(corpus: &FixtureCorpus, behavior: &ReplayBehavior) -> Result<Vec<ReplayEntry>, FixtureError> {
    behavior.validate()?;
    let n = corpus.docs.len();
    let mut rng = ChaCha8Rng::seed_from_u64(behavior.seed);
    let perfect = (behavior.perfect_fraction * n as f64).round() as usize;
    let mutated = ((behavior.mutated_fraction * n as f64).round() as usize).min(n - perfect.min(n));
    let mut plan: Vec<Scripted> = Vec::with_capacity(n);
    plan.extend(std::iter::repeat_n(Scripted::Exact, perfect.min(n)));
    for _ in 0..mutated {
        plan.push(Scripted::Substituted {
            edits: rng.gen_range(1..=behavior.max_edits),
        });
    }
    while plan.len() < n {
        let status = if rng.gen_bool(0.5) {
            LlmStatus::SafetyFlagged
        } else {
            LlmStatus::TokenLimitExceeded
        };
        plan.push(Scripted::Refuse(status));
    }
    plan.shuffle(&mut rng);
    replay_from_plan(corpus, &plan, rng.gen())
}
