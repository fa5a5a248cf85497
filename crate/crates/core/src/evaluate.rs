//! Scoring extractions against gold annotations.

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::{locate_span, similarity};
use crate::extract::{ExtractionOutcome, Method};
use crate::report::{percent, percent_cell, render_table};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed gold line {line}: {msg}")]
    Gold { line: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldAnnotation {
    pub doc_id: String,
    pub present: bool,
    pub gold_text: String,
}

impl GoldAnnotation {
    pub fn new(doc_id: impl Into<String>, gold_text: Option<&str>) -> Self {
        Self {
            doc_id: doc_id.into(),
            present: gold_text.is_some(),
            gold_text: gold_text.unwrap_or_default().to_string(),
        }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        if self.present == self.gold_text.is_empty() {
            return Err(EvalError::Argument(format!(
                "gold {}: present must hold exactly when gold_text is non-empty",
                self.doc_id
            )));
        }
        Ok(())
    }
}

pub fn read_gold<R: BufRead>(reader: R) -> Result<Vec<GoldAnnotation>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| EvalError::Io {
            path: "<gold>".into(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let g: GoldAnnotation = serde_json::from_str(&line).map_err(|e| EvalError::Gold {
            line: i + 1,
            msg: e.to_string(),
        })?;
        g.validate().map_err(|e| EvalError::Gold {
            line: i + 1,
            msg: e.to_string(),
        })?;
        out.push(g);
    }
    Ok(out)
}

pub fn load_gold(path: &Path) -> Result<Vec<GoldAnnotation>, EvalError> {
    let file = std::fs::File::open(path).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_gold(std::io::BufReader::new(file))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchBand {
    Perfect,
    Exact,
    High,
    Medium,
    Low,
    NotExtracted,
}

impl MatchBand {
    pub const ALL: [MatchBand; 6] = [
        MatchBand::Perfect,
        MatchBand::Exact,
        MatchBand::High,
        MatchBand::Medium,
        MatchBand::Low,
        MatchBand::NotExtracted,
    ];
}

/// Cutoffs are left-inclusive: 0.95 is exact, 0.80 high, 0.50 medium.
pub fn band(score: Option<f64>) -> Result<MatchBand, EvalError> {
    let Some(s) = score else {
        return Ok(MatchBand::NotExtracted);
    };
    if !(0.0..=1.0).contains(&s) {
        return Err(EvalError::Argument(format!("score {s} outside [0, 1]")));
    }
    Ok(if s == 1.0 {
        MatchBand::Perfect
    } else if s >= 0.95 {
        MatchBand::Exact
    } else if s >= 0.80 {
        MatchBand::High
    } else if s >= 0.50 {
        MatchBand::Medium
    } else {
        MatchBand::Low
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub doc_id: String,
    pub method: Method,
    pub extracted: bool,
    pub score: Option<f64>,
    pub band: MatchBand,
    /// Nothing extracted and nothing to extract.
    pub correct_absence: bool,
    pub diagnostics: String,
}

pub fn compare(outcome: &ExtractionOutcome, gold: &GoldAnnotation) -> Result<Comparison, EvalError> {
    if outcome.doc_id != gold.doc_id {
        return Err(EvalError::Argument(format!(
            "doc_id mismatch: outcome {:?}, gold {:?}",
            outcome.doc_id, gold.doc_id
        )));
    }
    let text = outcome.text.as_deref().filter(|_| outcome.is_extracted());
    let (score, correct_absence, diagnostics) = match (text, gold.present) {
        (Some(t), true) => (Some(similarity(t, &gold.gold_text)), false, String::new()),
        (None, true) => (None, false, String::new()),
        (None, false) => (None, true, "correct absence".to_string()),
        (Some(_), false) => (Some(0.0), false, "spurious".to_string()),
    };
    Ok(Comparison {
        doc_id: gold.doc_id.clone(),
        method: outcome.method,
        extracted: text.is_some(),
        score,
        band: band(score)?,
        correct_absence,
        diagnostics,
    })
}

/// Pair every gold annotation with its outcome; a missing outcome counts as
/// not extracted.
pub fn compare_all(outcomes: &[ExtractionOutcome], gold: &[GoldAnnotation], method: Method) -> Result<Vec<Comparison>, EvalError> {
    let by_id: HashMap<&str, &ExtractionOutcome> = outcomes.iter().map(|o| (o.doc_id.as_str(), o)).collect();
    gold.iter()
        .map(|g| match by_id.get(g.doc_id.as_str()) {
            Some(o) => compare(o, g),
            None => compare(&ExtractionOutcome::no_match(&g.doc_id, method, "missing result"), g),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: Method,
    pub n: usize,
    pub extracted: usize,
    pub extraction_rate: f64,
    pub quality_ge_95: f64,
    pub band_counts: BTreeMap<MatchBand, usize>,
    pub correct_absences: usize,
    /// Mean similarity over scored comparisons.
    pub mean_similarity: Option<f64>,
}

impl MethodReport {
    pub fn count(&self, b: MatchBand) -> usize {
        self.band_counts.get(&b).copied().unwrap_or(0)
    }

    pub fn quality_count(&self) -> usize {
        self.count(MatchBand::Perfect) + self.count(MatchBand::Exact)
    }
}

pub fn method_report(method: Method, comparisons: &[Comparison]) -> Result<MethodReport, EvalError> {
    if comparisons.is_empty() {
        return Err(EvalError::Argument("no comparisons to report".into()));
    }
    let n = comparisons.len();
    let mut band_counts: BTreeMap<MatchBand, usize> = MatchBand::ALL.iter().map(|b| (*b, 0)).collect();
    for c in comparisons {
        *band_counts.entry(c.band).or_default() += 1;
    }
    let extracted = comparisons.iter().filter(|c| c.extracted).count();
    let correct_absences = comparisons.iter().filter(|c| c.correct_absence).count();
    let mut scores: Vec<f64> = comparisons.iter().filter_map(|c| c.score).collect();
    scores.sort_by(f64::total_cmp);
    let mean_similarity = (!scores.is_empty()).then(|| scores.iter().sum::<f64>() / scores.len() as f64);
    let quality = band_counts[&MatchBand::Perfect] + band_counts[&MatchBand::Exact];
    Ok(MethodReport {
        method,
        n,
        extracted,
        extraction_rate: extracted as f64 / n as f64,
        quality_ge_95: quality as f64 / n as f64,
        band_counts,
        correct_absences,
        mean_similarity,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum HallucinationBin {
    #[serde(rename = "100")]
    Full,
    #[serde(rename = "95-99")]
    From95,
    #[serde(rename = "90-94")]
    From90,
    #[serde(rename = "80-89")]
    From80,
    #[serde(rename = "<80")]
    Below80,
}

impl HallucinationBin {
    pub const ALL: [HallucinationBin; 5] = [Self::Full, Self::From95, Self::From90, Self::From80, Self::Below80];

    pub fn of(score: f64) -> Self {
        if score >= 1.0 {
            Self::Full
        } else if score >= 0.95 {
            Self::From95
        } else if score >= 0.90 {
            Self::From90
        } else if score >= 0.80 {
            Self::From80
        } else {
            Self::Below80
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Full => "100 %",
            Self::From95 => "95-99 %",
            Self::From90 => "90-94 %",
            Self::From80 => "80-89 %",
            Self::Below80 => "<80 %",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HallucinationReport {
    pub n: usize,
    pub bins: BTreeMap<HallucinationBin, usize>,
    pub mean_similarity: f64,
    pub scores: Vec<f64>,
}

impl HallucinationReport {
    pub fn counts(&self) -> [usize; 5] {
        HallucinationBin::ALL.map(|b| self.bins.get(&b).copied().unwrap_or(0))
    }
}

/// Similarity of each generated string to its best source span.
pub fn hallucination_report<S: AsRef<str>>(pairs: &[(S, S)]) -> Result<HallucinationReport, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::Argument("no pairs to report".into()));
    }
    let scores: Vec<f64> = pairs
        .iter()
        .map(|(generated, source)| {
            let (g, s) = (generated.as_ref(), source.as_ref());
            if g.is_empty() || s.is_empty() {
                return if g == s { 1.0 } else { 0.0 };
            }
            locate_span(g, s).score
        })
        .collect();
    let mut bins: BTreeMap<HallucinationBin, usize> = HallucinationBin::ALL.iter().map(|b| (*b, 0)).collect();
    for s in &scores {
        *bins.entry(HallucinationBin::of(*s)).or_default() += 1;
    }
    let mut sorted = scores.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(HallucinationReport {
        n: scores.len(),
        bins,
        mean_similarity: sorted.iter().sum::<f64>() / sorted.len() as f64,
        scores,
    })
}

fn method_label(m: Method) -> &'static str {
    match m {
        Method::Baseline => "Baseline",
        Method::Advanced => "Advanced Regex",
        Method::Llm => "LLM",
        Method::Combined => "Combined",
    }
}

fn cell(count: usize, n: usize) -> String {
    percent_cell(count as u64, n as u64, 2)
}

/// Extraction rate and quality per method.
pub fn render_method_table(reports: &[MethodReport]) -> String {
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                method_label(r.method).to_string(),
                cell(r.extracted, r.n),
                cell(r.quality_count(), r.n),
            ]
        })
        .collect();
    render_table(&["Method", "Extraction Rate", "Quality >=95%"], &rows)
}

/// Perfect, good and failed shares per method.
pub fn render_quality_table(reports: &[MethodReport]) -> String {
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                method_label(r.method).to_string(),
                cell(r.count(MatchBand::Perfect), r.n),
                cell(r.count(MatchBand::High), r.n),
                cell(r.count(MatchBand::Low), r.n),
            ]
        })
        .collect();
    render_table(&["Method", "Perfect 100%", "Good 80-95%", "Failed <50%"], &rows)
}

/// Outcome shares on a difficult set; failures include missing extractions.
pub fn render_difficult_table(report: &MethodReport) -> String {
    let n = report.n;
    let failed = report.count(MatchBand::Low) + report.count(MatchBand::NotExtracted);
    let rows = vec![
        vec!["Perfect match (100%)".to_string(), cell(report.count(MatchBand::Perfect), n)],
        vec!["High quality (95-100%)".to_string(), cell(report.count(MatchBand::Exact), n)],
        vec!["Good quality (80-95%)".to_string(), cell(report.count(MatchBand::High), n)],
        vec!["Fair quality (50-80%)".to_string(), cell(report.count(MatchBand::Medium), n)],
        vec!["Failed extraction".to_string(), cell(failed, n)],
        vec!["Total high quality (>=95%)".to_string(), cell(report.quality_count(), n)],
    ];
    render_table(&["Outcome", "Share"], &rows)
}

pub fn render_hallucination_table(report: &HallucinationReport) -> String {
    let mut rows: Vec<Vec<String>> = HallucinationBin::ALL
        .iter()
        .map(|b| {
            let c = report.bins.get(b).copied().unwrap_or(0);
            vec![b.label().to_string(), c.to_string(), cell(c, report.n)]
        })
        .collect();
    rows.push(vec![
        "Mean similarity".to_string(),
        String::new(),
        format!("{:.4}", report.mean_similarity),
    ]);
    render_table(&["Similarity band", "Cases", "Share"], &rows)
}

/// Share of a report's documents in a band, as rendered in the tables.
pub fn band_share(report: &MethodReport, b: MatchBand) -> Option<String> {
    percent(report.count(b) as u64, report.n as u64, 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn outcome(id: &str, text: Option<&str>) -> ExtractionOutcome {
        match text {
            Some(t) => {
                let raw = format!("xx {t}");
                ExtractionOutcome::extracted(id, Method::Llm, &raw, 3, 3 + t.chars().count(), "")
            }
            None => ExtractionOutcome::no_match(id, Method::Llm, "none"),
        }
    }

    #[test]
    fn band_boundaries() {
        assert_eq!(band(Some(1.0)).unwrap(), MatchBand::Perfect);
        assert_eq!(band(Some(0.95)).unwrap(), MatchBand::Exact);
        assert_eq!(band(Some(0.9499999)).unwrap(), MatchBand::High);
        assert_eq!(band(Some(0.80)).unwrap(), MatchBand::High);
        assert_eq!(band(Some(0.50)).unwrap(), MatchBand::Medium);
        assert_eq!(band(Some(0.4999)).unwrap(), MatchBand::Low);
        assert_eq!(band(Some(0.0)).unwrap(), MatchBand::Low);
        assert_eq!(band(None).unwrap(), MatchBand::NotExtracted);
        assert!(band(Some(1.01)).is_err());
        assert!(band(Some(-0.1)).is_err());
        assert!(band(Some(f64::NAN)).is_err());
    }

    #[test]
    fn comparison_cases() {
        let present = GoldAnnotation::new("a", Some("he stole a bicycle"));
        let absent = GoldAnnotation::new("a", None);
        let c = compare(&outcome("a", Some("he stole a bicycle")), &present).unwrap();
        assert_eq!((c.score, c.band), (Some(1.0), MatchBand::Perfect));
        let c = compare(&outcome("a", None), &present).unwrap();
        assert_eq!((c.band, c.correct_absence), (MatchBand::NotExtracted, false));
        let c = compare(&outcome("a", None), &absent).unwrap();
        assert!(c.correct_absence);
        let c = compare(&outcome("a", Some("x")), &absent).unwrap();
        assert_eq!((c.band, c.diagnostics.as_str()), (MatchBand::Low, "spurious"));
        assert!(compare(&outcome("b", None), &present).is_err());
    }

    #[test]
    fn gold_validation() {
        let bad = r#"{"doc_id":"a","present":true,"gold_text":""}"#;
        assert!(matches!(read_gold(bad.as_bytes()), Err(EvalError::Gold { line: 1, .. })));
        let good = "{\"doc_id\":\"a\",\"present\":false,\"gold_text\":\"\"}\n\n";
        assert_eq!(read_gold(good.as_bytes()).unwrap(), vec![GoldAnnotation::new("a", None)]);
    }

    fn synthetic(bands: &[(Option<f64>, usize)]) -> Vec<Comparison> {
        let mut out = Vec::new();
        for (score, k) in bands {
            for _ in 0..*k {
                out.push(Comparison {
                    doc_id: format!("d{}", out.len()),
                    method: Method::Combined,
                    extracted: score.is_some(),
                    score: *score,
                    band: band(*score).unwrap(),
                    correct_absence: false,
                    diagnostics: String::new(),
                });
            }
        }
        out
    }

    #[test]
    fn combined_row_arithmetic() {
        // 398 extracted of 400, 368 at or above 0.95
        let cs = synthetic(&[(Some(1.0), 46), (Some(0.97), 322), (Some(0.85), 11), (Some(0.6), 8), (Some(0.1), 11), (None, 2)]);
        let r = method_report(Method::Combined, &cs).unwrap();
        assert_eq!(percent(r.extracted as u64, 400, 2).unwrap(), "99.50");
        assert_eq!(percent(r.quality_count() as u64, 400, 2).unwrap(), "92.00");
    }

    #[test]
    fn difficult_set_shares() {
        let cs = synthetic(&[(Some(1.0), 163), (Some(0.96), 5), (Some(0.9), 7), (Some(0.7), 1), (None, 24)]);
        let r = method_report(Method::Llm, &cs).unwrap();
        let table = render_difficult_table(&r);
        for s in ["81.50%", "2.50%", "3.50%", "0.50%", "12.00%", "84.00%"] {
            assert!(table.contains(s), "{s} missing from\n{table}");
        }
    }

    #[test]
    fn identical_pairs_all_perfect() {
        let pairs = vec![("abc def", "zz abc def zz"); 5];
        let r = hallucination_report(&pairs).unwrap();
        assert_eq!(r.counts(), [5, 0, 0, 0, 0]);
        assert_eq!(r.mean_similarity, 1.0);
    }

    #[test]
    fn all_perfect_report() {
        let r = method_report(Method::Advanced, &synthetic(&[(Some(1.0), 7)])).unwrap();
        assert_eq!((r.extraction_rate, r.quality_ge_95), (1.0, 1.0));
        assert!(method_report(Method::Advanced, &[]).is_err());
    }

    fn score_strategy() -> impl Strategy<Value = Option<f64>> {
        prop_oneof![Just(None), Just(Some(1.0)), Just(Some(0.95)), Just(Some(0.8)), Just(Some(0.5)), (0.0..=1.0f64).prop_map(Some)]
    }

    proptest! {
        #[test]
        fn report_invariants(scores in proptest::collection::vec(score_strategy(), 1..60), seed in any::<u64>()) {
            let cs: Vec<Comparison> = scores.iter().enumerate().map(|(i, s)| Comparison {
                doc_id: i.to_string(), method: Method::Llm, extracted: s.is_some(), score: *s,
                band: band(*s).unwrap(), correct_absence: false, diagnostics: String::new(),
            }).collect();
            let r = method_report(Method::Llm, &cs).unwrap();
            prop_assert_eq!(r.band_counts.values().sum::<usize>(), r.n);
            prop_assert!(r.quality_ge_95 <= r.extraction_rate);
            prop_assert!((0.0..=1.0).contains(&r.extraction_rate));
            let mut shuffled = cs.clone();
            let k = (seed as usize) % shuffled.len();
            shuffled.rotate_left(k);
            shuffled.reverse();
            prop_assert_eq!(method_report(Method::Llm, &shuffled).unwrap(), r);
        }
    }
}
