//! Marker-driven extraction with tolerant patterns.

use super::tolerant::{compile_tolerant, CompactText, RawMatch, TolerantPattern};
use super::{trim_range, ExtractError, ExtractionOutcome, Method};
use crate::ingest::VerdictDocument;
use crate::markers::MarkerSet;
use crate::sparing::detect_sparing;

/// Tolerant patterns for a marker set, compiled once and shared read-only.
#[derive(Debug, Clone)]
pub struct CompiledMarkers {
    start: Vec<TolerantPattern>,
    end: Vec<TolerantPattern>,
}

impl CompiledMarkers {
    pub fn new(markers: &MarkerSet) -> Result<Self, ExtractError> {
        let compile = |list: &[String]| list.iter().map(|p| compile_tolerant(p)).collect::<Result<Vec<_>, _>>();
        Ok(Self {
            start: compile(markers.start_markers())?,
            end: compile(markers.end_markers())?,
        })
    }

    pub fn start(&self) -> &[TolerantPattern] {
        &self.start
    }

    pub fn end(&self) -> &[TolerantPattern] {
        &self.end
    }
}

/// Earliest hit of any pattern at or after `from`; the longer phrase wins a tie.
fn earliest<'p>(patterns: &'p [TolerantPattern], text: &CompactText, from: usize) -> Option<(RawMatch, &'p TolerantPattern)> {
    patterns
        .iter()
        .filter_map(|p| p.find_from(text, from).map(|m| (m, p)))
        .min_by(|(a, pa), (b, pb)| a.start.cmp(&b.start).then(pb.compact_len().cmp(&pa.compact_len())))
}

pub fn advanced_extract(doc: &VerdictDocument, markers: &CompiledMarkers) -> ExtractionOutcome {
    let text = CompactText::new(&doc.raw_text);
    let chars = text.raw_chars();
    let Some((start, start_pat)) = earliest(&markers.start, &text, 0) else {
        return ExtractionOutcome::no_match(&doc.doc_id, Method::Advanced, "no_match(start)");
    };

    let mut terminator = None;
    let mut from = start.end;
    while let Some((m, p)) = earliest(&markers.end, &text, from) {
        if trim_range(chars, start.end, m.start).is_some() {
            terminator = Some((m.start, format!("end={:?}", p.phrase)));
            break;
        }
        from = m.start + 1;
    }
    if terminator.is_none() {
        terminator = detect_sparing(&doc.raw_text)
            .into_iter()
            .find(|s| s.start_offset >= start.end && trim_range(chars, start.end, s.start_offset).is_some())
            .map(|s| (s.start_offset, format!("end=sparing header {:?} (fallback)", s.collapsed)));
    }
    let Some((stop, end_diag)) = terminator else {
        return ExtractionOutcome::no_match(
            &doc.doc_id,
            Method::Advanced,
            format!("no_match(end) after start={:?}", start_pat.phrase),
        );
    };

    // a start marker repeated inside the payload moves the opening forward
    let mut open = (start, start_pat);
    loop {
        let inner = markers
            .start
            .iter()
            .flat_map(|p| p.find_iter(&text, open.0.end).map(move |m| (m, p)))
            .filter(|(m, _)| m.end <= stop)
            .max_by(|(a, pa), (b, pb)| a.start.cmp(&b.start).then(pa.compact_len().cmp(&pb.compact_len())));
        match inner {
            Some(found) if trim_range(chars, found.0.end, stop).is_some() => open = found,
            _ => break,
        }
    }

    match trim_range(chars, open.0.end, stop) {
        Some((s, e)) => ExtractionOutcome::extracted(
            &doc.doc_id,
            Method::Advanced,
            &doc.raw_text,
            s,
            e,
            format!("start={:?}; {end_diag}", open.1.phrase),
        ),
        None => ExtractionOutcome::no_match(&doc.doc_id, Method::Advanced, "no_match(end): empty payload"),
    }
}
