//! Span-level and candidate-level precision, recall and F1.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::ops::{Add, AddAssign};

use crate::corpus::{validate_moves, AnnotatedMove, Violation};
use crate::label::{CandidateLabel, MoveLabel};

/// True positives, false positives and false negatives for one label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LabelCounts {
    pub true_positives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
}

impl LabelCounts {
    /// Gold instances of the label.
    pub fn support(&self) -> u64 {
        self.true_positives + self.false_negatives
    }
}

impl Add for LabelCounts {
    type Output = LabelCounts;
    fn add(self, o: LabelCounts) -> LabelCounts {
        LabelCounts {
            true_positives: self.true_positives + o.true_positives,
            false_positives: self.false_positives + o.false_positives,
            false_negatives: self.false_negatives + o.false_negatives,
        }
    }
}

/// Per-label counts over the nine candidate labels (`none` stays zero for
/// move-level matching).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MatchCounts {
    pub per_label: [LabelCounts; CandidateLabel::COUNT],
}

impl MatchCounts {
    pub fn get(&self, label: CandidateLabel) -> LabelCounts {
        self.per_label[label.index()]
    }

    fn slot(&mut self, label: CandidateLabel) -> &mut LabelCounts {
        &mut self.per_label[label.index()]
    }

    /// Counts pooled over all labels.
    pub fn pooled(&self) -> LabelCounts {
        self.per_label.iter().copied().fold(LabelCounts::default(), Add::add)
    }
}

impl AddAssign for MatchCounts {
    fn add_assign(&mut self, o: MatchCounts) {
        for (a, b) in self.per_label.iter_mut().zip(o.per_label) {
            *a = *a + b;
        }
    }
}

impl Add for MatchCounts {
    type Output = MatchCounts;
    fn add(mut self, o: MatchCounts) -> MatchCounts {
        self += o;
        self
    }
}

impl core::iter::Sum for MatchCounts {
    fn sum<I: Iterator<Item = MatchCounts>>(iter: I) -> MatchCounts {
        iter.fold(MatchCounts::default(), Add::add)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("predicted moves are not a partition: {0}")]
    PredictedNotPartition(Violation),
    #[error("gold moves are not a partition: {0}")]
    GoldNotPartition(Violation),
    #[error("predicted moves cover {predicted} characters, gold moves cover {gold}")]
    LengthMismatch { predicted: usize, gold: usize },
    #[error("{predicted} predicted labels vs {gold} gold labels")]
    CountMismatch { predicted: usize, gold: usize },
}

/// Exact-match scoring: a predicted move is a true positive iff a gold move
/// has the same span and the same label.
pub fn match_moves(predicted: &[AnnotatedMove], gold: &[AnnotatedMove]) -> Result<MatchCounts, EvalError> {
    let gold_len = gold.last().map_or(0, |m| m.span.end);
    let pred_len = predicted.last().map_or(0, |m| m.span.end);
    if let Some(v) = validate_moves(gold, gold_len).into_iter().next() {
        return Err(EvalError::GoldNotPartition(v));
    }
    if let Some(v) = validate_moves(predicted, pred_len).into_iter().next() {
        return Err(EvalError::PredictedNotPartition(v));
    }
    if gold_len != pred_len {
        return Err(EvalError::LengthMismatch { predicted: pred_len, gold: gold_len });
    }

    let gold_by_span: BTreeMap<_, MoveLabel> = gold.iter().map(|m| (m.span, m.label)).collect();
    let mut counts = MatchCounts::default();
    let mut matched = 0usize;
    let mut matched_spans = BTreeMap::new();
    for p in predicted {
        if gold_by_span.get(&p.span) == Some(&p.label) {
            counts.slot(p.label.into()).true_positives += 1;
            matched_spans.insert(p.span, ());
            matched += 1;
        } else {
            counts.slot(p.label.into()).false_positives += 1;
        }
    }
    for g in gold {
        if !matched_spans.contains_key(&g.span) {
            counts.slot(g.label.into()).false_negatives += 1;
        }
    }
    debug_assert_eq!(matched, matched_spans.len());
    Ok(counts)
}

/// Position-wise comparison of candidate labels over all nine labels.
pub fn evaluate_candidate_labels(
    predicted: &[CandidateLabel],
    gold: &[CandidateLabel],
) -> Result<MatchCounts, EvalError> {
    if predicted.len() != gold.len() {
        return Err(EvalError::CountMismatch { predicted: predicted.len(), gold: gold.len() });
    }
    let mut counts = MatchCounts::default();
    for (&p, &g) in predicted.iter().zip(gold) {
        if p == g {
            counts.slot(p).true_positives += 1;
        } else {
            counts.slot(p).false_positives += 1;
            counts.slot(g).false_negatives += 1;
        }
    }
    Ok(counts)
}

/// Precision, recall and F1. A metric whose denominator is zero is 0 and
/// sets `degenerate`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub degenerate: bool,
}

impl Metrics {
    pub fn from_counts(c: LabelCounts) -> Metrics {
        let tp = c.true_positives as f64;
        let pd = c.true_positives + c.false_positives;
        let rd = c.true_positives + c.false_negatives;
        let precision = if pd == 0 { 0.0 } else { tp / pd as f64 };
        let recall = if rd == 0 { 0.0 } else { tp / rd as f64 };
        let m = Metrics::from_rates(precision, recall);
        Metrics { degenerate: m.degenerate || pd == 0 || rd == 0, ..m }
    }

    /// F1 as the harmonic mean of the given rates.
    pub fn from_rates(precision: f64, recall: f64) -> Metrics {
        let denom = precision + recall;
        if denom == 0.0 {
            Metrics { precision, recall, f1: 0.0, degenerate: true }
        } else {
            Metrics { precision, recall, f1: 2.0 * precision * recall / denom, degenerate: false }
        }
    }
}

/// Rounds a non-negative value half up to `decimals` places. The small
/// nudge absorbs binary representation error, so 0.745 becomes 0.75.
pub fn round_half_up(x: f64, decimals: i32) -> f64 {
    let scale = libm::pow(10.0, decimals as f64);
    let scaled = x * scale;
    libm::floor(scaled + 0.5 + 1e-9 * libm::fabs(scaled).max(1.0)) / scale
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportRow {
    /// `None` for the pooled total row.
    pub label: Option<CandidateLabel>,
    pub counts: LabelCounts,
    pub metrics: Metrics,
}

impl ReportRow {
    pub fn cases(&self) -> u64 {
        self.counts.support()
    }
}

/// Per-label rows and a pooled (micro) total.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
    pub total: ReportRow,
}

/// Report rows for final moves: the eight move labels.
pub fn move_rows() -> Vec<CandidateLabel> {
    MoveLabel::ALL.iter().map(|&m| m.into()).collect()
}

/// Report rows for candidates: all nine labels.
pub fn candidate_rows() -> Vec<CandidateLabel> {
    CandidateLabel::ALL.to_vec()
}

/// Metrics per listed label and pooled over them.
pub fn prf(counts: &MatchCounts, labels: &[CandidateLabel]) -> EvalReport {
    let rows: Vec<ReportRow> = labels
        .iter()
        .map(|&l| {
            let c = counts.get(l);
            ReportRow { label: Some(l), counts: c, metrics: Metrics::from_counts(c) }
        })
        .collect();
    let pooled = rows.iter().map(|r| r.counts).fold(LabelCounts::default(), Add::add);
    EvalReport { rows, total: ReportRow { label: None, counts: pooled, metrics: Metrics::from_counts(pooled) } }
}
