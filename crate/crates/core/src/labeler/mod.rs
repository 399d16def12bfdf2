//! Candidate classification in full-essay context.
//!
//! A [`Classifier`] maps a [`ModifiedEssay`] (the candidate texts with
//! boundaries between them) to one [`LabelDistribution`] per candidate.
//! Implementations here are the trainable [`BaselineModel`] and the
//! [`OracleClassifier`]; the `argmove` crate adds a remote backend.

mod baseline;
mod features;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

pub use baseline::{
    train_baseline, BaselineModel, ModelError, TrainConfig, TrainError, TrainingExample, TrainingMetadata,
};
pub use features::{FeatureConfig, FeatureExtractor, DEFAULT_LEXICON};

use crate::corpus::Essay;
use crate::label::CandidateLabel;
use crate::segmenter::CandidateMove;
use crate::text::CharIndex;

/// Separator inserted between candidates when the essay is serialized for an
/// encoder.
pub const BOUNDARY_TOKEN: &str = "[SEP]";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub candidate: CandidateMove,
    pub text: String,
}

/// An essay as an ordered list of candidate segments, one boundary between
/// each consecutive pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModifiedEssay {
    pub essay_id: String,
    pub segments: Vec<Segment>,
}

impl ModifiedEssay {
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Internal boundaries: one fewer than the segment count.
    pub fn boundary_count(&self) -> usize {
        self.segments.len().saturating_sub(1)
    }

    /// Segment texts joined with `boundary`.
    pub fn joined(&self, boundary: &str) -> String {
        let mut out = String::new();
        for (i, s) in self.segments.iter().enumerate() {
            if i > 0 {
                out.push_str(boundary);
            }
            out.push_str(&s.text);
        }
        out
    }

    /// The original essay text (markers removed).
    pub fn text(&self) -> String {
        self.joined("")
    }

    pub fn texts(&self) -> Vec<&str> {
        self.segments.iter().map(|s| s.text.as_str()).collect()
    }

    /// Sub-essay over `range`, keeping the essay id.
    pub fn window(&self, range: Range<usize>) -> ModifiedEssay {
        ModifiedEssay { essay_id: self.essay_id.clone(), segments: self.segments[range].to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ContextError {
    #[error("essay {essay_id}: no candidates")]
    Empty { essay_id: String },
    #[error("essay {essay_id}: candidate {index} starts at {start}, expected {expected}")]
    NotContiguous { essay_id: String, index: usize, start: usize, expected: usize },
    #[error("essay {essay_id}: candidates end at {end}, text has {len} characters")]
    NotCovering { essay_id: String, end: usize, len: usize },
}

/// Pairs each candidate with its text. The candidates must partition the
/// essay text.
pub fn build_context(essay: &Essay, candidates: &[CandidateMove]) -> Result<ModifiedEssay, ContextError> {
    let essay_id = String::from(essay.essay_id());
    if candidates.is_empty() {
        return Err(ContextError::Empty { essay_id });
    }
    let mut expected = 0;
    for (index, c) in candidates.iter().enumerate() {
        if c.span.start != expected || c.span.end <= c.span.start {
            return Err(ContextError::NotContiguous { essay_id, index, start: c.span.start, expected });
        }
        expected = c.span.end;
    }
    if expected != essay.len() {
        return Err(ContextError::NotCovering { essay_id, end: expected, len: essay.len() });
    }
    let idx = CharIndex::new(essay.text());
    let segments = candidates
        .iter()
        .enumerate()
        .map(|(i, c)| Segment { candidate: CandidateMove { span: c.span, index: i }, text: idx.slice(c.span).into() })
        .collect();
    Ok(ModifiedEssay { essay_id, segments })
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DistributionError {
    #[error("probability for {label} is {value}, outside [0, 1]")]
    OutOfRange { label: CandidateLabel, value: f64 },
    #[error("probabilities sum to {0}, not 1")]
    NotNormalized(f64),
}

/// Tolerance on the probability sum.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;

/// Probabilities over the nine candidate labels, indexed in canonical order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelDistribution {
    probabilities: [f64; CandidateLabel::COUNT],
}

impl LabelDistribution {
    pub fn new(probabilities: [f64; CandidateLabel::COUNT]) -> Result<Self, DistributionError> {
        for (i, &p) in probabilities.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                return Err(DistributionError::OutOfRange { label: CandidateLabel::ALL[i], value: p });
            }
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(DistributionError::NotNormalized(sum));
        }
        Ok(LabelDistribution { probabilities })
    }

    pub fn from_map(map: &BTreeMap<CandidateLabel, f64>) -> Result<Self, DistributionError> {
        let mut p = [f64::NAN; CandidateLabel::COUNT];
        for (l, v) in map {
            p[l.index()] = *v;
        }
        Self::new(p)
    }

    pub fn uniform() -> Self {
        LabelDistribution { probabilities: [1.0 / CandidateLabel::COUNT as f64; CandidateLabel::COUNT] }
    }

    pub fn one_hot(label: CandidateLabel) -> Self {
        let mut probabilities = [0.0; CandidateLabel::COUNT];
        probabilities[label.index()] = 1.0;
        LabelDistribution { probabilities }
    }

    /// Numerically stable softmax.
    pub fn from_logits(logits: &[f64; CandidateLabel::COUNT]) -> Self {
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut probabilities = [0.0; CandidateLabel::COUNT];
        let mut sum = 0.0;
        for (p, &z) in probabilities.iter_mut().zip(logits) {
            *p = libm::exp(z - max);
            sum += *p;
        }
        for p in &mut probabilities {
            *p /= sum;
        }
        LabelDistribution { probabilities }
    }

    pub fn probabilities(&self) -> &[f64; CandidateLabel::COUNT] {
        &self.probabilities
    }

    pub fn get(&self, label: CandidateLabel) -> f64 {
        self.probabilities[label.index()]
    }

    /// Most probable label; ties go to the earlier label in canonical order.
    pub fn argmax(&self) -> CandidateLabel {
        let mut best = 0;
        for i in 1..CandidateLabel::COUNT {
            if self.probabilities[i] > self.probabilities[best] {
                best = i;
            }
        }
        CandidateLabel::ALL[best]
    }
}

pub fn predict_labels(distributions: &[LabelDistribution]) -> Vec<CandidateLabel> {
    distributions.iter().map(LabelDistribution::argmax).collect()
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClassifyError {
    #[error("response count mismatch: expected {expected} distributions, got {got}")]
    CountMismatch { expected: usize, got: usize },
    #[error("distribution {index}: {source}")]
    InvalidDistribution { index: usize, source: DistributionError },
    #[error("no labels known for essay {0}")]
    UnknownEssay(String),
    #[error("{0}")]
    Backend(String),
}

pub trait Classifier {
    /// One distribution per segment of `context`, in order.
    fn classify(&self, context: &ModifiedEssay) -> Result<Vec<LabelDistribution>, ClassifyError>;
}

/// Checks classifier output arity against the context.
pub fn check_arity(context: &ModifiedEssay, out: &[LabelDistribution]) -> Result<(), ClassifyError> {
    if out.len() != context.len() {
        return Err(ClassifyError::CountMismatch { expected: context.len(), got: out.len() });
    }
    Ok(())
}

/// Emits known candidate labels as one-hot distributions.
#[derive(Debug, Clone, Default)]
pub struct OracleClassifier {
    labels: BTreeMap<String, Vec<CandidateLabel>>,
}

impl OracleClassifier {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, essay_id: impl Into<String>, labels: Vec<CandidateLabel>) {
        self.labels.insert(essay_id.into(), labels);
    }
}

impl Classifier for OracleClassifier {
    fn classify(&self, context: &ModifiedEssay) -> Result<Vec<LabelDistribution>, ClassifyError> {
        let labels =
            self.labels.get(&context.essay_id).ok_or_else(|| ClassifyError::UnknownEssay(context.essay_id.clone()))?;
        let out: Vec<_> = labels.iter().map(|&l| LabelDistribution::one_hot(l)).collect();
        check_arity(context, &out)?;
        Ok(out)
    }
}

/// A window of consecutive segments sent to a length-limited classifier, and
/// the segments whose label it decides.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowPlan {
    pub range: Range<usize>,
    pub decides: Vec<usize>,
}

/// Plans windows so that no window exceeds `char_budget` characters (a
/// segment longer than the budget gets a window of its own). Each segment is
/// decided by a window grown symmetrically around it; segments with the same
/// window share one plan. A context within budget is a single window.
pub fn plan_windows(context: &ModifiedEssay, char_budget: usize) -> Vec<WindowPlan> {
    let lens: Vec<usize> = context.segments.iter().map(|s| s.text.chars().count()).collect();
    let n = lens.len();
    if lens.iter().sum::<usize>() <= char_budget {
        return alloc::vec![WindowPlan { range: 0..n, decides: (0..n).collect() }];
    }
    let mut plans: Vec<WindowPlan> = Vec::new();
    for i in 0..n {
        let (mut lo, mut hi) = (i, i + 1);
        let mut total = lens[i];
        loop {
            let mut grew = false;
            if lo > 0 && total + lens[lo - 1] <= char_budget {
                lo -= 1;
                total += lens[lo];
                grew = true;
            }
            if hi < n && total + lens[hi] <= char_budget {
                total += lens[hi];
                hi += 1;
                grew = true;
            }
            if !grew {
                break;
            }
        }
        match plans.last_mut() {
            Some(p) if p.range == (lo..hi) => p.decides.push(i),
            _ => plans.push(WindowPlan { range: lo..hi, decides: alloc::vec![i] }),
        }
    }
    plans
}

/// Classifies a long context window by window, taking each segment's
/// distribution from the window that decides it.
pub fn classify_windowed<C: Classifier + ?Sized>(
    classifier: &C,
    context: &ModifiedEssay,
    char_budget: usize,
) -> Result<Vec<LabelDistribution>, ClassifyError> {
    let mut out = alloc::vec![LabelDistribution::uniform(); context.len()];
    for plan in plan_windows(context, char_budget) {
        let window = context.window(plan.range.clone());
        let dists = classifier.classify(&window)?;
        check_arity(&window, &dists)?;
        for &i in &plan.decides {
            out[i] = dists[i - plan.range.start];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::MoveLabel;
    use crate::segmenter::{segment_candidates, SegmentationRules};
    use alloc::vec;

    fn essay(text: &str) -> Essay {
        Essay::new("e1", "l1", 1, text, None).unwrap()
    }

    #[test]
    fn context_counts_boundaries() {
        let e = essay("A, B, C.");
        let c = segment_candidates(e.text(), &SegmentationRules::default());
        let ctx = build_context(&e, &c).unwrap();
        assert_eq!(ctx.len(), 3);
        assert_eq!(ctx.boundary_count(), 2);
        assert_eq!(ctx.joined(BOUNDARY_TOKEN), "A, [SEP]B, [SEP]C.");
        assert_eq!(ctx.text(), "A, B, C.");

        let one = essay("Hello.");
        let ctx = build_context(&one, &segment_candidates(one.text(), &SegmentationRules::default())).unwrap();
        assert_eq!((ctx.len(), ctx.boundary_count()), (1, 0));
    }

    #[test]
    fn context_rejects_gaps() {
        let e = essay("abcdef");
        let c = [
            CandidateMove { span: crate::Span { start: 0, end: 2 }, index: 0 },
            CandidateMove { span: crate::Span { start: 3, end: 6 }, index: 1 },
        ];
        assert!(matches!(build_context(&e, &c), Err(ContextError::NotContiguous { index: 1, .. })));
        assert!(matches!(build_context(&e, &c[..1]), Err(ContextError::NotCovering { .. })));
        assert!(matches!(build_context(&e, &[]), Err(ContextError::Empty { .. })));
    }

    #[test]
    fn distribution_invariants() {
        assert!(LabelDistribution::new([0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).is_ok());
        assert!(matches!(
            LabelDistribution::new([0.5, 0.4, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
            Err(DistributionError::NotNormalized(_))
        ));
        assert!(matches!(
            LabelDistribution::new([1.5, -0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
            Err(DistributionError::OutOfRange { .. })
        ));
        let u = LabelDistribution::from_logits(&[0.0; 9]);
        for p in u.probabilities() {
            assert!((p - 1.0 / 9.0).abs() < 1e-15);
        }
        let mut m = BTreeMap::new();
        for l in CandidateLabel::ALL {
            m.insert(l, if l == CandidateLabel::None { 1.0 } else { 0.0 });
        }
        assert_eq!(LabelDistribution::from_map(&m).unwrap().argmax(), CandidateLabel::None);
        m.remove(&CandidateLabel::None);
        assert!(LabelDistribution::from_map(&m).is_err());
    }

    #[test]
    fn argmax_tie_break() {
        let mut p = [0.05; 9];
        p[MoveLabel::Claim.index()] = 0.6;
        p[0] = 0.0;
        p[8] = 0.0;
        let s: f64 = p.iter().sum();
        p[2] += 1.0 - s;
        let d = LabelDistribution::new(p).unwrap();
        assert_eq!(predict_labels(&[d]), vec![MoveLabel::Claim.into()]);

        let mut tie = [0.0; 9];
        tie[MoveLabel::Claim.index()] = 0.5;
        tie[MoveLabel::Data.index()] = 0.5;
        assert_eq!(LabelDistribution::new(tie).unwrap().argmax(), MoveLabel::Claim.into());
        assert_eq!(LabelDistribution::uniform().argmax(), MoveLabel::Title.into());
    }

    #[test]
    fn oracle_emits_one_hot() {
        let e = essay("A, B.");
        let ctx = build_context(&e, &segment_candidates(e.text(), &SegmentationRules::default())).unwrap();
        let mut o = OracleClassifier::new();
        o.insert("e1", vec![CandidateLabel::None, MoveLabel::Claim.into()]);
        let d = o.classify(&ctx).unwrap();
        assert_eq!(predict_labels(&d), vec![CandidateLabel::None, MoveLabel::Claim.into()]);
        o.insert("e1", vec![CandidateLabel::None]);
        assert_eq!(o.classify(&ctx), Err(ClassifyError::CountMismatch { expected: 2, got: 1 }));
    }

    #[test]
    fn windows_respect_budget() {
        let e = essay("aaaa, bbbb, cccc, dddd, eeee.");
        let ctx = build_context(&e, &segment_candidates(e.text(), &SegmentationRules::default())).unwrap();
        assert_eq!(plan_windows(&ctx, 1000).len(), 1);
        let plans = plan_windows(&ctx, 18);
        let mut decided: Vec<usize> = plans.iter().flat_map(|p| p.decides.clone()).collect();
        decided.sort();
        assert_eq!(decided, vec![0, 1, 2, 3, 4]);
        for p in &plans {
            let chars: usize = ctx.segments[p.range.clone()].iter().map(|s| s.text.chars().count()).sum();
            assert!(chars <= 18 || p.range.len() == 1);
            for &i in &p.decides {
                assert!(p.range.contains(&i));
            }
        }
        // the middle segment sits in a window with a neighbour on each side
        let mid = plans.iter().find(|p| p.decides.contains(&2)).unwrap();
        assert_eq!(mid.range, 1..4);
    }
}
