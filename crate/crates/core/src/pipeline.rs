//! The three steps chained for a single essay.

use alloc::vec::Vec;

use crate::corpus::{AnnotatedEssay, AnnotatedMove, Essay, InvalidAnnotation, Source};
use crate::label::CandidateLabel;
use crate::labeler::{
    build_context, classify_windowed, predict_labels, Classifier, ClassifyError, ContextError, LabelDistribution,
    ModifiedEssay, TrainingExample,
};
use crate::segmenter::{align_gold, segment_candidates, AlignError, AlignOptions, CandidateMove, SegmentationRules};
use crate::verifier::{merge_invalid, MergeTrace};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error("essay {essay_id}: {source}")]
    Context { essay_id: alloc::string::String, source: ContextError },
    #[error("essay {essay_id}: {source}")]
    Align { essay_id: alloc::string::String, source: AlignError },
    #[error("essay {essay_id}: {source}")]
    Classify { essay_id: alloc::string::String, source: ClassifyError },
    #[error(transparent)]
    Invalid(#[from] InvalidAnnotation),
}

/// Candidates with their aligned gold labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedEssay {
    pub candidates: Vec<CandidateMove>,
    pub example: TrainingExample,
}

/// Segments a gold essay and labels its candidates by shared end offset.
pub fn prepare_example(
    essay: &AnnotatedEssay,
    rules: &SegmentationRules,
    options: AlignOptions,
) -> Result<PreparedEssay, PipelineError> {
    let id = || essay.essay().essay_id().into();
    let candidates = segment_candidates(essay.essay().text(), rules);
    let labels = align_gold(&candidates, essay.moves(), options)
        .map_err(|source| PipelineError::Align { essay_id: id(), source })?;
    let context =
        build_context(essay.essay(), &candidates).map_err(|source| PipelineError::Context { essay_id: id(), source })?;
    Ok(PreparedEssay { candidates, example: TrainingExample { context, labels } })
}

/// Everything produced while annotating one essay.
#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub candidates: Vec<CandidateMove>,
    pub distributions: Vec<LabelDistribution>,
    pub labels: Vec<CandidateLabel>,
    pub moves: Vec<AnnotatedMove>,
    pub trace: MergeTrace,
}

impl Annotation {
    pub fn into_essay(self, essay: Essay) -> Result<AnnotatedEssay, InvalidAnnotation> {
        AnnotatedEssay::new(essay, self.moves, Source::Model)
    }
}

/// Segment, classify (windowed when `char_budget` is set) and merge.
pub fn annotate<C: Classifier + ?Sized>(
    essay: &Essay,
    rules: &SegmentationRules,
    classifier: &C,
    char_budget: Option<usize>,
) -> Result<Annotation, PipelineError> {
    let id = || essay.essay_id().into();
    let candidates = segment_candidates(essay.text(), rules);
    let context: ModifiedEssay =
        build_context(essay, &candidates).map_err(|source| PipelineError::Context { essay_id: id(), source })?;
    let distributions = match char_budget {
        Some(budget) => classify_windowed(classifier, &context, budget),
        None => classifier.classify(&context).and_then(|d| crate::labeler::check_arity(&context, &d).map(|_| d)),
    }
    .map_err(|source| PipelineError::Classify { essay_id: id(), source })?;
    let labels = predict_labels(&distributions);
    let (moves, trace) = merge_invalid(&candidates, &labels).expect("one label per candidate");
    Ok(Annotation { candidates, distributions, labels, moves, trace })
}
