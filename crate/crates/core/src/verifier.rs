//! MergeInvalid: turns labeled candidates into final moves.
//!
//! Each maximal run of `none` candidates is absorbed by the first labeled
//! candidate to its right, and the merged span takes that candidate's label.

use alloc::vec::Vec;

use crate::corpus::{AnnotatedMove, Span};
use crate::label::{CandidateLabel, MoveLabel};
use crate::segmenter::CandidateMove;

/// Which candidates each final move absorbed.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MergeTrace {
    /// Candidate positions (0-based) per final move, in order.
    pub groups: Vec<Vec<usize>>,
    /// Position of the candidate whose label each final move carries.
    pub labeled_by: Vec<usize>,
    /// A trailing run of `none` had no right neighbour and was merged into
    /// the last labeled move.
    pub trailing_merged_left: bool,
    /// Every candidate was `none`; the single output move is `non_argument`.
    pub all_none: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{labels} labels for {candidates} candidates")]
pub struct LengthMismatch {
    pub candidates: usize,
    pub labels: usize,
}

/// Merges `none` candidates rightward into the next labeled candidate.
///
/// A trailing `none` run merges leftward into the last labeled move. If every
/// label is `none` the whole essay becomes one `non_argument` move.
pub fn merge_invalid(
    candidates: &[CandidateMove],
    labels: &[CandidateLabel],
) -> Result<(Vec<AnnotatedMove>, MergeTrace), LengthMismatch> {
    if candidates.len() != labels.len() {
        return Err(LengthMismatch { candidates: candidates.len(), labels: labels.len() });
    }
    let mut trace = MergeTrace::default();
    let mut out_labels: Vec<MoveLabel> = Vec::new();
    let mut pending: Vec<usize> = Vec::new();
    for (i, label) in labels.iter().enumerate() {
        pending.push(i);
        if let CandidateLabel::Move(m) = label {
            trace.groups.push(core::mem::take(&mut pending));
            trace.labeled_by.push(i);
            out_labels.push(*m);
        }
    }
    if !pending.is_empty() {
        match trace.groups.last_mut() {
            Some(last) => {
                last.extend(pending);
                trace.trailing_merged_left = true;
            }
            None => {
                trace.labeled_by.push(pending[pending.len() - 1]);
                trace.groups.push(pending);
                out_labels.push(MoveLabel::NonArgument);
                trace.all_none = true;
            }
        }
    }
    let moves = trace
        .groups
        .iter()
        .zip(out_labels)
        .filter(|(g, _)| !g.is_empty())
        .map(|(g, label)| {
            let span = g.iter().map(|&i| candidates[i].span).reduce(Span::union).unwrap();
            AnnotatedMove { span, label }
        })
        .collect();
    Ok((moves, trace))
}
