//! Argumentative-move annotation for learner essays.
//!
//! The pipeline runs in three steps over a single essay:
//!
//! 1. [`segmenter::segment_candidates`] cuts the text into punctuation-delimited
//!    candidate moves at the finest granularity.
//! 2. A [`labeler::Classifier`] assigns each candidate a [`CandidateLabel`]: one of
//!    the eight move types, or `none` when the candidate is only part of a move.
//! 3. [`verifier::merge_invalid`] folds every `none` candidate into the next valid
//!    candidate on its right, yielding the final annotated moves.
//!
//! [`evaluation`] scores predicted moves against gold annotations, [`stats`]
//! carries the downstream analyses (move ratios, ANOVA, MANOVA, random-intercept
//! regression), and [`synthgen`] produces gold-annotated synthetic corpora.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the remote
//! classifier client and the command line live in the `argmove` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod corpus;
pub mod evaluation;
pub mod label;
pub mod labeler;
pub mod pipeline;
pub mod segmenter;
pub mod stats;
pub mod synthgen;
pub mod text;
pub mod verifier;

pub use corpus::{AnnotatedEssay, AnnotatedMove, CorpusSplit, Essay, QualityLevel, Source, Span};
pub use label::{CandidateLabel, MoveLabel};
pub use segmenter::{CandidateMove, SegmentationRules};
