//! Essay and annotation data model, validation and the train/validation/
//! application split.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::label::MoveLabel;
use crate::text::{char_len, CharIndex};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Human-rated writing quality, consumed as given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "snake_case"))]
pub enum QualityLevel {
    Low,
    Medium,
    High,
}

impl QualityLevel {
    pub const ALL: [QualityLevel; 3] = [QualityLevel::Low, QualityLevel::Medium, QualityLevel::High];

    pub const fn as_str(self) -> &'static str {
        match self {
            QualityLevel::Low => "low",
            QualityLevel::Medium => "medium",
            QualityLevel::High => "high",
        }
    }

    pub fn parse(s: &str) -> Option<QualityLevel> {
        QualityLevel::ALL.into_iter().find(|q| q.as_str() == s)
    }
}

/// Who produced an annotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "snake_case"))]
pub enum Source {
    Human,
    Model,
}

impl Source {
    pub const fn as_str(self) -> &'static str {
        match self {
            Source::Human => "human",
            Source::Model => "model",
        }
    }
}

/// Half-open character range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    /// `None` unless `start < end`.
    pub fn new(start: usize, end: usize) -> Option<Span> {
        (start < end).then_some(Span { start, end })
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    /// Smallest span covering both.
    pub fn union(self, other: Span) -> Span {
        Span { start: self.start.min(other.start), end: self.end.max(other.end) }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EssayError {
    #[error("essay {0}: text is empty")]
    EmptyText(String),
    #[error("essay {0}: wave must be >= 1")]
    ZeroWave(String),
}

/// An essay with its collection metadata.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Essay {
    essay_id: String,
    learner_id: String,
    wave: u32,
    text: String,
    quality_level: Option<QualityLevel>,
    char_len: usize,
}

impl Essay {
    pub fn new(
        essay_id: impl Into<String>,
        learner_id: impl Into<String>,
        wave: u32,
        text: impl Into<String>,
        quality_level: Option<QualityLevel>,
    ) -> Result<Essay, EssayError> {
        let essay_id = essay_id.into();
        let text = text.into();
        if text.is_empty() {
            return Err(EssayError::EmptyText(essay_id));
        }
        if wave == 0 {
            return Err(EssayError::ZeroWave(essay_id));
        }
        let char_len = char_len(&text);
        Ok(Essay { essay_id, learner_id: learner_id.into(), wave, text, quality_level, char_len })
    }

    pub fn essay_id(&self) -> &str {
        &self.essay_id
    }

    pub fn learner_id(&self) -> &str {
        &self.learner_id
    }

    pub fn wave(&self) -> u32 {
        self.wave
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn quality_level(&self) -> Option<QualityLevel> {
        self.quality_level
    }

    /// Length of the text in characters.
    pub fn len(&self) -> usize {
        self.char_len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn with_quality_level(mut self, quality_level: Option<QualityLevel>) -> Essay {
        self.quality_level = quality_level;
        self
    }
}

/// A final move: a span of the essay and its type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct AnnotatedMove {
    pub span: Span,
    pub label: MoveLabel,
}

impl AnnotatedMove {
    pub fn new(start: usize, end: usize, label: MoveLabel) -> AnnotatedMove {
        AnnotatedMove { span: Span { start, end }, label }
    }
}

/// A broken invariant of an annotated essay, with its location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NoMoves,
    EmptySpan { index: usize, span: Span },
    OutOfBounds { index: usize, span: Span, text_len: usize },
    Overlap { first: usize, second: usize },
    Gap { first: usize, second: usize },
    Unsorted { first: usize, second: usize },
    DoesNotStartAtZero { start: usize },
    DoesNotCoverText { end: usize, text_len: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoMoves => f.write_str("no moves"),
            Violation::EmptySpan { index, span } => write!(f, "empty span {span} at move {index}"),
            Violation::OutOfBounds { index, span, text_len } => {
                write!(f, "move {index} span {span} exceeds text length {text_len}")
            }
            Violation::Overlap { first, second } => {
                write!(f, "overlap between move {first} and move {second}")
            }
            Violation::Gap { first, second } => {
                write!(f, "non-contiguous spans between move {first} and move {second}")
            }
            Violation::Unsorted { first, second } => {
                write!(f, "move {second} starts before move {first}")
            }
            Violation::DoesNotStartAtZero { start } => {
                write!(f, "moves do not cover text: first move starts at {start}")
            }
            Violation::DoesNotCoverText { end, text_len } => {
                write!(f, "moves do not cover text: last move ends at {end} of {text_len}")
            }
        }
    }
}

/// Checks that `moves` are sorted, contiguous, non-overlapping and exactly
/// cover a text of `text_len` characters. Returns every violation found.
pub fn validate_moves(moves: &[AnnotatedMove], text_len: usize) -> Vec<Violation> {
    let mut out = Vec::new();
    let Some(first) = moves.first() else {
        out.push(Violation::NoMoves);
        return out;
    };
    for (index, m) in moves.iter().enumerate() {
        if m.span.is_empty() {
            out.push(Violation::EmptySpan { index, span: m.span });
        }
        if m.span.end > text_len {
            out.push(Violation::OutOfBounds { index, span: m.span, text_len });
        }
    }
    for (i, pair) in moves.windows(2).enumerate() {
        let (a, b) = (pair[0].span, pair[1].span);
        if b.start < a.start {
            out.push(Violation::Unsorted { first: i, second: i + 1 });
        } else if b.start < a.end {
            out.push(Violation::Overlap { first: i, second: i + 1 });
        } else if b.start > a.end {
            out.push(Violation::Gap { first: i, second: i + 1 });
        }
    }
    if first.span.start != 0 {
        out.push(Violation::DoesNotStartAtZero { start: first.span.start });
    }
    let last_end = moves[moves.len() - 1].span.end;
    if last_end < text_len {
        out.push(Violation::DoesNotCoverText { end: last_end, text_len });
    }
    out
}

/// Every violated invariant of an essay and its proposed moves; empty when
/// the pair forms a valid [`AnnotatedEssay`].
pub fn validate_annotated(essay: &Essay, moves: &[AnnotatedMove]) -> Vec<Violation> {
    validate_moves(moves, essay.len())
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("essay {essay_id}: {}", join_violations(.violations))]
pub struct InvalidAnnotation {
    pub essay_id: String,
    pub violations: Vec<Violation>,
}

fn join_violations(v: &[Violation]) -> String {
    use core::fmt::Write;
    let mut s = String::new();
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            s.push_str("; ");
        }
        let _ = write!(s, "{x}");
    }
    s
}

/// An essay whose moves partition its text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedEssay {
    essay: Essay,
    moves: Vec<AnnotatedMove>,
    source: Source,
}

impl AnnotatedEssay {
    pub fn new(
        essay: Essay,
        moves: Vec<AnnotatedMove>,
        source: Source,
    ) -> Result<AnnotatedEssay, InvalidAnnotation> {
        let violations = validate_annotated(&essay, &moves);
        if !violations.is_empty() {
            return Err(InvalidAnnotation { essay_id: essay.essay_id, violations });
        }
        Ok(AnnotatedEssay { essay, moves, source })
    }

    pub fn essay(&self) -> &Essay {
        &self.essay
    }

    pub fn moves(&self) -> &[AnnotatedMove] {
        &self.moves
    }

    pub fn source(&self) -> Source {
        self.source
    }

    pub fn into_essay(self) -> Essay {
        self.essay
    }

    pub fn into_parts(self) -> (Essay, Vec<AnnotatedMove>, Source) {
        (self.essay, self.moves, self.source)
    }

    /// Texts of the moves, in order. Their concatenation is the essay text.
    pub fn move_texts(&self) -> Vec<&str> {
        let idx = CharIndex::new(self.essay.text());
        self.moves.iter().map(|m| idx.slice(m.span)).collect()
    }
}

/// How essays are assigned to split sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "kebab-case"))]
pub enum SplitStrategy {
    /// Essays are shuffled individually; a learner may appear in several sets.
    #[default]
    ByEssay,
    /// Whole learners are assigned to one set.
    ByLearner,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SplitRatios {
    pub training: f64,
    pub validation: f64,
    pub application: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios { training: 0.70, validation: 0.15, application: 0.15 }
    }
}

impl SplitRatios {
    pub fn new(training: f64, validation: f64, application: f64) -> SplitRatios {
        SplitRatios { training, validation, application }
    }

    fn as_array(&self) -> [f64; 3] {
        [self.training, self.validation, self.application]
    }

    fn check(&self) -> Result<(), SplitError> {
        let r = self.as_array();
        if r.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(SplitError::NonPositiveRatio);
        }
        let sum: f64 = r.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(SplitError::RatioSum(sum));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SplitError {
    #[error("ratios must be positive")]
    NonPositiveRatio,
    #[error("ratios must sum to 1 (got {0})")]
    RatioSum(f64),
    #[error("need at least 3 {unit} to populate all sets, got {got}")]
    TooFew { unit: &'static str, got: usize },
    #[error("duplicate essay_id {0}")]
    DuplicateId(String),
}

/// Training, validation and application sets. The application set carries
/// essays with their annotations stripped.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSplit {
    pub training: Vec<AnnotatedEssay>,
    pub validation: Vec<AnnotatedEssay>,
    pub application: Vec<Essay>,
}

/// Set sizes for `n` items: floor each share, then hand the remainder out by
/// largest fractional part (earlier set wins ties). Every set gets at least
/// one item when `n >= 3`.
pub fn split_sizes(n: usize, ratios: &SplitRatios) -> [usize; 3] {
    let r = ratios.as_array();
    let exact: [f64; 3] = core::array::from_fn(|i| r[i] * n as f64);
    let mut sizes: [usize; 3] = core::array::from_fn(|i| libm::floor(exact[i]) as usize);
    let assigned: usize = sizes.iter().sum();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let fa = exact[a] - sizes[a] as f64;
        let fb = exact[b] - sizes[b] as f64;
        fb.partial_cmp(&fa).unwrap_or(core::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        sizes[i] += 1;
    }
    if n >= 3 {
        for i in 0..3 {
            if sizes[i] == 0 {
                let donor = (0..3).max_by_key(|&j| (sizes[j], core::cmp::Reverse(j))).unwrap();
                sizes[donor] -= 1;
                sizes[i] = 1;
            }
        }
    }
    sizes
}

/// Deterministic shuffled split of `essays` into training, validation and
/// application sets. Within each set, essays keep their input order.
pub fn split_corpus(
    essays: Vec<AnnotatedEssay>,
    ratios: SplitRatios,
    seed: u64,
    strategy: SplitStrategy,
) -> Result<CorpusSplit, SplitError> {
    ratios.check()?;
    let mut seen = BTreeMap::new();
    for e in &essays {
        if seen.insert(e.essay().essay_id(), ()).is_some() {
            return Err(SplitError::DuplicateId(e.essay().essay_id().into()));
        }
    }
    drop(seen);

    let n = essays.len();
    if n < 3 {
        return Err(SplitError::TooFew { unit: "essays", got: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let targets = split_sizes(n, &ratios);

    // assignment[i] in 0..3 names the set of essay i.
    let mut assignment = alloc::vec![0u8; n];
    match strategy {
        SplitStrategy::ByEssay => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let mut pos = 0;
            for (set, &size) in targets.iter().enumerate() {
                for &i in &order[pos..pos + size] {
                    assignment[i] = set as u8;
                }
                pos += size;
            }
        }
        SplitStrategy::ByLearner => {
            let mut groups: Vec<(&str, Vec<usize>)> = Vec::new();
            let mut by_id: BTreeMap<&str, usize> = BTreeMap::new();
            for (i, e) in essays.iter().enumerate() {
                let id = e.essay().learner_id();
                let g = *by_id.entry(id).or_insert_with(|| {
                    groups.push((id, Vec::new()));
                    groups.len() - 1
                });
                groups[g].1.push(i);
            }
            if groups.len() < 3 {
                return Err(SplitError::TooFew { unit: "learners", got: groups.len() });
            }
            groups.shuffle(&mut rng);
            let mut filled = [0usize; 3];
            let mut populated = [false; 3];
            let remaining_groups = groups.len();
            for (k, (_, members)) in groups.iter().enumerate() {
                // Reserve one learner for each still-empty set at the tail.
                let empty: Vec<usize> = (0..3).filter(|&s| !populated[s]).collect();
                let set = if remaining_groups - k <= empty.len() {
                    empty[0]
                } else {
                    (0..3)
                        .max_by(|&a, &b| {
                            let da = targets[a] as f64 - filled[a] as f64;
                            let db = targets[b] as f64 - filled[b] as f64;
                            da.partial_cmp(&db).unwrap().then(b.cmp(&a))
                        })
                        .unwrap()
                };
                for &i in members {
                    assignment[i] = set as u8;
                }
                filled[set] += members.len();
                populated[set] = true;
            }
        }
    }

    let mut split = CorpusSplit { training: Vec::new(), validation: Vec::new(), application: Vec::new() };
    for (essay, set) in essays.into_iter().zip(assignment) {
        match set {
            0 => split.training.push(essay),
            1 => split.validation.push(essay),
            _ => split.application.push(essay.into_essay()),
        }
    }
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::string::ToString;
    use alloc::vec;

    fn essay(id: &str, text: &str) -> Essay {
        Essay::new(id, "L1", 1, text, None).unwrap()
    }

    fn annotated(id: &str, learner: &str) -> AnnotatedEssay {
        let e = Essay::new(id, learner, 1, "A claim.", None).unwrap();
        AnnotatedEssay::new(e, vec![AnnotatedMove::new(0, 8, MoveLabel::Claim)], Source::Human).unwrap()
    }

    #[test]
    fn essay_invariants() {
        assert!(matches!(Essay::new("e", "l", 1, "", None), Err(EssayError::EmptyText(_))));
        assert!(matches!(Essay::new("e", "l", 0, "x", None), Err(EssayError::ZeroWave(_))));
        assert_eq!(Essay::new("e", "l", 1, "héllo", None).unwrap().len(), 5);
    }

    #[test]
    fn well_formed_record_has_no_violations() {
        let e = essay("e1", "T.\nA. B.");
        let moves = vec![
            AnnotatedMove::new(0, 3, MoveLabel::Title),
            AnnotatedMove::new(3, 6, MoveLabel::Claim),
            AnnotatedMove::new(6, 8, MoveLabel::Data),
        ];
        assert!(validate_annotated(&e, &moves).is_empty());
        let a = AnnotatedEssay::new(e, moves, Source::Human).unwrap();
        assert_eq!(a.move_texts().concat(), "T.\nA. B.");
    }

    #[test]
    fn overlap_is_reported() {
        let e = essay("e1", "abcdefgh");
        let moves = vec![AnnotatedMove::new(0, 5, MoveLabel::Claim), AnnotatedMove::new(3, 8, MoveLabel::Data)];
        let v = validate_annotated(&e, &moves);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].to_string(), "overlap between move 0 and move 1");
    }

    #[test]
    fn short_cover_is_reported() {
        let e = essay("e1", "abcdefgh");
        let moves = vec![AnnotatedMove::new(0, 5, MoveLabel::Claim)];
        let v = validate_annotated(&e, &moves);
        assert_eq!(v.len(), 1);
        assert!(v[0].to_string().starts_with("moves do not cover text"));
    }

    #[test]
    fn gap_is_reported_as_non_contiguous() {
        let e = essay("e1", "abcdef");
        let moves = vec![AnnotatedMove::new(0, 2, MoveLabel::Claim), AnnotatedMove::new(4, 6, MoveLabel::Data)];
        let err = AnnotatedEssay::new(e, moves, Source::Human).unwrap_err();
        assert_eq!(err.violations, vec![Violation::Gap { first: 0, second: 1 }]);
        assert!(format!("{err}").contains("non-contiguous spans"));
    }

    #[test]
    fn empty_and_out_of_range_spans() {
        let e = essay("e1", "abc");
        let v = validate_annotated(&e, &[AnnotatedMove::new(0, 0, MoveLabel::Claim), AnnotatedMove::new(0, 4, MoveLabel::Data)]);
        assert!(v.contains(&Violation::EmptySpan { index: 0, span: Span { start: 0, end: 0 } }));
        assert!(v.iter().any(|x| matches!(x, Violation::OutOfBounds { index: 1, .. })));
        assert_eq!(validate_annotated(&e, &[]), vec![Violation::NoMoves]);
    }

    #[test]
    fn split_of_1643_texts() {
        // 1643 texts at 70/15/15: floors 1150/246/246, the one leftover goes
        // to validation (fraction .45 ties application, earlier set wins).
        assert_eq!(split_sizes(1643, &SplitRatios::default()), [1150, 247, 246]);
        assert_eq!(split_sizes(10, &SplitRatios::new(0.8, 0.1, 0.1)), [8, 1, 1]);
        assert_eq!(split_sizes(3, &SplitRatios::new(0.98, 0.01, 0.01)), [1, 1, 1]);
    }

    #[test]
    fn split_is_deterministic_and_disjoint() {
        let essays: Vec<_> = (0..10).map(|i| annotated(&format!("e{i}"), &format!("l{}", i % 4))).collect();
        let a = split_corpus(essays.clone(), SplitRatios::new(0.8, 0.1, 0.1), 7, SplitStrategy::ByEssay).unwrap();
        let b = split_corpus(essays.clone(), SplitRatios::new(0.8, 0.1, 0.1), 7, SplitStrategy::ByEssay).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.training.len(), a.validation.len(), a.application.len()), (8, 1, 1));

        let mut ids: Vec<String> = a.training.iter().chain(&a.validation).map(|e| e.essay().essay_id().into()).collect();
        ids.extend(a.application.iter().map(|e| e.essay_id().to_string()));
        ids.sort();
        let mut expect: Vec<String> = (0..10).map(|i| format!("e{i}")).collect();
        expect.sort();
        assert_eq!(ids, expect);
    }

    #[test]
    fn split_rejects_bad_input() {
        let essays: Vec<_> = (0..10).map(|i| annotated(&format!("e{i}"), "l")).collect();
        let err = split_corpus(essays.clone(), SplitRatios::new(0.5, 0.5, 0.5), 1, SplitStrategy::ByEssay).unwrap_err();
        assert!(err.to_string().contains("ratios must sum to 1"));
        let err = split_corpus(essays[..2].to_vec(), SplitRatios::default(), 1, SplitStrategy::ByEssay).unwrap_err();
        assert!(matches!(err, SplitError::TooFew { got: 2, .. }));
        let err = split_corpus(essays, SplitRatios::default(), 1, SplitStrategy::ByLearner).unwrap_err();
        assert!(matches!(err, SplitError::TooFew { unit: "learners", got: 1 }));
        let dup = vec![annotated("x", "a"), annotated("x", "b"), annotated("y", "c")];
        assert!(matches!(
            split_corpus(dup, SplitRatios::default(), 1, SplitStrategy::ByEssay),
            Err(SplitError::DuplicateId(_))
        ));
    }

    #[test]
    fn by_learner_keeps_learners_together() {
        let essays: Vec<_> = (0..60).map(|i| annotated(&format!("e{i}"), &format!("l{}", i % 12))).collect();
        let s = split_corpus(essays, SplitRatios::default(), 3, SplitStrategy::ByLearner).unwrap();
        let learners = |v: &[&Essay]| -> alloc::collections::BTreeSet<String> {
            v.iter().map(|e| e.learner_id().to_string()).collect()
        };
        let tr = learners(&s.training.iter().map(|e| e.essay()).collect::<Vec<_>>());
        let va = learners(&s.validation.iter().map(|e| e.essay()).collect::<Vec<_>>());
        let ap = learners(&s.application.iter().collect::<Vec<_>>());
        assert!(tr.is_disjoint(&va) && tr.is_disjoint(&ap) && va.is_disjoint(&ap));
        assert!(!va.is_empty() && !ap.is_empty());
        assert_eq!(s.training.len() + s.validation.len() + s.application.len(), 60);
    }
}
