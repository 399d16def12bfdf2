//! Rule-based candidate segmentation and gold-label alignment.
//!
//! Candidates are cut after runs of terminator punctuation, so they are at
//! least as fine as any true move boundary that falls on punctuation. The
//! whitespace between two candidates belongs to the left one, which makes the
//! candidates an exact partition of the text.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::{AnnotatedMove, Span};
use crate::label::CandidateLabel;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// A punctuation-delimited fragment of an essay. `index` is its 0-based
/// position among the essay's candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CandidateMove {
    pub span: Span,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default))]
pub struct SegmentationRules {
    /// Characters that close a candidate.
    pub terminators: Vec<char>,
    /// Quotes and brackets that stay attached to a preceding terminator.
    pub closers: Vec<char>,
    /// Cut after the first newline so a title line stands alone.
    pub title_rule: bool,
    /// Whole words (case-insensitive) that start a new candidate when they
    /// follow whitespace, e.g. `and`.
    pub merge_connectives: Vec<String>,
    /// Keep periods in numbers (`3.14`) and single-letter initialisms
    /// (`U.S.`) from terminating.
    pub protect_abbreviations: bool,
}

impl Default for SegmentationRules {
    fn default() -> Self {
        SegmentationRules {
            terminators: vec!['.', '!', '?', ';', ':', ','],
            closers: vec!['"', '\'', '\u{201d}', '\u{2019}', ')', ']', '}', '\u{bb}'],
            title_rule: true,
            merge_connectives: Vec::new(),
            protect_abbreviations: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RulesError {
    #[error("terminator set is empty")]
    NoTerminators,
    #[error("character {0:?} cannot be a terminator")]
    WhitespaceTerminator(char),
    #[error("empty connective")]
    EmptyConnective,
}

impl SegmentationRules {
    pub fn validate(&self) -> Result<(), RulesError> {
        if self.terminators.is_empty() {
            return Err(RulesError::NoTerminators);
        }
        if let Some(&c) = self.terminators.iter().find(|c| c.is_whitespace()) {
            return Err(RulesError::WhitespaceTerminator(c));
        }
        if self.merge_connectives.iter().any(|w| w.trim().is_empty()) {
            return Err(RulesError::EmptyConnective);
        }
        Ok(())
    }
}

struct Scanner<'r> {
    chars: Vec<char>,
    rules: &'r SegmentationRules,
    connectives: Vec<Vec<char>>,
}

impl Scanner<'_> {
    fn is_terminator_at(&self, i: usize) -> bool {
        let c = &self.chars;
        if !self.rules.terminators.contains(&c[i]) {
            return false;
        }
        if !self.rules.protect_abbreviations {
            return true;
        }
        let prev = i.checked_sub(1).map(|p| c[p]);
        let next = c.get(i + 1).copied();
        // 3.14, 1,000, 10:30
        if matches!(c[i], '.' | ',' | ':')
            && prev.is_some_and(|p| p.is_ascii_digit())
            && next.is_some_and(|n| n.is_ascii_digit())
        {
            return false;
        }
        if c[i] == '.' {
            let single_letter = |at: usize| {
                c[at].is_alphabetic() && (at == 0 || !c[at - 1].is_alphanumeric())
            };
            if let Some(p) = i.checked_sub(1) {
                // the first period of U.S / e.g
                if single_letter(p) && next.is_some_and(|n| n.is_alphabetic()) {
                    return false;
                }
                // the closing period of U.S.
                if p >= 2 && c[p].is_alphabetic() && c[p - 1] == '.' && single_letter(p - 2) {
                    return false;
                }
            }
        }
        true
    }

    fn connective_at(&self, i: usize) -> bool {
        let c = &self.chars;
        if i == 0 || !c[i - 1].is_whitespace() {
            return false;
        }
        self.connectives.iter().any(|w| {
            let end = i + w.len();
            end <= c.len()
                && c[i..end].iter().zip(w).all(|(a, b)| a.to_lowercase().eq(b.to_lowercase()))
                && c.get(end).is_none_or(|n| !n.is_alphanumeric())
        })
    }
}

/// Splits `text` into candidate moves that partition it.
///
/// A candidate ends after a terminator run (the terminators plus any trailing
/// closers and whitespace), after the first line when `title_rule` is set,
/// before a configured connective, or at the end of the text. Fragments that
/// are only whitespace are folded into the preceding candidate.
pub fn segment_candidates(text: &str, rules: &SegmentationRules) -> Vec<CandidateMove> {
    let scanner = Scanner {
        chars: text.chars().collect(),
        rules,
        connectives: rules.merge_connectives.iter().map(|w| w.trim().chars().collect()).collect(),
    };
    let c = &scanner.chars;
    let n = c.len();
    let first_newline = if rules.title_rule { c.iter().position(|&x| x == '\n') } else { None };

    let absorb_tail = |mut j: usize| {
        while j < n && rules.closers.contains(&c[j]) {
            j += 1;
        }
        while j < n && c[j].is_whitespace() {
            j += 1;
        }
        j
    };

    let mut cuts: Vec<usize> = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < n {
        if scanner.is_terminator_at(i) {
            let mut j = i + 1;
            while j < n && rules.terminators.contains(&c[j]) {
                j += 1;
            }
            let j = absorb_tail(j);
            cuts.push(j);
            start = j;
            i = j;
            continue;
        }
        if Some(i) == first_newline {
            let j = absorb_tail(i + 1);
            cuts.push(j);
            start = j;
            i = j;
            continue;
        }
        if i > start && scanner.connective_at(i) && c[start..i].iter().any(|x| !x.is_whitespace()) {
            cuts.push(i);
            start = i;
        }
        i += 1;
    }
    if cuts.last() != Some(&n) {
        cuts.push(n);
    }

    // Fold whitespace-only pieces leftward (rightward for a leading one).
    let mut ends: Vec<usize> = Vec::with_capacity(cuts.len());
    let mut prev = 0;
    for &end in &cuts {
        let blank = c[prev..end].iter().all(|x| x.is_whitespace());
        match ends.last_mut() {
            Some(last) if blank => *last = end,
            _ if blank && end < n => {} // leading blank piece joins the next one
            _ => ends.push(end),
        }
        prev = end;
    }
    if ends.is_empty() && n > 0 {
        ends.push(n);
    }

    let mut start = 0;
    ends.into_iter()
        .enumerate()
        .map(|(index, end)| {
            let span = Span { start, end };
            start = end;
            CandidateMove { span, index }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AlignOptions {
    /// Move a gold boundary that falls inside a candidate to that
    /// candidate's end instead of failing.
    pub snap: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AlignError {
    #[error("gold move {move_index} ends at offset {offset}, which is not a candidate boundary")]
    BoundaryMismatch { move_index: usize, offset: usize },
    #[error("gold move {move_index} ends at offset {offset}, past the last candidate")]
    OutOfRange { move_index: usize, offset: usize },
}

/// Labels each candidate from gold moves by shared ending position: the
/// candidate whose end equals a gold move's end takes that move's label,
/// every other candidate gets `none`.
pub fn align_gold(
    candidates: &[CandidateMove],
    gold: &[AnnotatedMove],
    options: AlignOptions,
) -> Result<Vec<CandidateLabel>, AlignError> {
    let mut labels = vec![CandidateLabel::None; candidates.len()];
    for (move_index, g) in gold.iter().enumerate() {
        let offset = g.span.end;
        let pos = candidates.partition_point(|c| c.span.end < offset);
        match candidates.get(pos) {
            Some(c) if c.span.end == offset => labels[pos] = g.label.into(),
            Some(_) if options.snap => labels[pos] = g.label.into(),
            Some(_) => return Err(AlignError::BoundaryMismatch { move_index, offset }),
            None => return Err(AlignError::OutOfRange { move_index, offset }),
        }
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::MoveLabel;
    use crate::text::CharIndex;

    fn texts<'a>(text: &'a str, rules: &SegmentationRules) -> Vec<&'a str> {
        let idx = CharIndex::new(text);
        segment_candidates(text, rules).iter().map(|c| idx.slice(c.span)).collect()
    }

    #[test]
    fn title_then_clauses() {
        let r = SegmentationRules::default();
        assert_eq!(
            texts("My Title\nCloning is wrong, because it hurts.", &r),
            vec!["My Title\n", "Cloning is wrong, ", "because it hurts."]
        );
    }

    #[test]
    fn single_sentence() {
        let r = SegmentationRules::default();
        assert_eq!(texts("Hello.", &r), vec!["Hello."]);
        assert_eq!(texts("no punctuation at all", &r), vec!["no punctuation at all"]);
    }

    #[test]
    fn comma_list() {
        assert_eq!(texts("A, B, C.", &SegmentationRules::default()), vec!["A, ", "B, ", "C."]);
    }

    #[test]
    fn terminator_runs_and_closers() {
        let r = SegmentationRules::default();
        assert_eq!(texts("Really?! \"Yes.\" (Sure.) ok", &r), vec!["Really?! ", "\"Yes.\" ", "(Sure.) ", "ok"]);
        assert_eq!(texts("Wait... what", &r), vec!["Wait... ", "what"]);
    }

    #[test]
    fn numbers_and_initialisms_do_not_split() {
        let r = SegmentationRules::default();
        assert_eq!(texts("Pi is 3.14 and 1,000 people. Next", &r), vec!["Pi is 3.14 and 1,000 people. ", "Next"]);
        assert_eq!(texts("The U.S. economy grew.", &r), vec!["The U.S. economy grew."]);
        assert_eq!(texts("Fruit, e.g. apples.", &r), vec!["Fruit, ", "e.g. apples."]);
        let plain = SegmentationRules { protect_abbreviations: false, ..SegmentationRules::default() };
        assert_eq!(texts("3.14", &plain), vec!["3.", "14"]);
    }

    #[test]
    fn whitespace_attaches_left() {
        let r = SegmentationRules::default();
        assert_eq!(texts("One.   \n\n", &r), vec!["One.   \n\n"]);
        assert_eq!(texts("One.  Two.\n", &r), vec!["One.  ", "Two.\n"]);
        assert_eq!(texts("   ", &r), vec!["   "]);
    }

    #[test]
    fn title_rule_only_applies_to_first_line() {
        let r = SegmentationRules::default();
        assert_eq!(texts("Title\nbody\nmore body.", &r), vec!["Title\n", "body\nmore body."]);
        let off = SegmentationRules { title_rule: false, ..SegmentationRules::default() };
        assert_eq!(texts("Title\nbody.", &off), vec!["Title\nbody."]);
    }

    #[test]
    fn connectives_split_before_the_word() {
        let r = SegmentationRules { merge_connectives: vec!["and".into()], ..SegmentationRules::default() };
        assert_eq!(texts("I like cats and dogs hate me.", &r), vec!["I like cats ", "and dogs hate me."]);
        assert_eq!(texts("Sand and AND.", &r), vec!["Sand ", "and ", "AND."]);
        assert_eq!(texts("and so on.", &r), vec!["and so on."]);
    }

    #[test]
    fn rules_validation() {
        assert!(SegmentationRules::default().validate().is_ok());
        let empty = SegmentationRules { terminators: vec![], ..SegmentationRules::default() };
        assert_eq!(empty.validate(), Err(RulesError::NoTerminators));
        let ws = SegmentationRules { terminators: vec![' '], ..SegmentationRules::default() };
        assert!(ws.validate().is_err());
    }

    fn cands(ends: &[usize]) -> Vec<CandidateMove> {
        let mut start = 0;
        ends.iter()
            .enumerate()
            .map(|(index, &end)| {
                let c = CandidateMove { span: Span { start, end }, index };
                start = end;
                c
            })
            .collect()
    }

    #[test]
    fn align_by_shared_end() {
        let c = cands(&[10, 20, 30]);
        let gold = [AnnotatedMove::new(0, 20, MoveLabel::Claim), AnnotatedMove::new(20, 30, MoveLabel::Data)];
        let labels = align_gold(&c, &gold, AlignOptions::default()).unwrap();
        assert_eq!(labels, vec![CandidateLabel::None, MoveLabel::Claim.into(), MoveLabel::Data.into()]);
    }

    #[test]
    fn align_identity() {
        let c = cands(&[5, 9]);
        let gold = [AnnotatedMove::new(0, 5, MoveLabel::Title), AnnotatedMove::new(5, 9, MoveLabel::Claim)];
        let labels = align_gold(&c, &gold, AlignOptions::default()).unwrap();
        assert_eq!(labels, vec![MoveLabel::Title.into(), MoveLabel::Claim.into()]);
    }

    #[test]
    fn align_mismatch_and_snap() {
        let c = cands(&[10, 20]);
        let gold = [AnnotatedMove::new(0, 15, MoveLabel::Claim), AnnotatedMove::new(15, 20, MoveLabel::Data)];
        let err = align_gold(&c, &gold[..1], AlignOptions::default()).unwrap_err();
        assert_eq!(err, AlignError::BoundaryMismatch { move_index: 0, offset: 15 });
        let snapped = align_gold(&c, &gold[..1], AlignOptions { snap: true }).unwrap();
        assert_eq!(snapped, vec![CandidateLabel::None, MoveLabel::Claim.into()]);
        let far = [AnnotatedMove::new(0, 25, MoveLabel::Claim)];
        assert!(matches!(align_gold(&c, &far, AlignOptions { snap: true }), Err(AlignError::OutOfRange { .. })));
    }
}
