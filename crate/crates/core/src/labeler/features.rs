use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::label::CandidateLabel;

use super::ModifiedEssay;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Discourse markers checked at the start of a candidate and at the start of
/// the sentence containing it.
pub const DEFAULT_LEXICON: &[&str] = &[
    "i think",
    "i believe",
    "in my opinion",
    "for example",
    "for instance",
    "according to",
    "some may say",
    "some people argue",
    "others believe",
    "they point out",
    "their evidence shows",
    "however",
    "nevertheless",
    "in fact",
    "actually",
    "by the way",
    "to be honest",
    "anyway",
    "because",
    "but",
    "in conclusion",
    "first",
];

const SENTENCE_FINAL: [char; 3] = ['.', '!', '?'];
const SENTENCE_MEDIAL: [char; 3] = [',', ';', ':'];

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default))]
pub struct FeatureConfig {
    /// Lower-case marker phrases.
    pub lexicon: Vec<String>,
    /// Character count is divided by this before use.
    pub char_scale: f64,
    /// Token count is divided by this before use.
    pub token_scale: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            lexicon: DEFAULT_LEXICON.iter().map(|s| s.to_string()).collect(),
            char_scale: 100.0,
            token_scale: 20.0,
        }
    }
}

// Layout of the dense vector.
const POSITION: usize = 0;
const IS_FIRST: usize = 1;
const IS_LAST: usize = 2;
const CHARS: usize = 3;
const TOKENS: usize = 4;
const TITLE_LINE: usize = 5;
const ENDS_FINAL: usize = 6;
const ENDS_MEDIAL: usize = 7;
const ENDS_OTHER: usize = 8;
const SENTENCE_START: usize = 9;
const FIXED: usize = 10;
/// Previous-label slots: the nine labels, plus one for "no previous candidate".
const PREV_SLOTS: usize = CandidateLabel::COUNT + 1;

/// Turns candidates into dense feature vectors.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    config: FeatureConfig,
    lexicon: Vec<String>,
}

/// Per-candidate features that do not depend on the previous label.
#[derive(Debug, Clone)]
pub(crate) struct StaticFeatures {
    pub values: Vec<f64>,
}

impl FeatureExtractor {
    pub fn new(config: FeatureConfig) -> Self {
        let lexicon = config.lexicon.iter().map(|s| s.trim().to_lowercase()).collect();
        FeatureExtractor { config, lexicon }
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        FIXED + 2 * self.lexicon.len() + PREV_SLOTS
    }

    fn prev_offset(&self) -> usize {
        FIXED + 2 * self.lexicon.len()
    }

    fn cue_hits(&self, text: &str, out: &mut [f64]) {
        let lowered = text.trim_start().to_lowercase();
        for (slot, phrase) in out.iter_mut().zip(&self.lexicon) {
            let hit = lowered.strip_prefix(phrase.as_str()).is_some_and(|rest| {
                rest.chars().next().is_none_or(|c| !c.is_alphanumeric())
            });
            *slot = if hit { 1.0 } else { 0.0 };
        }
    }

    /// Features of every segment, with the previous-label block left zero.
    pub(crate) fn static_features(&self, context: &ModifiedEssay) -> Vec<StaticFeatures> {
        let n = context.len();
        let k = self.lexicon.len();
        let first_line_end = context.segments.iter().position(|s| s.text.contains('\n'));
        let mut sentence_start = 0usize;
        let mut out = Vec::with_capacity(n);
        for (i, seg) in context.segments.iter().enumerate() {
            let mut v = alloc::vec![0.0; self.dim()];
            v[POSITION] = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
            v[IS_FIRST] = (i == 0) as u8 as f64;
            v[IS_LAST] = (i + 1 == n) as u8 as f64;
            v[CHARS] = seg.text.chars().count() as f64 / self.config.char_scale;
            v[TOKENS] = seg.text.split_whitespace().count() as f64 / self.config.token_scale;
            v[TITLE_LINE] = first_line_end.is_some_and(|e| i <= e) as u8 as f64;
            match last_mark(&seg.text) {
                Some(c) if SENTENCE_FINAL.contains(&c) => v[ENDS_FINAL] = 1.0,
                Some(c) if SENTENCE_MEDIAL.contains(&c) => v[ENDS_MEDIAL] = 1.0,
                _ => v[ENDS_OTHER] = 1.0,
            }
            if i > 0 && starts_sentence(&context.segments[i - 1].text) {
                sentence_start = i;
            }
            v[SENTENCE_START] = (sentence_start == i) as u8 as f64;
            self.cue_hits(&seg.text, &mut v[FIXED..FIXED + k]);
            self.cue_hits(&context.segments[sentence_start].text, &mut v[FIXED + k..FIXED + 2 * k]);
            out.push(StaticFeatures { values: v });
        }
        out
    }

    /// Writes the previous-label one-hot into `values`.
    pub(crate) fn set_previous(&self, values: &mut [f64], previous: Option<CandidateLabel>) {
        let off = self.prev_offset();
        values[off..off + PREV_SLOTS].fill(0.0);
        let slot = previous.map_or(CandidateLabel::COUNT, CandidateLabel::index);
        values[off + slot] = 1.0;
    }

    /// Full feature vectors, using `previous` labels for the one-hot block
    /// (gold labels during training).
    pub fn features(&self, context: &ModifiedEssay, previous: &[CandidateLabel]) -> Vec<Vec<f64>> {
        self.static_features(context)
            .into_iter()
            .enumerate()
            .map(|(i, s)| {
                let mut v = s.values;
                let prev = if i == 0 { None } else { previous.get(i - 1).copied() };
                self.set_previous(&mut v, prev);
                v
            })
            .collect()
    }
}

/// The last character that is neither whitespace nor a closing quote or
/// bracket.
fn last_mark(text: &str) -> Option<char> {
    text.chars().rev().find(|c| !c.is_whitespace() && !matches!(c, '"' | '\'' | ')' | ']' | '}' | '\u{201d}' | '\u{2019}' | '\u{bb}'))
}

/// Whether the segment after `prev` begins a new sentence.
fn starts_sentence(prev: &str) -> bool {
    let trimmed = prev.trim_end_matches([' ', '\t']);
    trimmed.ends_with('\n') || last_mark(prev).is_some_and(|c| SENTENCE_FINAL.contains(&c))
}
