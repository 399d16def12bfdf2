//! Gold-annotated synthetic corpora.
//!
//! Generation is sequential from one `ChaCha8` stream seeded with
//! `config.seed`:
//!
//! 1. For each learner `l` (ids `L0001`, ...), draw an intercept offset for the
//!    data probability from `Normal(0, learner_sd)`.
//! 2. For each wave `w` in `1..=waves`, draw a quality level uniformly, then
//!    build the move probabilities: base, plus the quality shift on
//!    counter-claims, plus `trend · (w − mean wave)` per label, plus the
//!    learner offset on data. The sum of these shifts is subtracted from
//!    claim, negative entries are clamped to 0 and the vector is renormalized.
//! 3. Draw the body move count uniformly from `moves_min..=moves_max` and each
//!    body label from the probabilities. A title line always comes first.
//! 4. Render every move as one sentence. Its first clause opens with a cue
//!    phrase of the label; further clauses follow a comma. Sentences end with
//!    a period followed by a space, or by a newline for a paragraph break.
//!
//! Templates contain no digits, single-letter words or inner terminators, so
//! every gold boundary is a candidate boundary of the default segmentation
//! rules.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use crate::corpus::{AnnotatedEssay, AnnotatedMove, Essay, QualityLevel, Source};
use crate::label::MoveLabel;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Body move labels in the order used by [`MoveWeights`].
pub const BODY_LABELS: [MoveLabel; 7] = [
    MoveLabel::Claim,
    MoveLabel::Data,
    MoveLabel::CounterClaim,
    MoveLabel::CounterData,
    MoveLabel::RebuttalClaim,
    MoveLabel::RebuttalData,
    MoveLabel::NonArgument,
];

/// One number per body label.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default, deny_unknown_fields))]
pub struct MoveWeights {
    pub claim: f64,
    pub data: f64,
    pub counter_claim: f64,
    pub counter_data: f64,
    pub rebuttal_claim: f64,
    pub rebuttal_data: f64,
    pub non_argument: f64,
}

impl Default for MoveWeights {
    fn default() -> Self {
        MoveWeights::ZERO
    }
}

impl MoveWeights {
    pub const ZERO: MoveWeights = MoveWeights {
        claim: 0.0,
        data: 0.0,
        counter_claim: 0.0,
        counter_data: 0.0,
        rebuttal_claim: 0.0,
        rebuttal_data: 0.0,
        non_argument: 0.0,
    };

    pub fn to_array(&self) -> [f64; 7] {
        [
            self.claim,
            self.data,
            self.counter_claim,
            self.counter_data,
            self.rebuttal_claim,
            self.rebuttal_data,
            self.non_argument,
        ]
    }

    pub fn get(&self, label: MoveLabel) -> f64 {
        BODY_LABELS.iter().position(|&l| l == label).map_or(0.0, |i| self.to_array()[i])
    }
}

/// Base body-move probabilities.
pub const DEFAULT_BASE: MoveWeights = MoveWeights {
    claim: 0.33,
    data: 0.49,
    counter_claim: 0.05,
    counter_data: 0.02,
    rebuttal_claim: 0.05,
    rebuttal_data: 0.02,
    non_argument: 0.04,
};

/// Per-wave drifts.
pub const DEFAULT_TRENDS: MoveWeights = MoveWeights {
    data: 0.0128,
    counter_claim: 0.0025,
    non_argument: -0.0025,
    ..MoveWeights::ZERO
};

/// Additive shift on the counter-claim probability by quality level.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default, deny_unknown_fields))]
pub struct QualityEffect {
    pub low: f64,
    pub medium: f64,
    pub high: f64,
}

impl Default for QualityEffect {
    fn default() -> Self {
        QualityEffect { low: 0.0, medium: 0.01, high: 0.04 }
    }
}

impl QualityEffect {
    pub const NONE: QualityEffect = QualityEffect { low: 0.0, medium: 0.0, high: 0.0 };

    pub fn get(&self, q: QualityLevel) -> f64 {
        match q {
            QualityLevel::Low => self.low,
            QualityLevel::Medium => self.medium,
            QualityLevel::High => self.high,
        }
    }
}

/// Cue phrases opening each body move type.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default, deny_unknown_fields))]
pub struct CueLexicon {
    pub claim: Vec<String>,
    pub data: Vec<String>,
    pub counter_claim: Vec<String>,
    pub counter_data: Vec<String>,
    pub rebuttal_claim: Vec<String>,
    pub rebuttal_data: Vec<String>,
    pub non_argument: Vec<String>,
}

fn strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

impl Default for CueLexicon {
    fn default() -> Self {
        CueLexicon {
            claim: strings(&["I think", "I believe", "In my opinion"]),
            data: strings(&["For example", "For instance", "According to"]),
            counter_claim: strings(&["Some may say", "Some people argue", "Others believe"]),
            counter_data: strings(&["They point out", "Their evidence shows"]),
            rebuttal_claim: strings(&["However", "Nevertheless"]),
            rebuttal_data: strings(&["In fact", "Actually"]),
            non_argument: strings(&["By the way", "To be honest", "Anyway"]),
        }
    }
}

impl CueLexicon {
    pub fn get(&self, label: MoveLabel) -> &[String] {
        match label {
            MoveLabel::Claim => &self.claim,
            MoveLabel::Data => &self.data,
            MoveLabel::CounterClaim => &self.counter_claim,
            MoveLabel::CounterData => &self.counter_data,
            MoveLabel::RebuttalClaim => &self.rebuttal_claim,
            MoveLabel::RebuttalData => &self.rebuttal_data,
            MoveLabel::NonArgument => &self.non_argument,
            MoveLabel::Title => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default, deny_unknown_fields))]
pub struct GeneratorConfig {
    pub learners: usize,
    pub waves: u32,
    /// Body moves per essay, inclusive range; the title comes on top.
    pub moves_min: usize,
    pub moves_max: usize,
    /// Clauses per move, inclusive range.
    pub clauses_max: usize,
    pub base: MoveWeights,
    pub trends: MoveWeights,
    pub quality_effect: QualityEffect,
    /// SD of the per-learner offset on the data probability.
    pub learner_sd: f64,
    /// Chance that a sentence ends a paragraph.
    pub paragraph_break: f64,
    pub cues: CueLexicon,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            learners: 120,
            waves: 12,
            moves_min: 10,
            moves_max: 16,
            clauses_max: 3,
            base: DEFAULT_BASE,
            trends: DEFAULT_TRENDS,
            quality_effect: QualityEffect::default(),
            learner_sd: 0.03,
            paragraph_break: 0.2,
            cues: CueLexicon::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("learner count must be positive")]
    NoLearners,
    #[error("wave count must be positive")]
    NoWaves,
    #[error("move range {0}..={1} is empty or starts at zero")]
    MoveRange(usize, usize),
    #[error("clauses_max must be positive")]
    NoClauses,
    #[error("{0} must be finite and non-negative")]
    Negative(&'static str),
    #[error("paragraph_break must lie in [0, 1]")]
    ParagraphBreak,
    #[error("base probabilities are all zero")]
    ZeroBase,
    #[error("{0} has positive probability but no cue phrase")]
    MissingCue(MoveLabel),
    #[error("cue phrase {0:?} for {1} is empty or contains a terminator or digit")]
    BadCue(String, MoveLabel),
    #[error("probabilities vanish for learner {learner} at wave {wave}")]
    Vanishing { learner: usize, wave: u32 },
}

impl GeneratorConfig {
    /// A corpus without quality differences or time trends.
    pub fn null(mut self) -> Self {
        self.trends = MoveWeights::ZERO;
        self.quality_effect = QualityEffect::NONE;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.learners == 0 {
            return Err(ConfigError::NoLearners);
        }
        if self.waves == 0 {
            return Err(ConfigError::NoWaves);
        }
        if self.moves_min == 0 || self.moves_min > self.moves_max {
            return Err(ConfigError::MoveRange(self.moves_min, self.moves_max));
        }
        if self.clauses_max == 0 {
            return Err(ConfigError::NoClauses);
        }
        if self.base.to_array().iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(ConfigError::Negative("base probabilities"));
        }
        if !(self.learner_sd.is_finite() && self.learner_sd >= 0.0) {
            return Err(ConfigError::Negative("learner_sd"));
        }
        if self.trends.to_array().iter().chain(&[self.quality_effect.low, self.quality_effect.medium, self.quality_effect.high]).any(|x| !x.is_finite()) {
            return Err(ConfigError::Negative("trends and quality effects"));
        }
        if !(0.0..=1.0).contains(&self.paragraph_break) {
            return Err(ConfigError::ParagraphBreak);
        }
        if self.base.to_array().iter().sum::<f64>() <= 0.0 {
            return Err(ConfigError::ZeroBase);
        }
        for label in BODY_LABELS {
            let reachable = self.base.get(label) > 0.0
                || self.trends.get(label) != 0.0
                || (label == MoveLabel::CounterClaim && self.quality_effect.get(QualityLevel::High) != 0.0)
                || (label == MoveLabel::Data && self.learner_sd > 0.0);
            let cues = self.cues.get(label);
            if reachable && cues.is_empty() {
                return Err(ConfigError::MissingCue(label));
            }
            for cue in cues {
                if cue.trim().is_empty() || cue.chars().any(|c| c.is_ascii_digit() || ".!?;:,\n".contains(c)) {
                    return Err(ConfigError::BadCue(cue.clone(), label));
                }
            }
        }
        Ok(())
    }

    /// Move probabilities for one essay. Shifts are balanced against the
    /// claim probability so they keep their size; the result is then clamped
    /// at zero and renormalized.
    pub fn probabilities(&self, wave: u32, quality: QualityLevel, learner_offset: f64) -> Option<[f64; 7]> {
        let center = (self.waves as f64 + 1.0) / 2.0;
        let mut shift = self.trends.to_array().map(|t| t * (wave as f64 - center));
        shift[2] += self.quality_effect.get(quality);
        shift[1] += learner_offset;
        shift[0] -= shift.iter().sum::<f64>();
        let mut p = self.base.to_array();
        for (pi, s) in p.iter_mut().zip(shift) {
            *pi = (*pi + s).max(0.0);
        }
        let total: f64 = p.iter().sum();
        if total <= 0.0 {
            return None;
        }
        p.iter_mut().for_each(|x| *x /= total);
        Some(p)
    }
}

const TOPICS: &[&str] = &[
    "School Uniforms",
    "Homework on Weekends",
    "Online Classes",
    "Public Transport",
    "Social Media and Friendship",
    "Learning Foreign Languages",
    "Part Time Jobs for Students",
    "Living in Big Cities",
];

const SUBJECTS: &[&str] = &[
    "students",
    "many teachers",
    "young people",
    "most parents",
    "our school",
    "the government",
    "people in my town",
    "my classmates",
];

const VERBS: &[&str] = &["need", "support", "enjoy", "prefer", "worry about", "talk about", "depend on", "care about"];

const OBJECTS: &[&str] = &[
    "clear rules",
    "more free time",
    "better lessons",
    "healthy habits",
    "good friends",
    "cheaper tickets",
    "quiet places",
    "useful skills",
    "new ideas",
    "honest advice",
];

fn pick<'a, R: Rng>(rng: &mut R, xs: &'a [&'a str]) -> &'a str {
    xs[rng.random_range(0..xs.len())]
}

fn clause<R: Rng>(rng: &mut R) -> String {
    format!("{} {} {}", pick(rng, SUBJECTS), pick(rng, VERBS), pick(rng, OBJECTS))
}

/// Generates the corpus. Equal configs give identical corpora.
pub fn generate_corpus(config: &GeneratorConfig) -> Result<Vec<AnnotatedEssay>, ConfigError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let offset_dist = Normal::new(0.0, config.learner_sd).map_err(|_| ConfigError::Negative("learner_sd"))?;
    let mut out = Vec::with_capacity(config.learners * config.waves as usize);
    for learner in 0..config.learners {
        let learner_id = format!("L{:04}", learner + 1);
        let offset = if config.learner_sd > 0.0 { offset_dist.sample(&mut rng) } else { 0.0 };
        for wave in 1..=config.waves {
            let quality = QualityLevel::ALL[rng.random_range(0..3)];
            let probs = config
                .probabilities(wave, quality, offset)
                .ok_or(ConfigError::Vanishing { learner: learner + 1, wave })?;
            let dist = WeightedIndex::new(probs).map_err(|_| ConfigError::Vanishing { learner: learner + 1, wave })?;
            let n_moves = rng.random_range(config.moves_min..=config.moves_max);

            let mut text = String::new();
            let mut moves = Vec::with_capacity(n_moves + 1);
            let mut pos = 0usize;
            let mut push = |text: &mut String, piece: &str, label: MoveLabel, moves: &mut Vec<AnnotatedMove>| {
                let len = piece.chars().count();
                text.push_str(piece);
                moves.push(AnnotatedMove::new(pos, pos + len, label));
                pos += len;
            };
            let title = format!("{}\n", pick(&mut rng, TOPICS));
            push(&mut text, &title, MoveLabel::Title, &mut moves);
            for m in 0..n_moves {
                let label = BODY_LABELS[dist.sample(&mut rng)];
                let cues = config.cues.get(label);
                let cue = cues[rng.random_range(0..cues.len())].as_str();
                let n_clauses = rng.random_range(1..=config.clauses_max);
                let mut sentence = format!("{cue} {}", clause(&mut rng));
                for _ in 1..n_clauses {
                    sentence.push_str(", ");
                    sentence.push_str(&clause(&mut rng));
                }
                sentence.push('.');
                if m + 1 < n_moves {
                    sentence.push(if rng.random_bool(config.paragraph_break) { '\n' } else { ' ' });
                }
                push(&mut text, &sentence, label, &mut moves);
            }
            let essay_id = format!("{learner_id}-W{wave:02}");
            let essay = Essay::new(essay_id, learner_id.clone(), wave, text, Some(quality))
                .expect("generated essay has text and a positive wave");
            out.push(AnnotatedEssay::new(essay, moves, Source::Human).expect("generated moves partition the text"));
        }
    }
    Ok(out)
}
