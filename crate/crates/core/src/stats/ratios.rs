use crate::corpus::AnnotatedEssay;
use crate::label::MoveLabel;

/// Move types that enter the downstream analyses, in report order. Title,
/// counter-data and rebuttal-data are excluded from both numerator and
/// denominator.
pub const COUNTED_LABELS: [MoveLabel; 5] = [
    MoveLabel::Claim,
    MoveLabel::Data,
    MoveLabel::CounterClaim,
    MoveLabel::RebuttalClaim,
    MoveLabel::NonArgument,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum RatioScale {
    #[default]
    Fraction,
    Percent,
}

impl RatioScale {
    pub fn factor(self) -> f64 {
        match self {
            RatioScale::Fraction => 1.0,
            RatioScale::Percent => 100.0,
        }
    }
}

/// Share of each counted move type in one essay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoveRatios {
    /// Indexed like [`COUNTED_LABELS`].
    pub values: [f64; 5],
    pub counts: [u32; 5],
    pub denominator: u32,
    pub scale: RatioScale,
}

impl MoveRatios {
    pub fn get(&self, label: MoveLabel) -> Option<f64> {
        COUNTED_LABELS.iter().position(|&l| l == label).map(|i| self.values[i])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("essay {0} has no counted moves")]
pub struct NoCountedMoves(pub alloc::string::String);

pub fn move_ratios(essay: &AnnotatedEssay, scale: RatioScale) -> Result<MoveRatios, NoCountedMoves> {
    let mut counts = [0u32; 5];
    for m in essay.moves() {
        if let Some(i) = COUNTED_LABELS.iter().position(|&l| l == m.label) {
            counts[i] += 1;
        }
    }
    let denominator: u32 = counts.iter().sum();
    if denominator == 0 {
        return Err(NoCountedMoves(essay.essay().essay_id().into()));
    }
    let values = core::array::from_fn(|i| scale.factor() * counts[i] as f64 / denominator as f64);
    Ok(MoveRatios { values, counts, denominator, scale })
}
