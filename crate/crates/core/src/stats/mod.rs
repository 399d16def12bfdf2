//! Downstream analyses over annotated essays.

pub mod analysis;
mod anova;
pub mod linalg;
mod manova;
mod mixed;
mod ratios;
pub mod special;

pub use anova::{bonferroni, one_way_anova, sample_sd, AnovaError, AnovaResult};
pub use manova::{
    dependent_variables, manova_wilks, rao_f, scatter_matrices, select_variables, ManovaError, ManovaResult,
    COLLINEARITY_TOLERANCE,
};
pub use mixed::{
    fit_random_intercept, log_likelihood_at, Convergence, EstimationMethod, FixedEffect, MixedModelError,
    MixedModelFit, Observation, PARAMETER_COUNT,
};
pub use ratios::{move_ratios, MoveRatios, NoCountedMoves, RatioScale, COUNTED_LABELS};

/// Significance stars: `*` p < .05, `**` p < .01, `***` p < .001.
pub fn stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

#[cfg(test)]
mod tests {
    use super::stars;

    #[test]
    fn star_thresholds() {
        assert_eq!(stars(0.0009), "***");
        assert_eq!(stars(0.001), "**");
        assert_eq!(stars(0.0099), "**");
        assert_eq!(stars(0.01), "*");
        assert_eq!(stars(0.049), "*");
        assert_eq!(stars(0.05), "");
        assert_eq!(stars(f64::NAN), "");
    }
}
