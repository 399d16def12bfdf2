//! Quality-level discrimination and longitudinal development over a corpus.

use alloc::string::String;
use alloc::vec::Vec;

use super::{
    bonferroni, dependent_variables, fit_random_intercept, manova_wilks, move_ratios, one_way_anova, sample_sd,
    scatter_matrices, select_variables, AnovaError, AnovaResult, EstimationMethod, ManovaError, ManovaResult,
    MixedModelError, MixedModelFit, MoveRatios, Observation, RatioScale, COUNTED_LABELS,
};
use crate::corpus::{AnnotatedEssay, QualityLevel};
use crate::label::MoveLabel;

/// Ratio rows of one quality analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityRow {
    pub label: MoveLabel,
    /// Per entry of [`QualityReport::levels`].
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    pub anova: AnovaResult,
    /// Bonferroni-adjusted over the counted labels.
    pub adjusted_p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManovaSummary {
    pub result: ManovaResult,
    /// Labels entering the test.
    pub labels: Vec<MoveLabel>,
    /// Labels left out because they are linear combinations of the others
    /// (ratios summing to one make the last of the five redundant).
    pub dropped: Vec<MoveLabel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    pub scale: RatioScale,
    pub levels: Vec<QualityLevel>,
    pub counts: Vec<usize>,
    pub rows: Vec<QualityRow>,
    pub manova: ManovaSummary,
    /// Essays left out: no quality level or no counted move.
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("need essays from at least 2 quality levels, got {0}")]
    TooFewLevels(usize),
    #[error("anova for {label}: {source}")]
    Anova { label: MoveLabel, source: AnovaError },
    #[error("manova: {0}")]
    Manova(ManovaError),
    #[error("mixed model for {label}: {source}")]
    Mixed { label: MoveLabel, source: MixedModelError },
}

fn ratios_of(essay: &AnnotatedEssay, scale: RatioScale) -> Option<MoveRatios> {
    move_ratios(essay, scale).ok()
}

/// Per-level ratio means and SDs, one-way ANOVA per counted label with
/// Bonferroni over the five labels, and a MANOVA over the ratio vectors.
pub fn analyze_quality(essays: &[AnnotatedEssay], scale: RatioScale) -> Result<QualityReport, AnalysisError> {
    let mut by_level: [Vec<[f64; 5]>; 3] = Default::default();
    let mut skipped = 0;
    for e in essays {
        match (e.essay().quality_level(), ratios_of(e, scale)) {
            (Some(q), Some(r)) => by_level[q as usize].push(r.values),
            _ => skipped += 1,
        }
    }
    let present: Vec<usize> = (0..3).filter(|&i| !by_level[i].is_empty()).collect();
    if present.len() < 2 {
        return Err(AnalysisError::TooFewLevels(present.len()));
    }
    let levels: Vec<QualityLevel> = present.iter().map(|&i| QualityLevel::ALL[i]).collect();
    let counts: Vec<usize> = present.iter().map(|&i| by_level[i].len()).collect();

    let mut rows = Vec::with_capacity(COUNTED_LABELS.len());
    for (v, &label) in COUNTED_LABELS.iter().enumerate() {
        let groups: Vec<Vec<f64>> = present.iter().map(|&i| by_level[i].iter().map(|r| r[v]).collect()).collect();
        let anova = one_way_anova(&groups).map_err(|source| AnalysisError::Anova { label, source })?;
        rows.push(QualityRow {
            label,
            means: groups.iter().map(|g| g.iter().sum::<f64>() / g.len() as f64).collect(),
            sds: groups.iter().map(|g| sample_sd(g)).collect(),
            anova,
            adjusted_p: 0.0,
        });
    }
    let raw: Vec<f64> = rows.iter().map(|r| r.anova.p_value).collect();
    for (row, p) in rows.iter_mut().zip(bonferroni(&raw, COUNTED_LABELS.len())) {
        row.adjusted_p = p;
    }

    let groups: Vec<Vec<Vec<f64>>> =
        present.iter().map(|&i| by_level[i].iter().map(|r| r.to_vec()).collect()).collect();
    let (e, _) = scatter_matrices(&groups);
    let dependent = dependent_variables(&e);
    let keep: Vec<usize> = (0..COUNTED_LABELS.len()).filter(|i| !dependent.contains(i)).collect();
    if keep.is_empty() {
        return Err(AnalysisError::Manova(ManovaError::SingularWithin { dependent }));
    }
    let result = manova_wilks(&select_variables(&groups, &keep)).map_err(AnalysisError::Manova)?;
    let manova = ManovaSummary {
        result,
        labels: keep.iter().map(|&i| COUNTED_LABELS[i]).collect(),
        dropped: dependent.iter().map(|&i| COUNTED_LABELS[i]).collect(),
    };
    Ok(QualityReport { scale, levels, counts, rows, manova, skipped })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DevelopmentRow {
    pub label: MoveLabel,
    pub fit: MixedModelFit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DevelopmentReport {
    pub scale: RatioScale,
    pub method: EstimationMethod,
    pub rows: Vec<DevelopmentRow>,
    /// Essays without a counted move.
    pub skipped: usize,
}

/// Ratio observations of one label, keyed by learner and wave.
pub fn observations(essays: &[AnnotatedEssay], label: MoveLabel, scale: RatioScale) -> Vec<Observation> {
    essays
        .iter()
        .filter_map(|e| {
            let r = ratios_of(e, scale)?;
            Some(Observation {
                individual: String::from(e.essay().learner_id()),
                wave: e.essay().wave() as f64,
                y: r.get(label)?,
            })
        })
        .collect()
}

/// One random-intercept regression of the ratio on wave per counted label.
pub fn analyze_development(
    essays: &[AnnotatedEssay],
    scale: RatioScale,
    method: EstimationMethod,
) -> Result<DevelopmentReport, AnalysisError> {
    let skipped = essays.iter().filter(|e| ratios_of(e, scale).is_none()).count();
    let mut rows = Vec::with_capacity(COUNTED_LABELS.len());
    for label in COUNTED_LABELS {
        let obs = observations(essays, label, scale);
        let fit = fit_random_intercept(&obs, method).map_err(|source| AnalysisError::Mixed { label, source })?;
        rows.push(DevelopmentRow { label, fit });
    }
    Ok(DevelopmentReport { scale, method, rows, skipped })
}
