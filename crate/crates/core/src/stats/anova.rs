use alloc::vec::Vec;

use super::special::f_sf;

#[derive(Debug, Clone, PartialEq)]
pub struct AnovaResult {
    /// `+inf` when within-group variance is zero but means differ.
    pub f_statistic: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub p_value: f64,
    pub eta_squared: f64,
    pub ss_between: f64,
    pub ss_within: f64,
    /// All observations are equal; F and η² are reported as 0.
    pub constant: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnovaError {
    #[error("need at least 2 groups, got {0}")]
    TooFewGroups(usize),
    #[error("group {group} has {size} observations, need at least 2")]
    GroupTooSmall { group: usize, size: usize },
    #[error("non-finite observation in group {0}")]
    NonFinite(usize),
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n − 1 denominator); 0 for fewer than 2 values.
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    libm::sqrt(xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64)
}

/// One-way between-groups ANOVA with η² = 1 − SS_within / SS_total.
pub fn one_way_anova<G: AsRef<[f64]>>(groups: &[G]) -> Result<AnovaResult, AnovaError> {
    if groups.len() < 2 {
        return Err(AnovaError::TooFewGroups(groups.len()));
    }
    for (group, g) in groups.iter().enumerate() {
        let g = g.as_ref();
        if g.len() < 2 {
            return Err(AnovaError::GroupTooSmall { group, size: g.len() });
        }
        if g.iter().any(|x| !x.is_finite()) {
            return Err(AnovaError::NonFinite(group));
        }
    }
    let n: usize = groups.iter().map(|g| g.as_ref().len()).sum();
    let grand = groups.iter().flat_map(|g| g.as_ref().iter()).sum::<f64>() / n as f64;
    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for g in groups {
        let g = g.as_ref();
        let m = mean(g);
        ss_between += g.len() as f64 * (m - grand) * (m - grand);
        ss_within += g.iter().map(|x| (x - m) * (x - m)).sum::<f64>();
    }
    let k = groups.len();
    let df_between = k - 1;
    let df_within = n - k;
    let ss_total = ss_between + ss_within;

    let (f_statistic, p_value, eta_squared, constant) = if ss_total == 0.0 {
        (0.0, 1.0, 0.0, true)
    } else if ss_within == 0.0 {
        (f64::INFINITY, 0.0, 1.0, false)
    } else {
        let f = (ss_between / df_between as f64) / (ss_within / df_within as f64);
        (f, f_sf(f, df_between as f64, df_within as f64), 1.0 - ss_within / ss_total, false)
    };
    Ok(AnovaResult { f_statistic, df_between, df_within, p_value, eta_squared, ss_between, ss_within, constant })
}

/// Bonferroni adjustment: `min(1, m·p)` element-wise. `m = 0` is treated as 1.
pub fn bonferroni(p_values: &[f64], comparisons: usize) -> Vec<f64> {
    let m = comparisons.max(1) as f64;
    p_values.iter().map(|p| (m * p).min(1.0)).collect()
}
