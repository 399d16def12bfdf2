use alloc::vec::Vec;

use super::linalg::SquareMatrix;
use super::special::f_sf;

/// A variable whose residual within-group variance, given the variables
/// before it, falls below this fraction of its own variance is treated as
/// linearly dependent.
pub const COLLINEARITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ManovaResult {
    pub wilks_lambda: f64,
    /// Rao's F approximation.
    pub f_statistic: f64,
    pub df1: f64,
    pub df2: f64,
    pub p_value: f64,
    pub variables: usize,
    pub groups: usize,
    pub observations: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ManovaError {
    #[error("need at least 2 groups, got {0}")]
    TooFewGroups(usize),
    #[error("need at least one variable")]
    NoVariables,
    #[error("observation {index} has {got} variables, expected {expected}")]
    Ragged { index: usize, expected: usize, got: usize },
    #[error("group {0} is empty")]
    EmptyGroup(usize),
    #[error("{observations} observations are too few for {variables} variables in {groups} groups")]
    TooFewObservations { observations: usize, variables: usize, groups: usize },
    #[error("non-finite observation in group {0}")]
    NonFinite(usize),
    /// Indices of variables that are linear combinations of earlier ones
    /// within groups.
    #[error("within-group scatter matrix is singular; dependent variables {dependent:?}")]
    SingularWithin { dependent: Vec<usize> },
}

/// Within-group (E) and between-group (H) scatter matrices.
pub fn scatter_matrices<G: AsRef<[Vec<f64>]>>(groups: &[G]) -> (SquareMatrix, SquareMatrix) {
    let p = groups.iter().flat_map(|g| g.as_ref().first()).map(Vec::len).next().unwrap_or(0);
    let n: usize = groups.iter().map(|g| g.as_ref().len()).sum();
    let mut grand = alloc::vec![0.0; p];
    for row in groups.iter().flat_map(|g| g.as_ref().iter()) {
        for (acc, x) in grand.iter_mut().zip(row) {
            *acc += x;
        }
    }
    grand.iter_mut().for_each(|v| *v /= n as f64);

    let mut e = SquareMatrix::zeros(p);
    let mut h = SquareMatrix::zeros(p);
    let mut dev = alloc::vec![0.0; p];
    for g in groups {
        let g = g.as_ref();
        if g.is_empty() {
            continue;
        }
        let mut mean = alloc::vec![0.0; p];
        for row in g {
            for (acc, x) in mean.iter_mut().zip(row) {
                *acc += x;
            }
        }
        mean.iter_mut().for_each(|v| *v /= g.len() as f64);
        for row in g {
            for k in 0..p {
                dev[k] = row[k] - mean[k];
            }
            e.add_outer(&dev, 1.0);
        }
        for k in 0..p {
            dev[k] = mean[k] - grand[k];
        }
        h.add_outer(&dev, g.len() as f64);
    }
    (e, h)
}

/// Greedy scan for variables that add no within-group variance beyond the
/// variables kept before them.
pub fn dependent_variables(e: &SquareMatrix) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    let mut dependent = Vec::new();
    let mut det_kept = 1.0;
    for j in 0..e.dim() {
        let diag = e.get(j, j);
        let mut idx = kept.clone();
        idx.push(j);
        let det = e.submatrix(&idx).determinant();
        let residual = det / det_kept;
        if diag <= 0.0 || residual.partial_cmp(&(COLLINEARITY_TOLERANCE * diag)) != Some(core::cmp::Ordering::Greater) {
            dependent.push(j);
        } else {
            kept = idx;
            det_kept = det;
        }
    }
    dependent
}

/// Rao's F approximation to Wilks' Λ with `p` variables, `vh` hypothesis and
/// `ve` error degrees of freedom. Returns `(F, df1, df2)`.
pub fn rao_f(lambda: f64, p: usize, vh: usize, ve: usize) -> (f64, f64, f64) {
    let (p, vh, ve) = (p as f64, vh as f64, ve as f64);
    let num = p * p * vh * vh - 4.0;
    let den = p * p + vh * vh - 5.0;
    let t = if den > 0.0 { libm::sqrt(num / den) } else { 1.0 };
    let df1 = p * vh;
    let w = ve + vh - (p + vh + 1.0) / 2.0;
    let df2 = w * t - (p * vh - 2.0) / 2.0;
    let root = libm::pow(lambda, 1.0 / t);
    let f = (1.0 - root) / root * df2 / df1;
    (f.max(0.0), df1, df2)
}

/// One-way MANOVA. Each group is a list of observation vectors of equal
/// length.
pub fn manova_wilks<G: AsRef<[Vec<f64>]>>(groups: &[G]) -> Result<ManovaResult, ManovaError> {
    if groups.len() < 2 {
        return Err(ManovaError::TooFewGroups(groups.len()));
    }
    let mut p = None;
    let mut index = 0;
    for (gi, g) in groups.iter().enumerate() {
        let g = g.as_ref();
        if g.is_empty() {
            return Err(ManovaError::EmptyGroup(gi));
        }
        for row in g {
            let expected = *p.get_or_insert(row.len());
            if row.len() != expected {
                return Err(ManovaError::Ragged { index, expected, got: row.len() });
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(ManovaError::NonFinite(gi));
            }
            index += 1;
        }
    }
    let p = p.unwrap_or(0);
    if p == 0 {
        return Err(ManovaError::NoVariables);
    }
    let n = index;
    let k = groups.len();
    if n <= p + k {
        return Err(ManovaError::TooFewObservations { observations: n, variables: p, groups: k });
    }
    let (e, h) = scatter_matrices(groups);
    let dependent = dependent_variables(&e);
    if !dependent.is_empty() {
        return Err(ManovaError::SingularWithin { dependent });
    }
    let det_e = e.determinant();
    let det_t = e.add(&h).determinant();
    let wilks_lambda = (det_e / det_t).min(1.0);
    let vh = k - 1;
    let ve = n - k;
    let (f_statistic, df1, df2) = rao_f(wilks_lambda, p, vh, ve);
    Ok(ManovaResult {
        wilks_lambda,
        f_statistic,
        df1,
        df2,
        p_value: f_sf(f_statistic, df1, df2),
        variables: p,
        groups: k,
        observations: n,
    })
}

/// Keeps only the listed variables of every observation.
pub fn select_variables(groups: &[Vec<Vec<f64>>], keep: &[usize]) -> Vec<Vec<Vec<f64>>> {
    groups.iter().map(|g| g.iter().map(|row| keep.iter().map(|&i| row[i]).collect()).collect()).collect()
}
