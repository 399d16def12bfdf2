//! Random-intercept linear model `y_ij = β0 + β1·wave_ij + u_i + e_ij`.
//!
//! Given the variance ratio `γ = σ²_u / σ²_e` the fixed effects and the
//! residual variance have closed forms, so the likelihood is profiled down to
//! a function of `γ` and maximized in one dimension.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use libm::{fabs, log, sqrt};

use super::linalg::inverse_2x2;
use super::special::{chi2_1_sf, normal_two_sided};

/// Estimated parameters: β0, β1, σ²_u, σ²_e.
pub const PARAMETER_COUNT: usize = 4;

const GRID_LOG10_MIN: f64 = -6.0;
const GRID_LOG10_MAX: f64 = 6.0;
const GRID_STEPS: usize = 120;
const MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub individual: String,
    pub wave: f64,
    pub y: f64,
}

impl Observation {
    pub fn new(individual: impl Into<String>, wave: f64, y: f64) -> Self {
        Observation { individual: individual.into(), wave, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum EstimationMethod {
    #[default]
    Ml,
    Reml,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedEffect {
    pub estimate: f64,
    pub std_error: f64,
    pub z: f64,
    pub p_value: f64,
}

impl FixedEffect {
    fn new(estimate: f64, variance: f64) -> Self {
        let std_error = sqrt(variance.max(0.0));
        let z = estimate / std_error;
        FixedEffect { estimate, std_error, z, p_value: normal_two_sided(z) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Convergence {
    pub iterations: usize,
    /// Derivative of the profiled log-likelihood with respect to `γ` at the
    /// estimate.
    pub gradient: f64,
    /// The estimate sits at `γ = 0`.
    pub boundary: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedModelFit {
    pub method: EstimationMethod,
    pub intercept: FixedEffect,
    pub wave: FixedEffect,
    pub sigma2_between: f64,
    pub sigma2_within: f64,
    /// Likelihood-ratio test of `σ²_u = 0` against a 50:50 mixture of χ²₀ and χ²₁.
    pub between_p_value: f64,
    pub gamma: f64,
    pub log_likelihood: f64,
    pub aic: f64,
    pub bic: f64,
    pub observations: usize,
    pub individuals: usize,
    pub convergence: Convergence,
}

impl MixedModelFit {
    pub fn parameter_count(&self) -> usize {
        PARAMETER_COUNT
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MixedModelError {
    #[error("need at least 2 individuals, got {0}")]
    TooFewIndividuals(usize),
    #[error("no individual is observed at 2 or more waves")]
    NoRepeatedMeasures,
    #[error("wave is constant across observations")]
    ConstantWave,
    #[error("non-finite value in observation {0}")]
    NonFinite(usize),
    #[error("need more than 2 observations, got {0}")]
    TooFewObservations(usize),
    #[error("optimizer did not converge: {0}")]
    NoConvergence(&'static str),
}

struct Group {
    x: Vec<f64>,
    y: Vec<f64>,
}

/// Centered data grouped by individual.
struct Design {
    groups: Vec<Group>,
    n: usize,
    x_mean: f64,
    y_mean: f64,
}

/// Closed-form quantities at one value of `γ`, on the centered scale.
struct Profile {
    beta: [f64; 2],
    xtwx: [f64; 3],
    rss: f64,
    residual_sums: Vec<f64>,
}

impl Design {
    fn build(obs: &[Observation]) -> Result<Self, MixedModelError> {
        if let Some(i) = obs.iter().position(|o| !o.wave.is_finite() || !o.y.is_finite()) {
            return Err(MixedModelError::NonFinite(i));
        }
        let n = obs.len();
        if n <= 2 {
            return Err(MixedModelError::TooFewObservations(n));
        }
        let x_mean = obs.iter().map(|o| o.wave).sum::<f64>() / n as f64;
        let y_mean = obs.iter().map(|o| o.y).sum::<f64>() / n as f64;
        let mut by_id: BTreeMap<&str, Group> = BTreeMap::new();
        for o in obs {
            let g = by_id.entry(o.individual.as_str()).or_insert_with(|| Group { x: Vec::new(), y: Vec::new() });
            g.x.push(o.wave - x_mean);
            g.y.push(o.y - y_mean);
        }
        if by_id.len() < 2 {
            return Err(MixedModelError::TooFewIndividuals(by_id.len()));
        }
        if by_id.values().all(|g| g.x.len() < 2) {
            return Err(MixedModelError::NoRepeatedMeasures);
        }
        if obs.iter().all(|o| o.wave == obs[0].wave) {
            return Err(MixedModelError::ConstantWave);
        }
        Ok(Design { groups: by_id.into_values().collect(), n, x_mean, y_mean })
    }

    fn profile(&self, gamma: f64) -> Option<Profile> {
        let (mut a, mut b, mut d, mut u, mut v) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for g in &self.groups {
            let ni = g.x.len() as f64;
            let c = gamma / (1.0 + ni * gamma);
            let sx: f64 = g.x.iter().sum();
            let sy: f64 = g.y.iter().sum();
            let sxx: f64 = g.x.iter().map(|x| x * x).sum();
            let sxy: f64 = g.x.iter().zip(&g.y).map(|(x, y)| x * y).sum();
            a += ni - c * ni * ni;
            b += sx - c * ni * sx;
            d += sxx - c * sx * sx;
            u += sy - c * ni * sy;
            v += sxy - c * sx * sy;
        }
        let inv = inverse_2x2(a, b, d)?;
        let beta = [inv[0][0] * u + inv[0][1] * v, inv[1][0] * u + inv[1][1] * v];
        let mut rss = 0.0;
        let mut residual_sums = Vec::with_capacity(self.groups.len());
        for g in &self.groups {
            let ni = g.x.len() as f64;
            let c = gamma / (1.0 + ni * gamma);
            let mut s = 0.0;
            let mut ss = 0.0;
            for (x, y) in g.x.iter().zip(&g.y) {
                let r = y - beta[0] - beta[1] * x;
                s += r;
                ss += r * r;
            }
            rss += ss - c * s * s;
            residual_sums.push(s);
        }
        Some(Profile { beta, xtwx: [a, b, d], rss, residual_sums })
    }

    fn log_det_h(&self, gamma: f64) -> f64 {
        self.groups.iter().map(|g| libm::log1p(g.x.len() as f64 * gamma)).sum()
    }

    fn log_likelihood(&self, gamma: f64, method: EstimationMethod) -> Option<(f64, Profile)> {
        let p = self.profile(gamma)?;
        if p.rss.partial_cmp(&0.0) != Some(core::cmp::Ordering::Greater) {
            return None;
        }
        let n = self.n as f64;
        let ll = match method {
            EstimationMethod::Ml => -0.5 * (n * log(2.0 * PI) + n * log(p.rss / n) + n + self.log_det_h(gamma)),
            EstimationMethod::Reml => {
                let m = n - 2.0;
                let [a, b, d] = p.xtwx;
                -0.5 * (m * (log(2.0 * PI) + log(p.rss / m) + 1.0) + self.log_det_h(gamma) + log(a * d - b * b))
            }
        };
        Some((ll, p))
    }

    /// Derivative of the ML profiled log-likelihood with respect to `γ`.
    fn ml_score(&self, gamma: f64, p: &Profile) -> f64 {
        let n = self.n as f64;
        let mut quad = 0.0;
        let mut trace = 0.0;
        for (g, s) in self.groups.iter().zip(&p.residual_sums) {
            let ni = g.x.len() as f64;
            let q = 1.0 + ni * gamma;
            quad += s * s / (q * q);
            trace += ni / q;
        }
        0.5 * n * quad / p.rss - 0.5 * trace
    }

    fn gradient(&self, gamma: f64, method: EstimationMethod) -> f64 {
        match method {
            EstimationMethod::Ml => self.profile(gamma).map(|p| self.ml_score(gamma, &p)).unwrap_or(f64::NAN),
            EstimationMethod::Reml => {
                let h = 1e-6 * gamma.max(1e-3);
                let lo = (gamma - h).max(0.0);
                let f = |g| self.log_likelihood(g, method).map(|(ll, _)| ll).unwrap_or(f64::NAN);
                (f(gamma + h) - f(lo)) / (gamma + h - lo)
            }
        }
    }
}

fn grid() -> impl Iterator<Item = f64> {
    core::iter::once(0.0).chain((0..=GRID_STEPS).map(|k| {
        let e = GRID_LOG10_MIN + (GRID_LOG10_MAX - GRID_LOG10_MIN) * k as f64 / GRID_STEPS as f64;
        libm::pow(10.0, e)
    }))
}

/// Brent's root finder on `[a, b]` with `f(a)` and `f(b)` of opposite sign.
fn brent_root(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, rel_tol: f64) -> Option<(f64, usize)> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa * fb > 0.0 {
        return None;
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for iter in 0..MAX_ITER {
        if fb * fc > 0.0 {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fabs(fc) < fabs(fb) {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * fabs(b) + 0.5 * rel_tol * fabs(b).max(1e-12);
        let m = 0.5 * (c - b);
        if fabs(m) <= tol || fb == 0.0 {
            return Some((b, iter));
        }
        if fabs(e) >= tol && fabs(fa) > fabs(fb) {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - fabs(tol * q)).min(fabs(e * q)) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = d;
            }
        } else {
            d = m;
            e = d;
        }
        a = b;
        fa = fb;
        b += if fabs(d) > tol { d } else if m > 0.0 { tol } else { -tol };
        fb = f(b);
    }
    None
}

/// Golden-section maximization on `[a, b]`.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, rel_tol: f64) -> (f64, usize) {
    let r = (sqrt(5.0) - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iter = 0;
    while iter < MAX_ITER && (b - a) > rel_tol * (0.5 * (a + b)).max(1e-12) {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        }
        iter += 1;
    }
    (0.5 * (a + b), iter)
}

/// Maximizes the (restricted) likelihood over `γ ≥ 0`: a log-spaced grid
/// locates the peak, then the derivative's root is polished inside the
/// bracketing grid cell to relative tolerance `1e-10`.
pub fn fit_random_intercept(obs: &[Observation], method: EstimationMethod) -> Result<MixedModelFit, MixedModelError> {
    let design = Design::build(obs)?;
    let ll = |g: f64| design.log_likelihood(g, method).map(|(ll, _)| ll).unwrap_or(f64::NEG_INFINITY);

    let points: Vec<f64> = grid().collect();
    let values: Vec<f64> = points.iter().map(|&g| ll(g)).collect();
    let best = (0..points.len())
        .fold(None::<usize>, |acc, i| match acc {
            Some(j) if values[j] >= values[i] => Some(j),
            _ if values[i].is_finite() => Some(i),
            _ => acc,
        })
        .ok_or(MixedModelError::NoConvergence("likelihood is not finite anywhere on the grid"))?;
    if best == points.len() - 1 {
        return Err(MixedModelError::NoConvergence("variance ratio diverges"));
    }

    let grad = |g: f64| design.gradient(g, method);
    let (gamma, iterations) = if best == 0 && grad(0.0) <= 0.0 {
        (0.0, 0)
    } else {
        let lo = if best == 0 { 0.0 } else { points[best - 1] };
        let hi = points[best + 1];
        match brent_root(grad, lo, hi, 1e-10) {
            Some(r) => r,
            None => golden_max(ll, lo, hi, 1e-10),
        }
    };
    let (gamma, iterations) = if gamma > 0.0 && ll(0.0) >= ll(gamma) { (0.0, iterations) } else { (gamma, iterations) };

    let (log_likelihood, prof) =
        design.log_likelihood(gamma, method).ok_or(MixedModelError::NoConvergence("degenerate fit at estimate"))?;
    let n = design.n as f64;
    let sigma2_within = prof.rss / if method == EstimationMethod::Reml { n - 2.0 } else { n };
    let sigma2_between = gamma * sigma2_within;
    let [a, b, d] = prof.xtwx;
    let inv = inverse_2x2(a, b, d).ok_or(MixedModelError::ConstantWave)?;
    let var_b1 = sigma2_within * inv[1][1];
    let cov = sigma2_within * inv[0][1];
    let var_a = sigma2_within * inv[0][0];
    let beta1 = prof.beta[1];
    let beta0 = prof.beta[0] + design.y_mean - beta1 * design.x_mean;
    let var_b0 = var_a + design.x_mean * design.x_mean * var_b1 - 2.0 * design.x_mean * cov;

    let null_ll = ll(0.0);
    let lrt = (2.0 * (log_likelihood - null_ll)).max(0.0);
    let between_p_value = if gamma == 0.0 { 1.0 } else { 0.5 * chi2_1_sf(lrt) };
    let k = PARAMETER_COUNT as f64;
    Ok(MixedModelFit {
        method,
        intercept: FixedEffect::new(beta0, var_b0),
        wave: FixedEffect::new(beta1, var_b1),
        sigma2_between,
        sigma2_within,
        between_p_value,
        gamma,
        log_likelihood,
        aic: 2.0 * k - 2.0 * log_likelihood,
        bic: k * log(n) - 2.0 * log_likelihood,
        observations: design.n,
        individuals: design.groups.len(),
        convergence: Convergence { iterations, gradient: grad(gamma), boundary: gamma == 0.0 },
    })
}

/// Full (unprofiled) log-likelihood of the model at arbitrary parameters.
/// Used to check that a fit is a local optimum.
pub fn log_likelihood_at(
    obs: &[Observation],
    beta0: f64,
    beta1: f64,
    sigma2_between: f64,
    sigma2_within: f64,
) -> f64 {
    let mut by_id: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for o in obs {
        by_id.entry(o.individual.as_str()).or_default().push(o.y - beta0 - beta1 * o.wave);
    }
    let gamma = sigma2_between / sigma2_within;
    let mut ll = 0.0;
    for r in by_id.values() {
        let ni = r.len() as f64;
        let q = 1.0 + ni * gamma;
        let s: f64 = r.iter().sum();
        let ss: f64 = r.iter().map(|x| x * x).sum();
        let quad = (ss - gamma / q * s * s) / sigma2_within;
        ll += -0.5 * (ni * log(2.0 * PI * sigma2_within) + log(q) + quad);
    }
    ll
}
