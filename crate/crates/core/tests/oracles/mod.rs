//! Independent reference computations shared by the test suites.
#![allow(dead_code)]

use argmove_core::corpus::AnnotatedMove;
use argmove_core::evaluation::LabelCounts;
use argmove_core::stats::Observation;
use argmove_core::{CandidateLabel, MoveLabel};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn random_partition(rng: &mut ChaCha8Rng, len: usize) -> Vec<AnnotatedMove> {
    let mut cuts: Vec<usize> = (1..len).filter(|_| rng.random_bool(0.3)).collect();
    cuts.push(len);
    let mut start = 0;
    cuts.into_iter()
        .map(|end| {
            let label = MoveLabel::ALL[rng.random_range(0..MoveLabel::ALL.len())];
            let m = AnnotatedMove::new(start, end, label);
            start = end;
            m
        })
        .collect()
}

/// Every predicted move is compared with every gold move.
pub fn brute_force_moves(pred: &[AnnotatedMove], gold: &[AnnotatedMove]) -> [LabelCounts; 9] {
    let mut out = [LabelCounts::default(); 9];
    for p in pred {
        let hit = gold.iter().any(|g| g.span.start == p.span.start && g.span.end == p.span.end && g.label == p.label);
        let slot = &mut out[CandidateLabel::from(p.label).index()];
        if hit {
            slot.true_positives += 1;
        } else {
            slot.false_positives += 1;
        }
    }
    for g in gold {
        let hit = pred.iter().any(|p| p.span == g.span && p.label == g.label);
        if !hit {
            out[CandidateLabel::from(g.label).index()].false_negatives += 1;
        }
    }
    out
}

pub fn brute_force_labels(pred: &[CandidateLabel], gold: &[CandidateLabel]) -> [LabelCounts; 9] {
    let mut out = [LabelCounts::default(); 9];
    for (k, label) in CandidateLabel::ALL.iter().enumerate() {
        for i in 0..pred.len() {
            let (p, g) = (pred[i] == *label, gold[i] == *label);
            out[k].true_positives += (p && g) as u64;
            out[k].false_positives += (p && !g) as u64;
            out[k].false_negatives += (!p && g) as u64;
        }
    }
    out
}

pub fn scatter_oracle(groups: &[Vec<Vec<f64>>]) -> (DMatrix<f64>, DMatrix<f64>) {
    let p = groups[0][0].len();
    let all: Vec<&Vec<f64>> = groups.iter().flatten().collect();
    let n = all.len() as f64;
    let grand = DMatrix::from_fn(p, 1, |i, _| all.iter().map(|r| r[i]).sum::<f64>() / n);
    let mut e = DMatrix::zeros(p, p);
    let mut h = DMatrix::zeros(p, p);
    for g in groups {
        let mean = DMatrix::from_fn(p, 1, |i, _| g.iter().map(|r| r[i]).sum::<f64>() / g.len() as f64);
        for r in g {
            let d = DMatrix::from_fn(p, 1, |i, _| r[i]) - &mean;
            e += &d * d.transpose();
        }
        let d = &mean - &grand;
        h += (&d * d.transpose()) * g.len() as f64;
    }
    (e, h)
}

pub fn random_groups(rng: &mut ChaCha8Rng, k: usize, p: usize, n: usize) -> Vec<Vec<Vec<f64>>> {
    (0..k)
        .map(|g| (0..n).map(|_| (0..p).map(|v| rng.random_range(-1.0..1.0) + 0.3 * (g * v) as f64).collect()).collect())
        .collect()
}

/// Closed-form ML estimates for a balanced random-intercept design where
/// every individual is seen at the same waves.
pub struct BalancedOracle {
    pub beta0: f64,
    pub beta1: f64,
    pub sigma2_u: f64,
    pub sigma2_e: f64,
    pub se_beta1: f64,
    pub se_beta0: f64,
}

pub fn balanced_oracle(y: &[Vec<f64>], waves: &[f64]) -> BalancedOracle {
    let m = y.len() as f64;
    let n = waves.len() as f64;
    let wbar = waves.iter().sum::<f64>() / n;
    let sww: f64 = waves.iter().map(|w| (w - wbar).powi(2)).sum();
    let ybar = y.iter().flatten().sum::<f64>() / (m * n);
    let mut sxy = 0.0;
    for row in y {
        for (w, v) in waves.iter().zip(row) {
            sxy += (w - wbar) * (v - ybar);
        }
    }
    let beta1 = sxy / (m * sww);
    let beta0 = ybar - beta1 * wbar;
    let mut ssw = 0.0;
    let mut ssb = 0.0;
    for row in y {
        let r: Vec<f64> = waves.iter().zip(row).map(|(w, v)| v - beta0 - beta1 * w).collect();
        let rbar = r.iter().sum::<f64>() / n;
        ssw += r.iter().map(|x| (x - rbar).powi(2)).sum::<f64>();
        ssb += n * rbar * rbar;
    }
    let mut sigma2_e = ssw / (m * (n - 1.0));
    let lambda = ssb / m;
    let mut sigma2_u = (lambda - sigma2_e) / n;
    if sigma2_u < 0.0 {
        sigma2_u = 0.0;
        sigma2_e = (ssw + ssb) / (m * n);
    }
    let var_b1 = sigma2_e / (m * sww);
    let var_mean = (sigma2_e + n * sigma2_u) / (m * n);
    BalancedOracle {
        beta0,
        beta1,
        sigma2_u,
        sigma2_e,
        se_beta1: var_b1.sqrt(),
        se_beta0: (var_mean + wbar * wbar * var_b1).sqrt(),
    }
}

pub fn balanced_data(seed: u64, m: usize, sigma_u: f64, sigma_e: f64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let waves: Vec<f64> = (1..=12).map(f64::from).collect();
    let u = Normal::new(0.0, sigma_u.max(1e-300)).unwrap();
    let e = Normal::new(0.0, sigma_e).unwrap();
    let y = (0..m)
        .map(|_| {
            let ui = if sigma_u > 0.0 { u.sample(&mut rng) } else { 0.0 };
            waves.iter().map(|w| 50.0 + 1.3 * w + ui + e.sample(&mut rng)).collect()
        })
        .collect();
    (y, waves)
}

pub fn to_obs(y: &[Vec<f64>], waves: &[f64]) -> Vec<Observation> {
    y.iter()
        .enumerate()
        .flat_map(|(i, row)| waves.iter().zip(row).map(move |(w, v)| Observation::new(format!("s{i}"), *w, *v)))
        .collect()
}
