use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::label::CandidateLabel;

use super::features::{FeatureConfig, FeatureExtractor};
use super::{Classifier, ClassifyError, LabelDistribution, ModifiedEssay};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

const K: usize = CandidateLabel::COUNT;

/// One essay's candidates with their gold candidate labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub context: ModifiedEssay,
    pub labels: Vec<CandidateLabel>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default))]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// L2 penalty on the weights (not the bias).
    pub l2: f64,
    /// Shuffles mini-batches; unused for full-batch training.
    pub seed: u64,
    /// `None` trains full-batch.
    pub batch_size: Option<usize>,
    pub features: FeatureConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 300,
            learning_rate: 2.0,
            l2: 1e-4,
            seed: 0,
            batch_size: None,
            features: FeatureConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct TrainingMetadata {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub batch_size: Option<usize>,
    pub seed: u64,
    /// Mean penalized cross-entropy before each epoch's updates.
    pub loss_history: Vec<f64>,
    /// Mean penalized cross-entropy of the returned weights.
    pub final_loss: f64,
}

/// Linear layer plus softmax over the nine candidate labels.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct BaselineModel {
    pub features: FeatureConfig,
    /// Row-major, `CandidateLabel::COUNT` rows of `dim` columns.
    pub weights: Vec<f64>,
    pub bias: [f64; K],
    pub metadata: TrainingMetadata,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error("no training examples")]
    Empty,
    #[error("essay {essay_id}: {labels} labels for {candidates} candidates")]
    LengthMismatch { essay_id: String, candidates: usize, labels: usize },
    #[error("invalid training configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("training diverged at epoch {0} (non-finite loss)")]
    Diverged(usize),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("weights have {got} entries, expected {expected}")]
    Shape { expected: usize, got: usize },
    #[error("non-finite weight")]
    NonFinite,
}

// Sparse row: (column, value) for non-zero features.
type Row = Vec<(u32, f64)>;

fn sparse(v: &[f64]) -> Row {
    v.iter().enumerate().filter(|(_, x)| **x != 0.0).map(|(i, x)| (i as u32, *x)).collect()
}

impl BaselineModel {
    /// All-zero weights: every prediction is uniform.
    pub fn zeros(features: FeatureConfig) -> Self {
        let dim = FeatureExtractor::new(features.clone()).dim();
        BaselineModel { features, weights: vec![0.0; K * dim], bias: [0.0; K], metadata: TrainingMetadata::default() }
    }

    pub fn dim(&self) -> usize {
        self.weights.len() / K
    }

    /// Checks shape and finiteness, e.g. after loading from disk.
    pub fn validate(&self) -> Result<(), ModelError> {
        let expected = K * FeatureExtractor::new(self.features.clone()).dim();
        if self.weights.len() != expected {
            return Err(ModelError::Shape { expected, got: self.weights.len() });
        }
        if self.weights.iter().chain(&self.bias).any(|w| !w.is_finite()) {
            return Err(ModelError::NonFinite);
        }
        Ok(())
    }

    fn logits_sparse(&self, row: &[(u32, f64)]) -> [f64; K] {
        let dim = self.dim();
        let mut z = self.bias;
        for (k, zk) in z.iter_mut().enumerate() {
            let w = &self.weights[k * dim..(k + 1) * dim];
            for &(j, x) in row {
                *zk += w[j as usize] * x;
            }
        }
        z
    }

    /// Logits for a dense feature vector.
    pub fn logits(&self, x: &[f64]) -> [f64; K] {
        self.logits_sparse(&sparse(x))
    }

    /// Greedy left-to-right prediction, feeding each predicted label into the
    /// next candidate's previous-label features.
    pub fn predict(&self, context: &ModifiedEssay) -> Vec<LabelDistribution> {
        let fx = FeatureExtractor::new(self.features.clone());
        let mut prev = None;
        fx.static_features(context)
            .into_iter()
            .map(|s| {
                let mut v = s.values;
                fx.set_previous(&mut v, prev);
                let d = LabelDistribution::from_logits(&self.logits(&v));
                prev = Some(d.argmax());
                d
            })
            .collect()
    }
}

impl Classifier for BaselineModel {
    fn classify(&self, context: &ModifiedEssay) -> Result<Vec<LabelDistribution>, ClassifyError> {
        Ok(self.predict(context))
    }
}

struct Batch<'a> {
    rows: &'a [Row],
    targets: &'a [usize],
}

/// Mean cross-entropy over `idx` plus the L2 term, with the gradient
/// accumulated into `grad_w` / `grad_b` when given.
fn loss_and_grad(
    model: &BaselineModel,
    data: &Batch<'_>,
    idx: &[usize],
    l2: f64,
    mut grad: Option<(&mut [f64], &mut [f64; K])>,
) -> f64 {
    let dim = model.dim();
    let scale = 1.0 / idx.len() as f64;
    let mut loss = 0.0;
    for &r in idx {
        let row = &data.rows[r];
        let d = LabelDistribution::from_logits(&model.logits_sparse(row));
        let p = d.probabilities();
        let y = data.targets[r];
        loss -= libm::log(p[y].max(f64::MIN_POSITIVE));
        if let Some((gw, gb)) = grad.as_mut() {
            for k in 0..K {
                let diff = (p[k] - if k == y { 1.0 } else { 0.0 }) * scale;
                gb[k] += diff;
                let g = &mut gw[k * dim..(k + 1) * dim];
                for &(j, x) in row {
                    g[j as usize] += diff * x;
                }
            }
        }
    }
    let sq: f64 = model.weights.iter().map(|w| w * w).sum();
    if let Some((gw, _)) = grad.as_mut() {
        for (g, w) in gw.iter_mut().zip(&model.weights) {
            *g += l2 * w;
        }
    }
    loss * scale + 0.5 * l2 * sq
}

/// Fits the linear-softmax head by gradient descent on cross-entropy,
/// starting from all-zero weights. Previous-label features are
/// teacher-forced from the gold labels.
pub fn train_baseline(examples: &[TrainingExample], config: &TrainConfig) -> Result<BaselineModel, TrainError> {
    if examples.is_empty() {
        return Err(TrainError::Empty);
    }
    if !(config.learning_rate.is_finite() && config.learning_rate > 0.0) {
        return Err(TrainError::InvalidConfig("learning_rate must be positive"));
    }
    if !(config.l2.is_finite() && config.l2 >= 0.0) {
        return Err(TrainError::InvalidConfig("l2 must be non-negative"));
    }
    if config.batch_size == Some(0) {
        return Err(TrainError::InvalidConfig("batch_size must be positive"));
    }
    for ex in examples {
        if ex.labels.len() != ex.context.len() {
            return Err(TrainError::LengthMismatch {
                essay_id: ex.context.essay_id.clone(),
                candidates: ex.context.len(),
                labels: ex.labels.len(),
            });
        }
    }

    let fx = FeatureExtractor::new(config.features.clone());
    let mut rows = Vec::new();
    let mut targets = Vec::new();
    for ex in examples {
        for (v, y) in fx.features(&ex.context, &ex.labels).iter().zip(&ex.labels) {
            rows.push(sparse(v));
            targets.push(y.index());
        }
    }
    if rows.is_empty() {
        return Err(TrainError::Empty);
    }
    let data = Batch { rows: &rows, targets: &targets };

    let mut model = BaselineModel::zeros(config.features.clone());
    let dim = model.dim();
    let mut grad_w = vec![0.0; K * dim];
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let batch = config.batch_size.unwrap_or(order.len()).min(order.len());
        if config.batch_size.is_some() {
            order.shuffle(&mut rng);
        }
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(batch) {
            grad_w.fill(0.0);
            let mut grad_b = [0.0; K];
            let loss = loss_and_grad(&model, &data, chunk, config.l2, Some((&mut grad_w, &mut grad_b)));
            if !loss.is_finite() {
                return Err(TrainError::Diverged(epoch));
            }
            epoch_loss += loss;
            batches += 1;
            for (w, g) in model.weights.iter_mut().zip(&grad_w) {
                *w -= config.learning_rate * g;
            }
            for (b, g) in model.bias.iter_mut().zip(&grad_b) {
                *b -= config.learning_rate * g;
            }
        }
        history.push(epoch_loss / batches as f64);
    }

    let all: Vec<usize> = (0..rows.len()).collect();
    let final_loss = loss_and_grad(&model, &data, &all, config.l2, None);
    if !final_loss.is_finite() {
        return Err(TrainError::Diverged(config.epochs));
    }
    model.metadata = TrainingMetadata {
        epochs: config.epochs,
        learning_rate: config.learning_rate,
        l2: config.l2,
        batch_size: config.batch_size,
        seed: config.seed,
        loss_history: history,
        final_loss,
    };
    Ok(model)
}
