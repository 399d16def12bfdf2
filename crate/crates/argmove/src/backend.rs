//! Classifier backends selectable from configuration.

use std::path::PathBuf;
use std::time::Duration;

use argmove_core::labeler::{BaselineModel, Classifier, ClassifyError, LabelDistribution, ModifiedEssay, OracleClassifier};
use argmove_core::pipeline::{prepare_example, PipelineError};
use argmove_core::segmenter::AlignOptions;
use argmove_core::SegmentationRules;
use serde::{Deserialize, Serialize};

use crate::format::{self, FileError};
use crate::remote::{RemoteClassifier, RemoteConfig, ENDPOINT_ENV};

fn default_timeout() -> f64 {
    30.0
}

fn default_retries() -> u32 {
    3
}

fn default_concurrency() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BackendDescriptor {
    /// A trained baseline model file.
    Baseline {
        model: PathBuf,
        #[serde(default)]
        char_budget: Option<usize>,
    },
    /// A classifier service. `ARGMOVE_BACKEND_URL` replaces the endpoint.
    Remote {
        #[serde(default)]
        endpoint: Option<String>,
        #[serde(default = "default_timeout")]
        timeout_secs: f64,
        #[serde(default = "default_retries")]
        retries: u32,
        #[serde(default = "default_concurrency")]
        concurrency: usize,
        #[serde(default)]
        char_budget: Option<usize>,
    },
    /// Gold candidate labels from an annotated corpus.
    Oracle { gold: PathBuf },
}

impl BackendDescriptor {
    pub fn remote(endpoint: Option<String>) -> BackendDescriptor {
        BackendDescriptor::Remote {
            endpoint,
            timeout_secs: default_timeout(),
            retries: default_retries(),
            concurrency: default_concurrency(),
            char_budget: None,
        }
    }

    pub fn char_budget(&self) -> Option<usize> {
        match self {
            BackendDescriptor::Baseline { char_budget, .. } | BackendDescriptor::Remote { char_budget, .. } => {
                *char_budget
            }
            BackendDescriptor::Oracle { .. } => None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error(transparent)]
    File(#[from] FileError),
    #[error("oracle gold corpus: {0}")]
    Gold(#[from] PipelineError),
    #[error("remote backend needs an endpoint (config, --endpoint or {ENDPOINT_ENV})")]
    NoEndpoint,
    #[error("remote backend: timeout must be positive")]
    Timeout,
}

#[derive(Debug)]
pub enum Backend {
    Baseline(BaselineModel),
    Remote(RemoteClassifier),
    Oracle(OracleClassifier),
}

impl Classifier for Backend {
    fn classify(&self, context: &ModifiedEssay) -> Result<Vec<LabelDistribution>, ClassifyError> {
        match self {
            Backend::Baseline(m) => m.classify(context),
            Backend::Remote(r) => r.classify(context),
            Backend::Oracle(o) => o.classify(context),
        }
    }
}

/// Endpoint precedence: explicit value, then the environment, then the
/// configured one.
pub fn resolve_endpoint(explicit: Option<String>, configured: Option<String>) -> Option<String> {
    explicit.or_else(|| std::env::var(ENDPOINT_ENV).ok().filter(|s| !s.is_empty())).or(configured)
}

pub fn load(
    descriptor: &BackendDescriptor,
    rules: &SegmentationRules,
    align: AlignOptions,
) -> Result<Backend, BackendError> {
    match descriptor {
        BackendDescriptor::Baseline { model, .. } => {
            let m = format::open(model).and_then(format::read_model).map_err(|e| e.in_file(model))?;
            Ok(Backend::Baseline(m))
        }
        BackendDescriptor::Remote { endpoint, timeout_secs, retries, concurrency, .. } => {
            let endpoint = resolve_endpoint(None, endpoint.clone()).ok_or(BackendError::NoEndpoint)?;
            if !(timeout_secs.is_finite() && *timeout_secs > 0.0) {
                return Err(BackendError::Timeout);
            }
            let config = RemoteConfig {
                timeout: Duration::from_secs_f64(*timeout_secs),
                retries: *retries,
                concurrency: *concurrency,
                ..RemoteConfig::new(endpoint)
            };
            Ok(Backend::Remote(RemoteClassifier::new(config)))
        }
        BackendDescriptor::Oracle { gold } => {
            let mut oracle = OracleClassifier::new();
            for e in format::read_corpus_file(gold)? {
                let prepared = prepare_example(&e, rules, align)?;
                oracle.insert(e.essay().essay_id(), prepared.example.labels);
            }
            Ok(Backend::Oracle(oracle))
        }
    }
}
