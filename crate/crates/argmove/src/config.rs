//! Run configuration from a TOML file. Command-line flags override it.
//!
//! ```toml
//! jobs = 4
//! format = "tsv"
//!
//! [segmentation]
//! terminators = [".", "!", "?", ";", ":", ","]
//! title_rule = true
//!
//! [align]
//! snap = false
//!
//! [backend]
//! kind = "remote"
//! endpoint = "http://127.0.0.1:8080/classify"
//! retries = 3
//!
//! [train]
//! epochs = 300
//! learning_rate = 2.0
//!
//! [split]
//! ratios = [0.7, 0.15, 0.15]
//! seed = 1
//! strategy = "by-essay"
//!
//! [analysis]
//! scale = "percent"
//! method = "ml"
//! ```

use std::path::{Path, PathBuf};

use argmove_core::corpus::SplitStrategy;
use argmove_core::labeler::TrainConfig;
use argmove_core::stats::{EstimationMethod, RatioScale};
use argmove_core::SegmentationRules;
use serde::{Deserialize, Serialize};

use crate::backend::BackendDescriptor;
use crate::report::ReportFormat;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlignConfig {
    pub snap: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub ratios: [f64; 3],
    pub seed: u64,
    pub strategy: SplitStrategy,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { ratios: [0.70, 0.15, 0.15], seed: 0, strategy: SplitStrategy::ByEssay }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub scale: Option<RatioScale>,
    pub method: EstimationMethod,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Worker threads for per-essay stages; 0 uses all cores.
    pub jobs: usize,
    pub format: ReportFormat,
    pub segmentation: SegmentationRules,
    pub align: AlignConfig,
    pub backend: Option<BackendDescriptor>,
    pub train: TrainConfig,
    pub split: SplitConfig,
    pub analysis: AnalysisConfig,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Parse { path: PathBuf, source: Box<toml::de::Error> },
    #[error("segmentation: {0}")]
    Rules(#[from] argmove_core::segmenter::RulesError),
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        let cfg = RunConfig::parse(&text).map_err(|e| ConfigError::Parse { path: path.into(), source: Box::new(e) })?;
        cfg.segmentation.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_example_parses() {
        let doc: String = include_str!("config.rs")
            .lines()
            .skip_while(|l| !l.starts_with("//! ```toml"))
            .skip(1)
            .take_while(|l| !l.starts_with("//! ```"))
            .map(|l| l.trim_start_matches("//!").trim_start())
            .collect::<Vec<_>>()
            .join("\n");
        let cfg = RunConfig::parse(&doc).unwrap();
        assert_eq!(cfg.jobs, 4);
        assert_eq!(cfg.format, ReportFormat::Tsv);
        assert_eq!(cfg.train.epochs, 300);
        assert_eq!(cfg.analysis.scale, Some(RatioScale::Percent));
        assert!(matches!(cfg.backend, Some(BackendDescriptor::Remote { retries: 3, .. })));
        assert_eq!(cfg.segmentation.terminators.len(), 6);
    }

    #[test]
    fn empty_file_is_all_defaults() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
        assert!(RunConfig::parse("bogus = 1").is_err());
    }
}
