use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::checks::MethodSpec;
use crate::error::{Error, Result};
use crate::models::{ModelSpec, TruthSpec};
use crate::statistics::StatisticKind;

/// Smallest replication count an experiment accepts.
pub const MIN_REPLICATIONS: usize = 50;

/// A data-generating distribution with the name it carries in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabeledTruth {
    pub label: String,
    pub spec: TruthSpec,
}

/// A Monte Carlo study: every combination of truth, sample size, statistic
/// and method is a cell, replicated `replications` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    /// Typically a well-specified null and one or more alternatives.
    pub truths: Vec<LabeledTruth>,
    pub statistics: Vec<StatisticKind>,
    pub methods: Vec<MethodSpec>,
    /// Sample sizes; the number of groups for a hierarchical truth.
    pub n_grid: Vec<usize>,
    pub replications: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub master_seed: u64,
    /// Output directory; the command line `--out` takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Worker threads. Results do not depend on it.
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    /// Reject on the one-sided p-value instead of the two-sided one.
    #[serde(default)]
    pub one_sided: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segmentation: Option<SegmentationConfig>,
}

/// A segmentation study: one large dataset from `truth`, permuted and cut
/// into segments of each size in `n_sub`, every segment checked by every
/// statistic and method of the experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentationConfig {
    pub truth: LabeledTruth,
    pub n_total: usize,
    pub n_sub: Vec<usize>,
}

fn default_alpha() -> f64 {
    0.05
}

fn default_parallelism() -> usize {
    1
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.replications < MIN_REPLICATIONS {
            return bad(format!("replications must be at least {MIN_REPLICATIONS}, got {}", self.replications));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.truths.is_empty() || self.statistics.is_empty() || self.methods.is_empty() || self.n_grid.is_empty() {
            return bad("truths, statistics, methods and n_grid must all be nonempty".into());
        }
        if self.parallelism == 0 {
            return bad("parallelism must be at least 1".into());
        }
        if let Some(n) = self.n_grid.iter().find(|&&n| n < 2) {
            return bad(format!("sample sizes must be at least 2, got {n}"));
        }
        self.model.build()?;
        let mut labels = HashSet::new();
        for t in self.truths.iter().chain(self.segmentation.as_ref().map(|s| &s.truth)) {
            t.spec.validate()?;
            if t.spec.is_grouped() != self.model.is_grouped() {
                return bad(format!("truth {:?} and model {} disagree on grouping", t.label, self.model));
            }
        }
        for t in &self.truths {
            if !labels.insert(t.label.as_str()) {
                return bad(format!("duplicate truth label {:?}", t.label));
            }
        }
        for m in &self.methods {
            m.validate()?;
        }
        if let Some(seg) = &self.segmentation {
            if seg.truth.spec.is_grouped() {
                return bad("segmentation needs an exchangeable truth".into());
            }
            if seg.n_sub.is_empty() {
                return bad("segmentation n_sub must be nonempty".into());
            }
            if let Some(n) = seg.n_sub.iter().find(|&&n| n == 0 || 2 * n > seg.n_total) {
                return bad(format!("segment size {n} must lie in [1, n_total/2]"));
            }
        }
        Ok(())
    }
}
