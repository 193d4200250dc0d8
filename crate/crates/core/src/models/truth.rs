use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::{gamma_rate, normal, poisson};
use crate::data::{Dataset, GroupedDataset, IidDataset};
use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// A data-generating distribution for simulation studies.
///
/// Flat families draw `n` iid observations. The hierarchical family draws
/// `n` groups of `per_group` observations each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum TruthSpec {
    Poisson {
        rate: f64,
    },
    /// Mean `mean`, variance `mean + mean²/dispersion`.
    NegBin {
        mean: f64,
        dispersion: f64,
    },
    Binomial {
        trials: u64,
        prob: f64,
    },
    Normal {
        mean: f64,
        sd: f64,
    },
    /// Failures before the first success, success probability `prob`.
    Geometric {
        prob: f64,
    },
    Hierarchical {
        scenario: HierScenario,
        per_group: usize,
    },
}

/// Group-level scenarios for the two-level normal simulations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HierScenario {
    /// `η ~ N(0, 1)`, `X | η ~ N(η, 4)`: the well-specified case.
    S1,
    /// `η ~ Gam(0.6, rate 0.2)`, `X | η ~ N(η, 4)`.
    S2,
    /// `η ~ N(0, 1)`, `X | η ~ N(η, 8)`.
    S3,
    /// `η ~ N(0, 1)`, `ln X | η ~ N(η, 4)`.
    S4,
}

impl TruthSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            TruthSpec::Poisson { rate } => rate > 0.0 && rate.is_finite(),
            TruthSpec::NegBin { mean, dispersion } => {
                mean > 0.0 && dispersion > 0.0 && mean.is_finite() && dispersion.is_finite()
            }
            TruthSpec::Binomial { trials, prob } => trials > 0 && (0.0..=1.0).contains(&prob),
            TruthSpec::Normal { mean, sd } => mean.is_finite() && sd > 0.0 && sd.is_finite(),
            TruthSpec::Geometric { prob } => prob > 0.0 && prob <= 1.0,
            TruthSpec::Hierarchical { per_group, .. } => per_group > 0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid truth {self:?}")))
        }
    }

    pub fn is_grouped(&self) -> bool {
        matches!(self, TruthSpec::Hierarchical { .. })
    }
}

/// Draws a dataset of size `n` (groups, for the hierarchical family).
pub fn sample_truth(truth: &TruthSpec, n: usize, rng: &mut StreamRng) -> Result<Dataset> {
    truth.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter("cannot draw an empty dataset".into()));
    }
    let values: Vec<f64> = match *truth {
        TruthSpec::Poisson { rate } => (0..n).map(|_| poisson(rng, rate)).collect(),
        TruthSpec::NegBin { mean, dispersion } => (0..n)
            .map(|_| {
                let lambda = gamma_rate(rng, dispersion, dispersion / mean);
                poisson(rng, lambda)
            })
            .collect(),
        TruthSpec::Binomial { trials, prob } => {
            let dist = Binomial::new(trials, prob).map_err(|e| Error::InvalidParameter(format!("binomial: {e}")))?;
            (0..n).map(|_| dist.sample(rng) as f64).collect()
        }
        TruthSpec::Normal { mean, sd } => (0..n).map(|_| normal(rng, mean, sd)).collect(),
        TruthSpec::Geometric { prob } => {
            let dist =
                rand_distr::Geometric::new(prob).map_err(|e| Error::InvalidParameter(format!("geometric: {e}")))?;
            (0..n).map(|_| dist.sample(rng) as f64).collect()
        }
        TruthSpec::Hierarchical { scenario, per_group } => {
            let groups = (0..n).map(|_| hier_group(scenario, per_group, rng)).collect();
            return Ok(Dataset::Grouped(GroupedDataset::new(groups)?));
        }
    };
    Ok(Dataset::Iid(IidDataset::new(values)?))
}

fn hier_group(scenario: HierScenario, size: usize, rng: &mut StreamRng) -> Vec<f64> {
    let eta = match scenario {
        HierScenario::S2 => gamma_rate(rng, 0.6, 0.2),
        _ => normal(rng, 0.0, 1.0),
    };
    let sd = match scenario {
        HierScenario::S3 => 8f64.sqrt(),
        _ => 2.0,
    };
    (0..size)
        .map(|_| {
            let x = normal(rng, eta, sd);
            if scenario == HierScenario::S4 {
                x.exp()
            } else {
                x
            }
        })
        .collect()
}
