use serde::{Deserialize, Serialize};

use super::{inv_gamma, normal, PosteriorModel, ReplicateShape};
use crate::data::{Dataset, GroupedDataset};
use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// Two-level normal model: `X_ij | η_i ~ N(η_i, obs_var)`,
/// `η_i | μ₀, σ₀² ~ N(μ₀, σ₀²)`, with the improper hyperprior
/// `h(μ₀, σ₀²) = σ₀⁻²` unless `hyperprior` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianHierarchical {
    pub obs_var: f64,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "default_thinning")]
    pub thinning: usize,
    #[serde(default)]
    pub hyperprior: Option<HyperPrior>,
}

fn default_burn_in() -> usize {
    1000
}

fn default_thinning() -> usize {
    1
}

/// Proper hyperprior `μ₀ ~ N(mean, sd²)`, `σ₀² ~ IG(shape, scale)`.
/// Mainly useful for validating the sampler by forward simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperPrior {
    pub mean: f64,
    pub sd: f64,
    pub shape: f64,
    pub scale: f64,
}

/// One state of the chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierDraw {
    pub mu0: f64,
    pub sigma0_sq: f64,
    pub eta: Vec<f64>,
}

/// Per-group sizes and means, all the sampler needs from the data.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummaries {
    pub sizes: Vec<f64>,
    pub means: Vec<f64>,
}

impl GroupSummaries {
    pub fn from_groups(data: &GroupedDataset) -> Self {
        Self { sizes: data.group_sizes().iter().map(|&s| s as f64).collect(), means: data.group_means() }
    }

    pub fn n_groups(&self) -> usize {
        self.means.len()
    }
}

impl GaussianHierarchical {
    pub fn new(obs_var: f64) -> Result<Self> {
        let m = Self { obs_var, burn_in: default_burn_in(), thinning: default_thinning(), hyperprior: None };
        m.validate()?;
        Ok(m)
    }

    pub fn with_chain(mut self, burn_in: usize, thinning: usize) -> Result<Self> {
        self.burn_in = burn_in;
        self.thinning = thinning;
        self.validate()?;
        Ok(self)
    }

    pub fn with_hyperprior(mut self, prior: HyperPrior) -> Result<Self> {
        self.hyperprior = Some(prior);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.obs_var > 0.0 && self.obs_var.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "observation variance must be positive, got {}",
                self.obs_var
            )));
        }
        if self.thinning == 0 {
            return Err(Error::InvalidParameter("thinning must be at least 1".into()));
        }
        if let Some(h) = self.hyperprior {
            if !(h.sd > 0.0 && h.shape > 0.0 && h.scale > 0.0) {
                return Err(Error::InvalidParameter(format!("bad hyperprior {h:?}")));
            }
        }
        Ok(())
    }

    /// Starting state: grand mean, variance of the group means, group means.
    pub fn initial_state(&self, data: &GroupedDataset) -> HierDraw {
        let means = data.group_means();
        let flat = data.flatten();
        let grand = flat.iter().sum::<f64>() / flat.len() as f64;
        let i = means.len() as f64;
        let mbar = means.iter().sum::<f64>() / i;
        let between = means.iter().map(|m| (m - mbar).powi(2)).sum::<f64>() / (i - 1.0);
        HierDraw { mu0: grand, sigma0_sq: if between > 0.0 && between.is_finite() { between } else { 1.0 }, eta: means }
    }

    /// Redraws every `η_i` from its full conditional.
    pub fn sample_eta(&self, stats: &GroupSummaries, state: &mut HierDraw, rng: &mut StreamRng) {
        let prior_prec = 1.0 / state.sigma0_sq;
        for ((eta, &j), &ybar) in state.eta.iter_mut().zip(&stats.sizes).zip(&stats.means) {
            let lik_prec = j / self.obs_var;
            let prec = lik_prec + prior_prec;
            let mean = (lik_prec * ybar + prior_prec * state.mu0) / prec;
            *eta = normal(rng, mean, prec.sqrt().recip());
        }
    }

    /// Redraws `μ₀` and then `σ₀²` given the group effects.
    pub fn sample_hyper(&self, state: &mut HierDraw, rng: &mut StreamRng) {
        let i = state.eta.len() as f64;
        let sum: f64 = state.eta.iter().sum();
        state.mu0 = match self.hyperprior {
            None => normal(rng, sum / i, (state.sigma0_sq / i).sqrt()),
            Some(h) => {
                let prec = i / state.sigma0_sq + h.sd.powi(-2);
                let mean = (sum / state.sigma0_sq + h.mean / (h.sd * h.sd)) / prec;
                normal(rng, mean, prec.sqrt().recip())
            }
        };
        let ss: f64 = state.eta.iter().map(|e| (e - state.mu0).powi(2)).sum();
        let (shape, scale) = match self.hyperprior {
            None => (i / 2.0, ss / 2.0),
            Some(h) => (h.shape + i / 2.0, h.scale + ss / 2.0),
        };
        state.sigma0_sq = inv_gamma(rng, shape, scale);
    }

    /// One full sweep: `η`, then `μ₀`, then `σ₀²`.
    pub fn sweep(&self, stats: &GroupSummaries, state: &mut HierDraw, rng: &mut StreamRng) -> Result<()> {
        self.sample_eta(stats, state, rng);
        self.sample_hyper(state, rng);
        if !(state.mu0.is_finite() && state.sigma0_sq.is_finite() && state.sigma0_sq > 0.0)
            || state.eta.iter().any(|e| !e.is_finite())
        {
            return Err(Error::NonFiniteDraw(format!(
                "hierarchical chain reached mu0={}, sigma0_sq={}",
                state.mu0, state.sigma0_sq
            )));
        }
        Ok(())
    }

    /// Runs the chain from `initial_state`: `burn_in` sweeps, then keeps
    /// every `thinning`-th state until `n_draws` are collected.
    pub fn gibbs(&self, data: &GroupedDataset, n_draws: usize, rng: &mut StreamRng) -> Result<Vec<HierDraw>> {
        self.validate()?;
        if data.n_groups() < 3 {
            return Err(Error::InsufficientData(format!(
                "the hierarchical model needs at least 3 groups, got {}",
                data.n_groups()
            )));
        }
        let stats = GroupSummaries::from_groups(data);
        let mut state = self.initial_state(data);
        for _ in 0..self.burn_in {
            self.sweep(&stats, &mut state, rng)?;
        }
        let mut draws = Vec::with_capacity(n_draws);
        while draws.len() < n_draws {
            for _ in 0..self.thinning {
                self.sweep(&stats, &mut state, rng)?;
            }
            draws.push(state.clone());
        }
        Ok(draws)
    }
}

impl PosteriorModel for GaussianHierarchical {
    type Param = HierDraw;

    fn name(&self) -> &'static str {
        "gaussian_hier"
    }

    fn check_data(&self, data: &Dataset) -> Result<()> {
        if data.as_grouped().is_none() {
            return Err(Error::ShapeMismatch("the hierarchical model needs grouped data".into()));
        }
        Ok(())
    }

    fn sample_posterior(&self, data: &Dataset, n_draws: usize, rng: &mut StreamRng) -> Result<Vec<HierDraw>> {
        self.check_data(data)?;
        self.gibbs(data.as_grouped().expect("checked"), n_draws, rng)
    }

    fn sample_predictive(&self, theta: &HierDraw, target: &ReplicateShape, rng: &mut StreamRng) -> Result<Dataset> {
        let ReplicateShape::Grouped(targets) = target else {
            return Err(Error::ShapeMismatch("the hierarchical model replicates grouped data only".into()));
        };
        let obs_sd = self.obs_var.sqrt();
        let new_sd = theta.sigma0_sq.sqrt();
        let mut groups = Vec::with_capacity(targets.len());
        for t in targets {
            let eta = match t.fitted_group {
                Some(i) => *theta.eta.get(i).ok_or_else(|| {
                    Error::ShapeMismatch(format!(
                        "replicate refers to fitted group {i} but the draw has {}",
                        theta.eta.len()
                    ))
                })?,
                None => normal(rng, theta.mu0, new_sd),
            };
            groups.push((0..t.size).map(|_| normal(rng, eta, obs_sd)).collect());
        }
        Ok(Dataset::Grouped(GroupedDataset::from_subset(groups)))
    }
}
