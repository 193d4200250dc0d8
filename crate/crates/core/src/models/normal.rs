use serde::{Deserialize, Serialize};

use super::{flat_replicate, gamma_rate, inv_gamma, normal, require_flat, PosteriorModel, ReplicateShape};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::StreamRng;
use crate::statistics::StatisticKind;

/// Normal likelihood with known standard deviation `sigma` and a
/// `N(prior_mean, prior_sd²)` prior on the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalKnownVar {
    pub sigma: f64,
    pub prior_mean: f64,
    pub prior_sd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalParams {
    pub mean: f64,
    pub var: f64,
}

impl NormalKnownVar {
    pub fn new(sigma: f64, prior_mean: f64, prior_sd: f64) -> Result<Self> {
        if !(sigma > 0.0 && prior_sd > 0.0 && sigma.is_finite() && prior_sd.is_finite()) || !prior_mean.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "normal model needs positive finite sigma and prior sd, got sigma={sigma}, sd={prior_sd}"
            )));
        }
        Ok(Self { sigma, prior_mean, prior_sd })
    }

    /// Precision-weighted update of the prior with `N` observations.
    pub fn posterior_params(&self, data: &Dataset) -> Result<NormalParams> {
        self.check_data(data)?;
        let v = data.as_slice().expect("checked");
        let n = v.len() as f64;
        let prior_prec = self.prior_sd.powi(-2);
        let lik_prec = n / (self.sigma * self.sigma);
        let prec = prior_prec + lik_prec;
        let xbar = v.iter().sum::<f64>() / n;
        Ok(NormalParams { mean: (prior_prec * self.prior_mean + lik_prec * xbar) / prec, var: 1.0 / prec })
    }
}

impl PosteriorModel for NormalKnownVar {
    type Param = f64;

    fn name(&self) -> &'static str {
        "normal_known"
    }

    fn check_data(&self, data: &Dataset) -> Result<()> {
        require_flat(data, "normal_known")
    }

    fn sample_posterior(&self, data: &Dataset, n_draws: usize, rng: &mut StreamRng) -> Result<Vec<f64>> {
        let post = self.posterior_params(data)?;
        let sd = post.var.sqrt();
        Ok((0..n_draws).map(|_| normal(rng, post.mean, sd)).collect())
    }

    fn sample_predictive(&self, theta: &f64, target: &ReplicateShape, rng: &mut StreamRng) -> Result<Dataset> {
        let n = target
            .flat_len()
            .ok_or_else(|| Error::ShapeMismatch("normal_known replicates exchangeable data only".into()))?;
        let values = (0..n).map(|_| normal(rng, *theta, self.sigma)).collect();
        flat_replicate(values, target)
    }

    fn conditional_mean(&self, theta: &f64) -> Option<f64> {
        Some(*theta)
    }

    fn sample_statistic(
        &self,
        theta: &f64,
        kind: StatisticKind,
        target: &ReplicateShape,
        rng: &mut StreamRng,
    ) -> Option<f64> {
        normal_statistic(*theta, self.sigma * self.sigma, kind, target.flat_len()?, rng)
    }
}

/// Normal likelihood with unknown mean and variance under the flat prior
/// `p(μ, σ²) ∝ 1/σ²`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct NormalImproper;

/// One draw of `(μ, σ²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalMeanVar {
    pub mu: f64,
    pub sigma2: f64,
}

/// Normal-inverse-gamma posterior: `σ² ~ IG(shape, scale)`,
/// `μ | σ² ~ N(mean, σ²/n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NigParams {
    pub mean: f64,
    pub n: f64,
    pub shape: f64,
    pub scale: f64,
}

impl NormalImproper {
    pub fn posterior_params(&self, data: &Dataset) -> Result<NigParams> {
        self.check_data(data)?;
        let v = data.as_slice().expect("checked");
        if v.len() < 2 {
            return Err(Error::InsufficientData("the flat-prior normal model needs at least 2 observations".into()));
        }
        let n = v.len() as f64;
        let xbar = v.iter().sum::<f64>() / n;
        let ss: f64 = v.iter().map(|x| (x - xbar).powi(2)).sum();
        if ss <= 0.0 {
            return Err(Error::DegenerateStatistic("all observations are equal, so the posterior is improper".into()));
        }
        Ok(NigParams { mean: xbar, n, shape: (n - 1.0) / 2.0, scale: ss / 2.0 })
    }
}

impl PosteriorModel for NormalImproper {
    type Param = NormalMeanVar;

    fn name(&self) -> &'static str {
        "normal_improper"
    }

    fn check_data(&self, data: &Dataset) -> Result<()> {
        require_flat(data, "normal_improper")
    }

    fn sample_posterior(&self, data: &Dataset, n_draws: usize, rng: &mut StreamRng) -> Result<Vec<NormalMeanVar>> {
        let post = self.posterior_params(data)?;
        Ok((0..n_draws)
            .map(|_| {
                let sigma2 = inv_gamma(rng, post.shape, post.scale);
                let mu = normal(rng, post.mean, (sigma2 / post.n).sqrt());
                NormalMeanVar { mu, sigma2 }
            })
            .collect())
    }

    fn sample_predictive(
        &self,
        theta: &NormalMeanVar,
        target: &ReplicateShape,
        rng: &mut StreamRng,
    ) -> Result<Dataset> {
        let n = target
            .flat_len()
            .ok_or_else(|| Error::ShapeMismatch("normal_improper replicates exchangeable data only".into()))?;
        let sd = theta.sigma2.sqrt();
        let values = (0..n).map(|_| normal(rng, theta.mu, sd)).collect();
        flat_replicate(values, target)
    }

    fn conditional_mean(&self, theta: &NormalMeanVar) -> Option<f64> {
        Some(theta.mu)
    }

    fn sample_statistic(
        &self,
        theta: &NormalMeanVar,
        kind: StatisticKind,
        target: &ReplicateShape,
        rng: &mut StreamRng,
    ) -> Option<f64> {
        normal_statistic(theta.mu, theta.sigma2, kind, target.flat_len()?, rng)
    }
}

/// Exact draws of the sample mean and of the mean squared error around the
/// true mean for `n` iid `N(mu, var)` observations.
fn normal_statistic(mu: f64, var: f64, kind: StatisticKind, n: usize, rng: &mut StreamRng) -> Option<f64> {
    if n == 0 {
        return None;
    }
    let n = n as f64;
    match kind {
        StatisticKind::Mean => Some(normal(rng, mu, (var / n).sqrt())),
        // σ² χ²_n / n, with χ²_n = Gam(n/2, rate 1/2)
        StatisticKind::MseDiscrepancy => Some(var * gamma_rate(rng, n / 2.0, 0.5) / n),
        _ => None,
    }
}
