//! Large-sample behaviour of single split predictive checks.
//!
//! Under regularity conditions the single-split p-value converges so that
//! `Pr[p < α] → Φ(z_α / ρ)` with `z_α = Φ⁻¹(α)` (the α-quantile, so that a
//! well-specified model with `ρ = 1` rejects at rate α). `ρ` compares the
//! variance of the checking statistic under the truth with its variance under
//! the pseudo-true model, mixed with the posterior uncertainty of the fitted
//! parameters.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc_inv;
use statrs::function::gamma::gamma_lr;

use crate::error::{Error, Result};
use crate::models::ModelSpec;

/// Standard normal CDF. Uses `libm::erfc`, which stays accurate to a few
/// ulps deep into the tails.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile, refined by one Newton step.
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile level {p} outside (0, 1)");
    let x = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
    let density = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    if density > 0.0 {
        x - (normal_cdf(x) - p) / density
    } else {
        x
    }
}

/// Inputs to the asymptotic variance ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct RhoInputs {
    pub q: f64,
    /// Variance of the statistic under the truth, `σ★²`.
    pub sigma_true_sq: f64,
    /// Variance of the statistic under the pseudo-true model, `σ(θ★)²`.
    pub sigma_model_sq: f64,
    /// Gradient of the statistic's mean at `θ★`.
    pub grad: DVector<f64>,
    /// Expected negative Hessian of the log-likelihood, `J★`.
    pub j_star: DMatrix<f64>,
    /// Score covariance under the truth, `Σ★`.
    pub sigma_star: DMatrix<f64>,
}

/// `(qσ★² + (1−q) ν̇ᵀJ⁻¹ΣJ⁻¹ν̇) / (qσ(θ★)² + (1−q) ν̇ᵀJ⁻¹ν̇)`.
pub fn rho_squared(inputs: &RhoInputs) -> Result<f64> {
    let RhoInputs { q, sigma_true_sq, sigma_model_sq, grad, j_star, sigma_star } = inputs;
    let d = grad.len();
    if j_star.shape() != (d, d) || sigma_star.shape() != (d, d) {
        return Err(Error::ShapeMismatch(format!(
            "gradient has length {d} but J is {:?} and Sigma is {:?}",
            j_star.shape(),
            sigma_star.shape()
        )));
    }
    if !(0.0..=1.0).contains(q) || !(*sigma_true_sq > 0.0 && *sigma_model_sq > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need q in [0, 1] and positive variances, got q={q}, {sigma_true_sq}, {sigma_model_sq}"
        )));
    }
    let chol = j_star.clone().cholesky().ok_or_else(|| Error::SingularMatrix("J is not positive definite".into()))?;
    let jg = chol.solve(grad);
    let sandwich = jg.dot(&(sigma_star * &jg));
    let model = grad.dot(&jg);
    let num = q * sigma_true_sq + (1.0 - q) * sandwich;
    let den = q * sigma_model_sq + (1.0 - q) * model;
    if !(den > 0.0) {
        return Err(Error::SingularMatrix("denominator of rho^2 is not positive".into()));
    }
    Ok(num / den)
}

/// `Φ(Φ⁻¹(α)/ρ)`, the limiting one-sided rejection rate.
pub fn asym_rejection_prob(alpha: f64, rho: f64) -> f64 {
    assert!(alpha > 0.0 && alpha < 1.0 && rho > 0.0);
    normal_cdf(normal_quantile(alpha) / rho)
}

/// `2Φ(Φ⁻¹(α/2)/ρ)`, the limiting two-sided rejection rate.
pub fn asym_power_two_sided(alpha: f64, rho: f64) -> f64 {
    assert!(alpha > 0.0 && alpha < 1.0 && rho > 0.0);
    2.0 * normal_cdf(normal_quantile(alpha / 2.0) / rho)
}

/// Misspecification scenarios with closed-form `ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "snake_case")]
pub enum RhoScenario {
    /// Poisson model, negative-binomial truth with mean `mean` and
    /// dispersion `dispersion`, mean statistic: `ρ² = 1 + mean/dispersion`.
    NegBin { mean: f64, dispersion: f64 },
    /// Poisson model, scaled binomial truth, mean statistic: `ρ² = 1 − p`.
    Binomial { prob: f64 },
    /// Gaussian location model, mean statistic: `ρ = σ★/σ`.
    GaussianMean { sigma_true: f64, sigma_model: f64 },
    /// Gaussian location model, MSE discrepancy: `ρ = σ★²/σ²`.
    GaussianMse { sigma_true: f64, sigma_model: f64 },
}

impl RhoScenario {
    pub fn rho(&self) -> Result<f64> {
        let bad = || Err(Error::InvalidParameter(format!("invalid scenario {self:?}")));
        match *self {
            RhoScenario::NegBin { mean, dispersion } => {
                if !(mean > 0.0 && dispersion > 0.0) {
                    return bad();
                }
                Ok((1.0 + mean / dispersion).sqrt())
            }
            RhoScenario::Binomial { prob } => {
                if !(prob > 0.0 && prob < 1.0) {
                    return bad();
                }
                Ok((1.0 - prob).sqrt())
            }
            RhoScenario::GaussianMean { sigma_true, sigma_model } => {
                if !(sigma_true > 0.0 && sigma_model > 0.0) {
                    return bad();
                }
                Ok(sigma_true / sigma_model)
            }
            RhoScenario::GaussianMse { sigma_true, sigma_model } => {
                if !(sigma_true > 0.0 && sigma_model > 0.0) {
                    return bad();
                }
                Ok((sigma_true / sigma_model).powi(2))
            }
        }
    }
}

impl FromStr for RhoScenario {
    type Err = Error;

    /// `negbin:<τ>` (mean 2) or `negbin:<μ>,<τ>`, `binomial:<p>`,
    /// `gaussian_mean:<σ★>,<σ>`, `gaussian_mse:<σ★>,<σ>`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, args) =
            s.split_once(':').ok_or_else(|| Error::Config(format!("scenario {s:?} needs parameters after ':'")))?;
        let nums: Vec<f64> = args
            .split(',')
            .map(|a| a.trim().parse().map_err(|_| Error::Config(format!("bad number {a:?} in scenario {s:?}"))))
            .collect::<Result<_>>()?;
        let scenario = match (name.trim(), nums.as_slice()) {
            ("negbin", [tau]) => RhoScenario::NegBin { mean: 2.0, dispersion: *tau },
            ("negbin", [mu, tau]) => RhoScenario::NegBin { mean: *mu, dispersion: *tau },
            ("binomial", [p]) => RhoScenario::Binomial { prob: *p },
            ("gaussian_mean", [st, sm]) => RhoScenario::GaussianMean { sigma_true: *st, sigma_model: *sm },
            ("gaussian_mse", [st, sm]) => RhoScenario::GaussianMse { sigma_true: *st, sigma_model: *sm },
            _ => return Err(Error::Config(format!("unknown scenario {s:?}"))),
        };
        scenario.rho()?;
        Ok(scenario)
    }
}

impl fmt::Display for RhoScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RhoScenario::NegBin { mean, dispersion } => write!(f, "negbin:{mean},{dispersion}"),
            RhoScenario::Binomial { prob } => write!(f, "binomial:{prob}"),
            RhoScenario::GaussianMean { sigma_true, sigma_model } => {
                write!(f, "gaussian_mean:{sigma_true},{sigma_model}")
            }
            RhoScenario::GaussianMse { sigma_true, sigma_model } => {
                write!(f, "gaussian_mse:{sigma_true},{sigma_model}")
            }
        }
    }
}

/// Everything the `theory` command prints for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryReport {
    pub scenario: String,
    pub alpha: f64,
    pub q: f64,
    pub rho: f64,
    pub rho_squared: f64,
    pub one_sided: f64,
    pub two_sided: f64,
}

/// The closed-form `ρ` of these scenarios does not depend on `q`; it is
/// echoed so output rows are self-describing.
pub fn theory_report(scenario: &RhoScenario, alpha: f64, q: f64) -> Result<TheoryReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must be in (0, 1), got {alpha}")));
    }
    let rho = scenario.rho()?;
    Ok(TheoryReport {
        scenario: scenario.to_string(),
        alpha,
        q,
        rho,
        rho_squared: rho * rho,
        one_sided: asym_rejection_prob(alpha, rho),
        two_sided: asym_power_two_sided(alpha, rho),
    })
}

/// Prior effective sample size `N₀` (the gamma prior's rate).
pub fn prior_ess(model: &ModelSpec) -> Result<f64> {
    match model {
        ModelSpec::PoissonGamma { rate, .. } => Ok(*rate),
        _ => Err(Error::EssUndefined),
    }
}

/// `r = N₀ / (N₀ + N★)`.
pub fn relative_ess(n0: f64, n_star: f64) -> f64 {
    n0 / (n0 + n_star)
}

/// Prior rate giving relative ESS `r`: `β = r/(1−r) N★`.
pub fn beta_for_target_r(r: f64, n_star: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) || !(n_star >= 1.0) {
        return Err(Error::InvalidParameter(format!("need r in (0, 1) and N* >= 1, got r={r}, N*={n_star}")));
    }
    Ok(r / (1.0 - r) * n_star)
}

/// Gamma prior shape α such that `theta_star` is the 95th percentile of
/// `Gam(α, rate)`, by bisection on the (monotone) quantile.
pub fn prior_shape_for_quantile(theta_star: f64, rate: f64) -> Result<f64> {
    if !(theta_star > 0.0 && rate > 0.0) {
        return Err(Error::InvalidParameter(format!("need positive theta* and rate, got {theta_star}, {rate}")));
    }
    let x = rate * theta_star;
    // Gam(α, rate) CDF at θ★ decreases in α; find CDF = 0.95
    let cdf = |a: f64| gamma_lr(a, x);
    let (mut lo, mut hi) = (1e-10, 1.0);
    while cdf(hi) > 0.95 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::InvalidParameter("no prior shape reaches the target quantile".into()));
        }
    }
    if cdf(lo) < 0.95 {
        return Err(Error::InvalidParameter(format!(
            "theta*={theta_star} is below the 95th percentile for every shape at rate {rate}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) > 0.95 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (cdf(mid) - 0.95).abs() < 1e-8 && hi - lo < 1e-8 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
