use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{
    BetaParams, GammaParams, GaussianHierarchical, GeometricBeta, NigParams, NormalImproper, NormalKnownVar,
    NormalParams, PoissonGamma,
};
use crate::data::Dataset;
use crate::error::{Error, Result};

/// Serializable description of a model, as found in configs and on the
/// command line (`poisson_gamma:0.1,0.2`, `normal_known:1,0,100`,
/// `normal_improper`, `geometric_beta:0.1,0.2`, `gaussian_hier:4`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    PoissonGamma {
        shape: f64,
        rate: f64,
    },
    NormalKnown {
        sigma: f64,
        prior_mean: f64,
        prior_sd: f64,
    },
    NormalImproper,
    GeometricBeta {
        a: f64,
        b: f64,
    },
    GaussianHier {
        obs_var: f64,
        #[serde(default)]
        burn_in: Option<usize>,
        #[serde(default)]
        thinning: Option<usize>,
    },
}

/// A constructed model of any supported kind.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyModel {
    PoissonGamma(PoissonGamma),
    NormalKnown(NormalKnownVar),
    NormalImproper(NormalImproper),
    GeometricBeta(GeometricBeta),
    GaussianHier(GaussianHierarchical),
}

/// Closed-form posterior of a conjugate model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PosteriorParams {
    Gamma(GammaParams),
    Normal(NormalParams),
    NormalInverseGamma(NigParams),
    Beta(BetaParams),
}

/// Runs `$body` with `$m` bound to the concrete model inside an [`AnyModel`].
macro_rules! with_model {
    ($any:expr, $m:ident => $body:expr) => {
        match $any {
            $crate::models::AnyModel::PoissonGamma($m) => $body,
            $crate::models::AnyModel::NormalKnown($m) => $body,
            $crate::models::AnyModel::NormalImproper($m) => $body,
            $crate::models::AnyModel::GeometricBeta($m) => $body,
            $crate::models::AnyModel::GaussianHier($m) => $body,
        }
    };
}
pub(crate) use with_model;

impl ModelSpec {
    pub fn build(&self) -> Result<AnyModel> {
        Ok(match *self {
            ModelSpec::PoissonGamma { shape, rate } => AnyModel::PoissonGamma(PoissonGamma::new(shape, rate)?),
            ModelSpec::NormalKnown { sigma, prior_mean, prior_sd } => {
                AnyModel::NormalKnown(NormalKnownVar::new(sigma, prior_mean, prior_sd)?)
            }
            ModelSpec::NormalImproper => AnyModel::NormalImproper(NormalImproper),
            ModelSpec::GeometricBeta { a, b } => AnyModel::GeometricBeta(GeometricBeta::new(a, b)?),
            ModelSpec::GaussianHier { obs_var, burn_in, thinning } => {
                let m = GaussianHierarchical::new(obs_var)?;
                let m = m.clone().with_chain(burn_in.unwrap_or(m.burn_in), thinning.unwrap_or(m.thinning))?;
                AnyModel::GaussianHier(m)
            }
        })
    }

    pub fn is_grouped(&self) -> bool {
        matches!(self, ModelSpec::GaussianHier { .. })
    }
}

impl AnyModel {
    pub fn name(&self) -> &'static str {
        use super::PosteriorModel;
        with_model!(self, m => m.name())
    }

    pub fn check_data(&self, data: &Dataset) -> Result<()> {
        use super::PosteriorModel;
        with_model!(self, m => m.check_data(data))
    }

    pub fn posterior_params(&self, data: &Dataset) -> Result<PosteriorParams> {
        match self {
            AnyModel::PoissonGamma(m) => m.posterior_params(data).map(PosteriorParams::Gamma),
            AnyModel::NormalKnown(m) => m.posterior_params(data).map(PosteriorParams::Normal),
            AnyModel::NormalImproper(m) => m.posterior_params(data).map(PosteriorParams::NormalInverseGamma),
            AnyModel::GeometricBeta(m) => m.posterior_params(data).map(PosteriorParams::Beta),
            AnyModel::GaussianHier(_) => Err(Error::InvalidParameter(
                "the hierarchical model has no closed-form posterior; use the Gibbs sampler".into(),
            )),
        }
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        let nums: Vec<f64> = if args.trim().is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|a| {
                    a.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Config(format!("model argument {a:?} in {s:?} is not a number")))
                })
                .collect::<Result<_>>()?
        };
        let want = |n: usize| -> Result<()> {
            if nums.len() == n {
                Ok(())
            } else {
                Err(Error::Config(format!("model {name} takes {n} argument(s), got {}", nums.len())))
            }
        };
        let spec = match name.trim() {
            "poisson_gamma" => {
                want(2)?;
                ModelSpec::PoissonGamma { shape: nums[0], rate: nums[1] }
            }
            "normal_known" => {
                want(3)?;
                ModelSpec::NormalKnown { sigma: nums[0], prior_mean: nums[1], prior_sd: nums[2] }
            }
            "normal_improper" => {
                want(0)?;
                ModelSpec::NormalImproper
            }
            "geometric_beta" => {
                want(2)?;
                ModelSpec::GeometricBeta { a: nums[0], b: nums[1] }
            }
            "gaussian_hier" => {
                want(1)?;
                ModelSpec::GaussianHier { obs_var: nums[0], burn_in: None, thinning: None }
            }
            other => return Err(Error::Config(format!("unknown model {other:?}"))),
        };
        spec.build()?;
        Ok(spec)
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::PoissonGamma { shape, rate } => write!(f, "poisson_gamma:{shape},{rate}"),
            ModelSpec::NormalKnown { sigma, prior_mean, prior_sd } => {
                write!(f, "normal_known:{sigma},{prior_mean},{prior_sd}")
            }
            ModelSpec::NormalImproper => f.write_str("normal_improper"),
            ModelSpec::GeometricBeta { a, b } => write!(f, "geometric_beta:{a},{b}"),
            ModelSpec::GaussianHier { obs_var, .. } => write!(f, "gaussian_hier:{obs_var}"),
        }
    }
}
