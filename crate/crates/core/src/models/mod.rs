//! Posterior and posterior-predictive machinery.
//!
//! Each model implements [`PosteriorModel`]: draw parameters from the
//! posterior given a dataset, then draw replicated data of a requested shape
//! given one parameter draw. Conjugate models can additionally draw some
//! statistics of a replicate directly from their exact sampling distribution
//! (e.g. the sum of `n` Poisson draws is Poisson with rate `nθ`), which the
//! checks use as a fast path.

mod geometric;
mod hierarchical;
mod normal;
mod poisson;
mod spec;
mod truth;

use std::fmt::Debug;

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal, Poisson};

pub use geometric::{BetaParams, GeometricBeta};
pub use hierarchical::{GaussianHierarchical, GroupSummaries, HierDraw, HyperPrior};
pub use normal::{NigParams, NormalImproper, NormalKnownVar, NormalMeanVar, NormalParams};
pub use poisson::{GammaParams, PoissonGamma};
pub(crate) use spec::with_model;
pub use spec::{AnyModel, ModelSpec, PosteriorParams};
pub use truth::{sample_truth, HierScenario, TruthSpec};

use crate::data::{Dataset, GroupSelection, Selection};
use crate::error::{Error, Result};
use crate::rng::StreamRng;
use crate::statistics::StatisticKind;

/// A Bayesian model with a posterior sampler and a predictive sampler.
pub trait PosteriorModel: Send + Sync {
    type Param: Clone + Debug + Send + Sync;

    fn name(&self) -> &'static str;

    /// Rejects data the model cannot be fit to (wrong shape or support).
    fn check_data(&self, data: &Dataset) -> Result<()>;

    /// `n_draws` posterior draws given `data`; deterministic given `rng`.
    fn sample_posterior(&self, data: &Dataset, n_draws: usize, rng: &mut StreamRng) -> Result<Vec<Self::Param>>;

    /// Replicated data of exactly the shape `target`, given one parameter draw.
    fn sample_predictive(&self, theta: &Self::Param, target: &ReplicateShape, rng: &mut StreamRng) -> Result<Dataset>;

    /// `E[X | θ]` for exchangeable models; `None` when it is not a single number.
    fn conditional_mean(&self, _theta: &Self::Param) -> Option<f64> {
        None
    }

    /// Draws `T(X_rep)` (or `T(X_rep, θ)`) from its exact distribution
    /// without materializing `X_rep`, when the model knows how.
    fn sample_statistic(
        &self,
        _theta: &Self::Param,
        _kind: StatisticKind,
        _target: &ReplicateShape,
        _rng: &mut StreamRng,
    ) -> Option<f64> {
        None
    }
}

/// Shape of a replicated dataset.
#[derive(Debug, Clone, PartialEq)]
pub enum ReplicateShape {
    Iid(usize),
    /// Replicate carries these time stamps.
    TimeSeries(Vec<f64>),
    Grouped(Vec<GroupTarget>),
}

/// One replicated group: reuse the posterior draw of a fitted group's
/// effect, or (`fitted_group: None`) draw a brand-new group effect.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupTarget {
    pub fitted_group: Option<usize>,
    pub size: usize,
}

impl ReplicateShape {
    /// Replicate of the same shape as `data`, every group reusing its own effect.
    pub fn like(data: &Dataset) -> Self {
        match data {
            Dataset::Iid(d) => ReplicateShape::Iid(d.len()),
            Dataset::TimeSeries(d) => ReplicateShape::TimeSeries(d.index().to_vec()),
            Dataset::Grouped(d) => ReplicateShape::Grouped(
                d.groups()
                    .iter()
                    .enumerate()
                    .map(|(i, g)| GroupTarget { fitted_group: Some(i), size: g.len() })
                    .collect(),
            ),
        }
    }

    /// Shape of the held-out part of a split, relative to a posterior fitted
    /// on the observed part. Held-out groups that also appear in `observed`
    /// reuse their fitted effect; the others are new groups.
    pub fn for_heldout(source: &Dataset, observed: &Selection, heldout: &Selection) -> Result<Self> {
        match (source, heldout) {
            (Dataset::Iid(_), Selection::Flat(h)) => Ok(ReplicateShape::Iid(h.len())),
            (Dataset::TimeSeries(d), Selection::Flat(h)) => {
                Ok(ReplicateShape::TimeSeries(h.iter().map(|&i| d.index()[i]).collect()))
            }
            (Dataset::Grouped(_), Selection::Grouped(h)) => {
                let Selection::Grouped(o) = observed else {
                    return Err(Error::ShapeMismatch("observed selection is not grouped".into()));
                };
                let fitted = fitted_group_order(o);
                Ok(ReplicateShape::Grouped(
                    h.iter()
                        .filter(|g| !g.positions.is_empty())
                        .map(|g| GroupTarget {
                            fitted_group: fitted.iter().position(|&src| src == g.group),
                            size: g.positions.len(),
                        })
                        .collect(),
                ))
            }
            _ => Err(Error::ShapeMismatch("held-out selection does not match the data shape".into())),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ReplicateShape::Iid(n) => *n,
            ReplicateShape::TimeSeries(idx) => idx.len(),
            ReplicateShape::Grouped(g) => g.iter().map(|t| t.size).sum(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of observations for exchangeable shapes.
    fn flat_len(&self) -> Option<usize> {
        match self {
            ReplicateShape::Iid(n) => Some(*n),
            ReplicateShape::TimeSeries(idx) => Some(idx.len()),
            ReplicateShape::Grouped(_) => None,
        }
    }
}

/// Source-group ids in the order they appear in the fitted (observed) dataset.
fn fitted_group_order(observed: &[GroupSelection]) -> Vec<usize> {
    observed.iter().filter(|g| !g.positions.is_empty()).map(|g| g.group).collect()
}

/// Wraps exchangeable draws in the requested flat shape.
fn flat_replicate(values: Vec<f64>, target: &ReplicateShape) -> Result<Dataset> {
    use crate::data::{IidDataset, TimeSeriesDataset};
    match target {
        ReplicateShape::Iid(_) => Ok(Dataset::Iid(IidDataset::new(values)?)),
        ReplicateShape::TimeSeries(idx) => Ok(Dataset::TimeSeries(TimeSeriesDataset::new(values, idx.clone())?)),
        ReplicateShape::Grouped(_) => Err(Error::ShapeMismatch("this model replicates exchangeable data only".into())),
    }
}

fn require_flat(data: &Dataset, model: &str) -> Result<()> {
    if data.as_grouped().is_some() {
        return Err(Error::ShapeMismatch(format!("{model} expects exchangeable or time-series data")));
    }
    Ok(())
}

fn require_counts(data: &Dataset, model: &str) -> Result<()> {
    require_flat(data, model)?;
    let v = data.as_slice().expect("flat");
    if let Some(i) = v.iter().position(|x| *x < 0.0 || x.fract() != 0.0) {
        return Err(Error::InvalidData(format!(
            "{model} needs nonnegative integer counts; value {} at position {i}",
            v[i]
        )));
    }
    Ok(())
}

/// Poisson draw that tolerates a zero rate (gamma posteriors with small
/// shape can underflow to 0).
pub(crate) fn poisson<R: Rng + ?Sized>(rng: &mut R, lambda: f64) -> f64 {
    if lambda > 0.0 {
        Poisson::new(lambda).expect("finite positive rate").sample(rng)
    } else {
        0.0
    }
}

/// Gamma with shape/rate.
pub(crate) fn gamma_rate<R: Rng + ?Sized>(rng: &mut R, shape: f64, rate: f64) -> f64 {
    Gamma::new(shape, 1.0 / rate).expect("positive shape and rate").sample(rng)
}

/// Inverse gamma with shape/scale, `scale / Gamma(shape, 1)`.
pub(crate) fn inv_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, scale: f64) -> f64 {
    let g: f64 = Gamma::new(shape, 1.0).expect("positive shape").sample(rng);
    scale / g
}

pub(crate) fn normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, sd: f64) -> f64 {
    Normal::new(mean, sd).expect("finite sd").sample(rng)
}

/// Number of failures before `n` successes, as a gamma-Poisson mixture.
pub(crate) fn negbin_failures<R: Rng + ?Sized>(rng: &mut R, n: f64, success: f64) -> f64 {
    if success >= 1.0 {
        return 0.0;
    }
    let lambda = gamma_rate(rng, n, success / (1.0 - success));
    poisson(rng, lambda)
}
