use serde::{Deserialize, Serialize};

use super::{flat_replicate, gamma_rate, poisson, require_counts, PosteriorModel, ReplicateShape};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::StreamRng;
use crate::statistics::StatisticKind;

/// Poisson likelihood with a `Gam(shape, rate)` prior on the rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonGamma {
    pub shape: f64,
    pub rate: f64,
}

/// Gamma distribution in shape/rate form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaParams {
    pub shape: f64,
    pub rate: f64,
}

impl GammaParams {
    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }

    pub fn variance(&self) -> f64 {
        self.shape / (self.rate * self.rate)
    }
}

impl PoissonGamma {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        if !(shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gamma prior needs positive shape and rate, got ({shape}, {rate})"
            )));
        }
        Ok(Self { shape, rate })
    }

    /// `Gam(a + Σx, b + N)`.
    pub fn posterior_params(&self, data: &Dataset) -> Result<GammaParams> {
        self.check_data(data)?;
        let v = data.as_slice().expect("checked");
        Ok(GammaParams { shape: self.shape + v.iter().sum::<f64>(), rate: self.rate + v.len() as f64 })
    }
}

impl PosteriorModel for PoissonGamma {
    type Param = f64;

    fn name(&self) -> &'static str {
        "poisson_gamma"
    }

    fn check_data(&self, data: &Dataset) -> Result<()> {
        require_counts(data, "poisson_gamma")
    }

    fn sample_posterior(&self, data: &Dataset, n_draws: usize, rng: &mut StreamRng) -> Result<Vec<f64>> {
        let post = self.posterior_params(data)?;
        Ok((0..n_draws).map(|_| gamma_rate(rng, post.shape, post.rate)).collect())
    }

    fn sample_predictive(&self, theta: &f64, target: &ReplicateShape, rng: &mut StreamRng) -> Result<Dataset> {
        let n = target
            .flat_len()
            .ok_or_else(|| Error::ShapeMismatch("poisson_gamma replicates exchangeable data only".into()))?;
        let values = (0..n).map(|_| poisson(rng, *theta)).collect();
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
        let n = target.flat_len()? as f64;
        match kind {
            StatisticKind::Mean => Some(poisson(rng, n * theta) / n),
            StatisticKind::SuccessRate => {
                let s = poisson(rng, n * theta);
                Some(if s == 0.0 { f64::INFINITY } else { n / s })
            }
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::IidDataset;
    use crate::models::test_util::{grid_max_error, mean_var};
    use crate::rng::SeedSpec;
    use rand::Rng;
    use statrs::distribution::{Continuous, Gamma as GammaDist};

    fn iid(v: &[f64]) -> Dataset {
        Dataset::Iid(IidDataset::new(v.to_vec()).unwrap())
    }

    #[test]
    fn conjugate_update_example() {
        let m = PoissonGamma::new(0.1, 0.2).unwrap();
        let p = m.posterior_params(&iid(&[2.0, 3.0, 1.0])).unwrap();
        assert!((p.shape - 6.1).abs() < 1e-12);
        assert!((p.rate - 3.2).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(PoissonGamma::new(0.0, 1.0).is_err());
        let m = PoissonGamma::new(1.0, 1.0).unwrap();
        assert!(matches!(m.posterior_params(&iid(&[1.5])), Err(Error::InvalidData(_))));
        assert!(matches!(m.posterior_params(&iid(&[-1.0])), Err(Error::InvalidData(_))));
    }

    #[test]
    fn posterior_draws_match_gamma_moments() {
        let m = PoissonGamma::new(0.1, 0.2).unwrap();
        let mut rng = SeedSpec::new(1).rng();
        let draws = m.sample_posterior(&iid(&[2.0, 3.0, 1.0]), 100_000, &mut rng).unwrap();
        let (mean, var) = mean_var(&draws);
        let se = (0.5957f64 / 1e5).sqrt();
        assert!((mean - 1.90625).abs() < 3.0 * se, "mean {mean}");
        // variance of the sample variance of a gamma: approx (μ4 - σ⁴)/n
        assert!((var - 6.1 / 3.2f64.powi(2)).abs() < 0.02, "var {var}");
    }

    #[test]
    fn draws_are_deterministic() {
        let m = PoissonGamma::new(0.1, 0.2).unwrap();
        let d = iid(&[2.0, 3.0, 1.0]);
        let a = m.sample_posterior(&d, 50, &mut SeedSpec::new(9).rng()).unwrap();
        let b = m.sample_posterior(&d, 50, &mut SeedSpec::new(9).rng()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn predictive_mean_lln() {
        let m = PoissonGamma::new(1.0, 1.0).unwrap();
        let mut rng = SeedSpec::new(2).rng();
        let rep = m.sample_predictive(&2.0, &ReplicateShape::Iid(1_000_000), &mut rng).unwrap();
        let (mean, _) = mean_var(rep.as_slice().unwrap());
        assert!((mean - 2.0).abs() < 3.0 * (2.0f64 / 1e6).sqrt());
    }

    #[test]
    fn zero_rate_gives_zeros() {
        let m = PoissonGamma::new(1.0, 1.0).unwrap();
        let rep = m.sample_predictive(&0.0, &ReplicateShape::Iid(5), &mut SeedSpec::new(0).rng()).unwrap();
        assert!(rep.as_slice().unwrap().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn posterior_matches_grid_quadrature() {
        // Unnormalized prior x likelihood on a log-scale grid, normalized by
        // trapezoid quadrature, against the closed-form gamma density.
        let m = PoissonGamma::new(0.1, 0.2).unwrap();
        let mut rng = SeedSpec::new(3).rng();
        for _ in 0..50 {
            let n = rng.random_range(1..8);
            let data: Vec<f64> = (0..n).map(|_| rng.random_range(0..6) as f64).collect();
            let err = grid_error(&m, &data);
            assert!(err < 1e-6, "data {data:?} err {err}");
        }
    }

    // Compared on u = ln θ, where the density stays bounded even when the
    // gamma shape is below 1.
    fn grid_error(m: &PoissonGamma, data: &[f64]) -> f64 {
        let post = m.posterior_params(&iid(data)).unwrap();
        let sum: f64 = data.iter().sum();
        let n = data.len() as f64;
        let log_unnorm = |u: f64| {
            let theta = u.exp();
            let prior = (m.shape - 1.0) * u - m.rate * theta;
            prior + sum * u - n * theta + u
        };
        let a = m.shape + sum;
        let mode = (a / (m.rate + n)).ln();
        let lo = mode - (45.0 / a).max(12.0 / a.sqrt());
        let hi = mode + (12.0 / a.sqrt()).max(5.0);
        let dist = GammaDist::new(post.shape, post.rate).unwrap();
        grid_max_error(lo, hi, log_unnorm, |u| dist.pdf(u.exp()) * u.exp())
    }
}
