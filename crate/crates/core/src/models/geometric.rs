use rand_distr::{Beta, Distribution, Geometric};
use serde::{Deserialize, Serialize};

use super::{flat_replicate, negbin_failures, require_counts, PosteriorModel, ReplicateShape};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::StreamRng;
use crate::statistics::StatisticKind;

/// Geometric likelihood on `{0, 1, 2, ...}` (failures before the first
/// success) with a `Beta(a, b)` prior on the success probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricBeta {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub a: f64,
    pub b: f64,
}

impl GeometricBeta {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidParameter(format!("beta prior needs positive parameters, got ({a}, {b})")));
        }
        Ok(Self { a, b })
    }

    /// `Beta(a + N, b + Σx)`.
    pub fn posterior_params(&self, data: &Dataset) -> Result<BetaParams> {
        self.check_data(data)?;
        let v = data.as_slice().expect("checked");
        Ok(BetaParams { a: self.a + v.len() as f64, b: self.b + v.iter().sum::<f64>() })
    }
}

impl PosteriorModel for GeometricBeta {
    type Param = f64;

    fn name(&self) -> &'static str {
        "geometric_beta"
    }

    fn check_data(&self, data: &Dataset) -> Result<()> {
        require_counts(data, "geometric_beta")
    }

    fn sample_posterior(&self, data: &Dataset, n_draws: usize, rng: &mut StreamRng) -> Result<Vec<f64>> {
        let post = self.posterior_params(data)?;
        let dist = Beta::new(post.a, post.b).map_err(|e| Error::InvalidParameter(format!("beta posterior: {e}")))?;
        let draws: Vec<f64> = (0..n_draws).map(|_| dist.sample(rng)).collect();
        if let Some(bad) = draws.iter().find(|p| !(**p > 0.0)) {
            return Err(Error::NonFiniteDraw(format!("success probability {bad} from Beta({}, {})", post.a, post.b)));
        }
        Ok(draws)
    }

    fn sample_predictive(&self, theta: &f64, target: &ReplicateShape, rng: &mut StreamRng) -> Result<Dataset> {
        let n = target
            .flat_len()
            .ok_or_else(|| Error::ShapeMismatch("geometric_beta replicates exchangeable data only".into()))?;
        let dist = Geometric::new(*theta).map_err(|e| Error::InvalidParameter(format!("geometric({theta}): {e}")))?;
        let values = (0..n).map(|_| dist.sample(rng) as f64).collect();
        flat_replicate(values, target)
    }

    fn conditional_mean(&self, theta: &f64) -> Option<f64> {
        Some((1.0 - theta) / theta)
    }

    fn sample_statistic(
        &self,
        theta: &f64,
        kind: StatisticKind,
        target: &ReplicateShape,
        rng: &mut StreamRng,
    ) -> Option<f64> {
        let n = target.flat_len()?;
        if n == 0 {
            return None;
        }
        let n = n as f64;
        // a sum of n geometrics is negative binomial
        match kind {
            StatisticKind::Mean => Some(negbin_failures(rng, n, *theta) / n),
            StatisticKind::SuccessRate => {
                let s = negbin_failures(rng, n, *theta);
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
    use crate::statistics::evaluate;
    use rand::Rng;
    use statrs::distribution::{Beta as BetaDist, Continuous};

    fn iid(v: &[f64]) -> Dataset {
        Dataset::Iid(IidDataset::new(v.to_vec()).unwrap())
    }

    #[test]
    fn conjugate_update() {
        let m = GeometricBeta::new(1.0, 1.0).unwrap();
        let p = m.posterior_params(&iid(&[0.0, 3.0, 1.0])).unwrap();
        assert_eq!(p.a, 4.0);
        assert_eq!(p.b, 5.0);
    }

    // Compared on u = logit θ; the Jacobian θ(1-θ) keeps the density bounded.
    #[test]
    fn matches_grid_quadrature_on_logit_scale() {
        let m = GeometricBeta::new(0.1, 0.2).unwrap();
        let mut rng = SeedSpec::new(9).rng();
        for _ in 0..50 {
            let n = rng.random_range(1..8);
            let data: Vec<f64> = (0..n).map(|_| rng.random_range(0..6) as f64).collect();
            let post = m.posterior_params(&iid(&data)).unwrap();
            let sum: f64 = data.iter().sum();
            let n = data.len() as f64;
            let log_unnorm = |u: f64| {
                // ln θ and ln(1-θ) without cancellation in the tails
                let lt = -(-u).exp().ln_1p();
                let l1t = -u.exp().ln_1p();
                (m.a + n) * lt + (m.b + sum) * l1t
            };
            let mode = (post.a / post.b).ln();
            let lo = mode - (45.0 / post.a).max(12.0);
            let hi = mode + (45.0 / post.b).max(12.0);
            let dist = BetaDist::new(post.a, post.b).unwrap();
            let err = grid_max_error(lo, hi, log_unnorm, |u| {
                let t = 1.0 / (1.0 + (-u).exp());
                dist.pdf(t) * t * (1.0 - t)
            });
            assert!(err < 1e-6, "data {data:?} err {err}");
        }
    }

    #[test]
    fn predictive_support_and_mean() {
        let m = GeometricBeta::new(1.0, 1.0).unwrap();
        let rep = m.sample_predictive(&0.25, &ReplicateShape::Iid(200_000), &mut SeedSpec::new(6).rng()).unwrap();
        let v = rep.as_slice().unwrap();
        assert!(v.iter().all(|x| *x >= 0.0 && x.fract() == 0.0));
        let (mean, _) = mean_var(v);
        assert!((mean - 3.0).abs() < 0.05, "{mean}");
    }

    #[test]
    fn sum_shortcut_matches_materialized() {
        let m = GeometricBeta::new(1.0, 1.0).unwrap();
        let shape = ReplicateShape::Iid(5);
        let mut rng = SeedSpec::new(7).rng();
        let fast: Vec<f64> =
            (0..40_000).map(|_| m.sample_statistic(&0.4, StatisticKind::Mean, &shape, &mut rng).unwrap()).collect();
        let slow: Vec<f64> = (0..40_000)
            .map(|_| {
                let rep = m.sample_predictive(&0.4, &shape, &mut rng).unwrap();
                evaluate(StatisticKind::Mean, &rep).unwrap()
            })
            .collect();
        let (a, va) = mean_var(&fast);
        let (b, vb) = mean_var(&slow);
        assert!((a - 1.5).abs() < 0.03 && (b - 1.5).abs() < 0.03, "{a} {b}");
        assert!((va / vb - 1.0).abs() < 0.05, "{va} {vb}");
    }
}
