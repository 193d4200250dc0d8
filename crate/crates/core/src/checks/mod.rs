//! Predictive checks: PPC, POP-PC-v1, single split predictive check and
//! divided split predictive check.
//!
//! Every check returns a one-sided p-value built by Monte Carlo counting
//! over `S` posterior predictive replicates. The single SPC and the PPC
//! count `T(x) > T(X_rep)`; POP-PC-v1 counts `T(Y) > T(X_new)` as in its
//! definition. The two-sided transform removes the direction.
//!
//! Randomness is addressed by sub-streams of the check's [`SeedSpec`]: the
//! split, the posterior draws and the predictive draws each have their own
//! stream, and fold `f` of a divided check runs on its own child stream.
//! Running folds in parallel therefore gives the same result as running them
//! in order, and the posterior draws never depend on held-out values.

mod config;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{CheckConfig, Method, MethodSpec, TieMode, DEFAULT_BETA, DEFAULT_MC_SAMPLES, MIN_MC_SAMPLES};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::models::{sample_truth, with_model, AnyModel, PosteriorModel, ReplicateShape, TruthSpec};
use crate::pvalue::{two_sided, PValue};
use crate::rng::{SeedSpec, StreamRng};
use crate::splits::{make_folds, split, SplitStrategy};
use crate::statistics::{evaluate, evaluate_discrepancy, StatisticKind};
use crate::uniformity::{ks_uniform_test, KsReport};

const SPLIT_STREAM: u64 = 0;
const POSTERIOR_STREAM: u64 = 1;
const PREDICTIVE_STREAM: u64 = 2;
const TRUTH_STREAM: u64 = 3;
const FOLD_STREAM: u64 = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub method: Method,
    pub statistic: StatisticKind,
    pub p: PValue,
    /// `2 min(p, 1 − p)`, except for the divided check whose KS p-value is
    /// already an omnibus test and is copied unchanged.
    pub p_two_sided: PValue,
    pub fold_pvalues: Option<Vec<PValue>>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub n_observed: Option<usize>,
    pub n_heldout: Option<usize>,
    pub k: Option<usize>,
    pub fold_size: Option<usize>,
    pub dropped: Option<usize>,
    pub mc_samples: usize,
    pub seed: String,
    pub ks: Option<KsReport>,
    pub warnings: Vec<String>,
}

impl CheckResult {
    fn simple(cfg: &CheckConfig, p: PValue, diagnostics: Diagnostics) -> Self {
        Self {
            method: cfg.spec.method,
            statistic: cfg.statistic,
            p,
            p_two_sided: two_sided(p),
            fold_pvalues: None,
            diagnostics,
        }
    }
}

/// Runs the check named in `cfg`. `truth` is needed by POP-PC-v1 only.
pub fn run_check(
    model: &AnyModel,
    data: &Dataset,
    cfg: &CheckConfig,
    truth: Option<&TruthSpec>,
    seed: &SeedSpec,
) -> Result<CheckResult> {
    match cfg.spec.method {
        Method::Ppc => ppc(model, data, cfg, seed),
        Method::PopPcV1 => pop_pc_v1(model, data, truth, cfg, seed),
        Method::SingleSpc => single_spc(model, data, cfg, seed),
        Method::DividedSpc => divided_spc(model, data, cfg, seed),
    }
}

/// Posterior predictive check: posterior and replicates both condition on
/// the full data.
pub fn ppc(model: &AnyModel, data: &Dataset, cfg: &CheckConfig, seed: &SeedSpec) -> Result<CheckResult> {
    prepare(model, data, cfg)?;
    let shape = ReplicateShape::like(data);
    let p = with_model!(model, m => exceedance(m, data, data, &shape, cfg, seed))?;
    let diagnostics = Diagnostics {
        n_observed: Some(data.len()),
        mc_samples: cfg.spec.mc_samples,
        seed: seed.to_string(),
        ..Default::default()
    };
    Ok(CheckResult::simple(cfg, p, diagnostics))
}

/// Single split predictive check: fit on the observed part, replicate the
/// held-out shape, compare the held-out statistic.
pub fn single_spc(model: &AnyModel, data: &Dataset, cfg: &CheckConfig, seed: &SeedSpec) -> Result<CheckResult> {
    prepare(model, data, cfg)?;
    with_model!(model, m => single_spc_with(m, data, cfg, seed))
}

/// Divided split predictive check: one single SPC p-value per fold, then a
/// KS test of those p-values against Uniform(0, 1).
pub fn divided_spc(model: &AnyModel, data: &Dataset, cfg: &CheckConfig, seed: &SeedSpec) -> Result<CheckResult> {
    prepare(model, data, cfg)?;
    let k = cfg.spec.resolve_k(data)?;
    let plan = make_folds(data, k, cfg.spec.fold_kind(data), &mut seed.child(SPLIT_STREAM).rng())?;
    let fold_seed = seed.child(FOLD_STREAM);
    let folds: Vec<CheckResult> = plan
        .folds
        .par_iter()
        .enumerate()
        .map(|(f, sel)| {
            let fold_data = data.subset(sel)?;
            with_model!(model, m => single_spc_with(m, &fold_data, cfg, &fold_seed.child(f as u64)))
        })
        .collect::<Result<_>>()?;
    let fold_pvalues: Vec<PValue> = folds.iter().map(|r| r.p).collect();
    let values: Vec<f64> = fold_pvalues.iter().map(|p| p.value).collect();
    let ks = ks_uniform_test(&values, cfg.spec.ks_method)?;

    let mut warnings = Vec::new();
    warnings.extend(plan.warning.clone());
    warnings.extend(ks.warning.clone());
    if values.windows(2).all(|w| w[0] == w[1]) {
        warnings.push(format!("all {k} fold p-values equal {}", values[0]));
    }
    for (f, r) in folds.iter().enumerate() {
        for w in &r.diagnostics.warnings {
            warnings.push(format!("fold {f}: {w}"));
        }
    }
    let diagnostics = Diagnostics {
        n_observed: folds[0].diagnostics.n_observed,
        n_heldout: folds[0].diagnostics.n_heldout,
        k: Some(plan.k),
        fold_size: Some(plan.fold_size),
        dropped: Some(plan.dropped),
        mc_samples: cfg.spec.mc_samples,
        seed: seed.to_string(),
        ks: Some(ks.clone()),
        warnings,
    };
    Ok(CheckResult {
        method: Method::DividedSpc,
        statistic: cfg.statistic,
        p: ks.p,
        p_two_sided: ks.p,
        fold_pvalues: Some(fold_pvalues),
        diagnostics,
    })
}

/// POP-PC-v1: the posterior is fit on the full data and compared with
/// `r_new` fresh datasets from the true distribution. Only available when the
/// truth is known, i.e. in simulations.
pub fn pop_pc_v1(
    model: &AnyModel,
    data: &Dataset,
    truth: Option<&TruthSpec>,
    cfg: &CheckConfig,
    seed: &SeedSpec,
) -> Result<CheckResult> {
    let truth = truth.ok_or(Error::TruthUnavailable)?;
    prepare(model, data, cfg)?;
    let p = with_model!(model, m => pop_pc_with(m, data, truth, cfg, seed))?;
    let diagnostics = Diagnostics {
        n_observed: Some(data.len()),
        mc_samples: p.mc_samples,
        seed: seed.to_string(),
        ..Default::default()
    };
    Ok(CheckResult::simple(cfg, p, diagnostics))
}

fn prepare(model: &AnyModel, data: &Dataset, cfg: &CheckConfig) -> Result<()> {
    cfg.validate()?;
    model.check_data(data)?;
    if cfg.statistic.needs_groups() && data.as_grouped().is_none() {
        return Err(Error::ShapeMismatch(format!("{} needs grouped data, got {}", cfg.statistic, data.shape_name())));
    }
    Ok(())
}

fn single_spc_with<M: PosteriorModel>(
    model: &M,
    data: &Dataset,
    cfg: &CheckConfig,
    seed: &SeedSpec,
) -> Result<CheckResult> {
    let strategy = SplitStrategy::new(cfg.spec.split_kind(data), cfg.spec.q)?;
    let parts = split(data, &strategy, &mut seed.child(SPLIT_STREAM).rng())?;
    let observed = data.subset(&parts.observed)?;
    let heldout = data.subset(&parts.heldout)?;
    let shape = ReplicateShape::for_heldout(data, &parts.observed, &parts.heldout)?;
    let p = exceedance(model, &observed, &heldout, &shape, cfg, seed)?;
    let diagnostics = Diagnostics {
        n_observed: Some(observed.len()),
        n_heldout: Some(heldout.len()),
        mc_samples: cfg.spec.mc_samples,
        seed: seed.to_string(),
        ..Default::default()
    };
    Ok(CheckResult::simple(cfg, p, diagnostics))
}

/// Tally of comparisons in half units so that mid-p ties stay exact.
#[derive(Default)]
struct Tally {
    halves: u64,
    total: u64,
}

impl Tally {
    /// Records whether `above` exceeds `below`.
    fn add(&mut self, above: f64, below: f64, ties: TieMode) {
        self.total += 1;
        if above > below {
            self.halves += 2;
        } else if above == below && ties == TieMode::Midp {
            self.halves += 1;
        }
    }

    fn pvalue(&self) -> PValue {
        PValue::new(self.halves as f64 / (2 * self.total) as f64, self.total as usize)
    }
}

/// One replicate statistic. A success rate of an all-zero replicate is
/// `+∞` (no successes observed before the first failure ends).
fn replicate_statistic(kind: StatisticKind, rep: &Dataset) -> Result<f64> {
    match evaluate(kind, rep) {
        Err(Error::DivisionByZero(_)) if kind == StatisticKind::SuccessRate => Ok(f64::INFINITY),
        other => other,
    }
}

fn conditional_mean<M: PosteriorModel>(model: &M, theta: &M::Param) -> Result<f64> {
    model
        .conditional_mean(theta)
        .ok_or_else(|| Error::ShapeMismatch(format!("{} has no scalar conditional mean for mse", model.name())))
}

/// Draws `T(X_rep)` (or `T(X_rep, θ)` for a discrepancy) for one parameter draw.
fn draw_statistic<M: PosteriorModel>(
    model: &M,
    theta: &M::Param,
    shape: &ReplicateShape,
    cfg: &CheckConfig,
    rng: &mut StreamRng,
) -> Result<f64> {
    let kind = cfg.statistic;
    if cfg.spec.use_shortcut {
        if let Some(t) = model.sample_statistic(theta, kind, shape, rng) {
            return Ok(t);
        }
    }
    let rep = model.sample_predictive(theta, shape, rng)?;
    if kind.is_parameter_dependent() {
        evaluate_discrepancy(&rep, conditional_mean(model, theta)?)
    } else {
        replicate_statistic(kind, &rep)
    }
}

/// Fraction of replicates with `T(target) > T(X_rep)`, the posterior fit on `fit`.
fn exceedance<M: PosteriorModel>(
    model: &M,
    fit: &Dataset,
    target: &Dataset,
    shape: &ReplicateShape,
    cfg: &CheckConfig,
    seed: &SeedSpec,
) -> Result<PValue> {
    let s = cfg.spec.mc_samples;
    let draws = model.sample_posterior(fit, s, &mut seed.child(POSTERIOR_STREAM).rng())?;
    let mut rng = seed.child(PREDICTIVE_STREAM).rng();
    let kind = cfg.statistic;
    let fixed = if kind.is_parameter_dependent() { None } else { Some(evaluate(kind, target)?) };
    let mut tally = Tally::default();
    for theta in &draws {
        let t_obs = match fixed {
            Some(t) => t,
            None => evaluate_discrepancy(target, conditional_mean(model, theta)?)?,
        };
        let t_rep = draw_statistic(model, theta, shape, cfg, &mut rng)?;
        if t_rep.is_nan() {
            return Err(Error::NonFiniteDraw(format!("replicate {kind} is NaN")));
        }
        tally.add(t_obs, t_rep, cfg.spec.tie_mode);
    }
    Ok(tally.pvalue())
}

fn pop_pc_with<M: PosteriorModel>(
    model: &M,
    data: &Dataset,
    truth: &TruthSpec,
    cfg: &CheckConfig,
    seed: &SeedSpec,
) -> Result<PValue> {
    let s = cfg.spec.mc_samples;
    let draws = model.sample_posterior(data, s, &mut seed.child(POSTERIOR_STREAM).rng())?;
    let shape = ReplicateShape::like(data);
    let mut rng = seed.child(PREDICTIVE_STREAM).rng();
    let kind = cfg.statistic;
    let reps: Vec<f64> =
        draws.iter().map(|theta| draw_statistic(model, theta, &shape, cfg, &mut rng)).collect::<Result<_>>()?;
    let means: Option<Vec<f64>> = if kind.is_parameter_dependent() {
        Some(draws.iter().map(|t| conditional_mean(model, t)).collect::<Result<_>>()?)
    } else {
        None
    };
    let n_truth = match data.as_grouped() {
        Some(g) => g.n_groups(),
        None => data.len(),
    };
    let truth_seed = seed.child(TRUTH_STREAM);
    let mut tally = Tally::default();
    for r in 0..cfg.spec.r_new() {
        let fresh = sample_truth(truth, n_truth, &mut truth_seed.child(r as u64).rng())?;
        if fresh.shape_name() != data.shape_name() {
            return Err(Error::ShapeMismatch(format!(
                "truth produces {} data but the checked data is {}",
                fresh.shape_name(),
                data.shape_name()
            )));
        }
        match &means {
            None => {
                let t_new = evaluate(kind, &fresh)?;
                for &t_rep in &reps {
                    tally.add(t_rep, t_new, cfg.spec.tie_mode);
                }
            }
            Some(means) => {
                for (&t_rep, &m) in reps.iter().zip(means) {
                    tally.add(t_rep, evaluate_discrepancy(&fresh, m)?, cfg.spec.tie_mode);
                }
            }
        }
    }
    Ok(tally.pvalue())
}
