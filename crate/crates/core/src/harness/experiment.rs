use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::segmentation::{run_segmentation, SegmentationReport};
use crate::checks::{run_check, CheckConfig, Method};
use crate::error::{Error, Result};
use crate::models::{sample_truth, AnyModel};
use crate::rng::SeedSpec;
use crate::statistics::StatisticKind;

/// Two-sided 97.5% standard normal quantile.
pub const Z_95: f64 = 1.959963984540054;

/// Top-level stream for simulated datasets: `[DATA, truth, n index, replication]`.
pub const DATA_STREAM: u64 = 0;
/// Top-level stream for checks: `[CHECK, cell, replication]`.
pub const CHECK_STREAM: u64 = 1;
/// Top-level stream for the segmentation study.
pub const SEGMENTATION_STREAM: u64 = 2;

/// Rejection rate with a 95% Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub rejections: usize,
    pub n: usize,
}

/// Fraction of `pvalues` strictly below `alpha`, with its Wilson interval.
pub fn estimate_rate(pvalues: &[f64], alpha: f64) -> Result<RateEstimate> {
    if pvalues.is_empty() {
        return Err(Error::InsufficientData("no p-values to estimate a rate from".into()));
    }
    let rejections = pvalues.iter().filter(|&&p| p < alpha).count();
    let (ci_low, ci_high) = wilson_interval(rejections, pvalues.len(), Z_95);
    Ok(RateEstimate { rate: rejections as f64 / pvalues.len() as f64, ci_low, ci_high, rejections, n: pvalues.len() })
}

/// Wilson score interval for `successes` out of `n`.
pub fn wilson_interval(successes: usize, n: usize, z: f64) -> (f64, f64) {
    let n_f = n as f64;
    let p = successes as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = z / denom * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt();
    // the interval always contains p; clamp rounding at the ends
    ((center - half).clamp(0.0, p), (center + half).clamp(p, 1.0))
}

/// Plotting positions `((i − 0.5)/n, p_(i))`.
pub fn qq_points(pvalues: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = pvalues.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted.into_iter().enumerate().map(|(i, p)| ((i as f64 + 0.5) / n, p)).collect()
}

/// One grid cell of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub id: usize,
    pub truth: usize,
    pub truth_label: String,
    pub n_index: usize,
    pub n: usize,
    pub statistic: StatisticKind,
    pub method: usize,
    /// `method label[truth label]`, the report's method column.
    pub label: String,
}

/// The outcome of one replication of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replicate {
    pub cell: usize,
    pub replication: usize,
    pub outcome: std::result::Result<Pvalues, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pvalues {
    pub p: f64,
    pub p_two_sided: f64,
    pub k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub cell: usize,
    pub method: String,
    pub statistic: StatisticKind,
    pub n: usize,
    pub q: Option<f64>,
    pub k: Option<usize>,
    pub alpha: f64,
    /// `None` when every replication failed.
    pub estimate: Option<RateEstimate>,
    /// Successful replications.
    pub reps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub cells: Vec<Cell>,
    pub rows: Vec<ReportRow>,
    /// Sorted by `(cell, replication)`.
    pub replicates: Vec<Replicate>,
    pub segmentation: Vec<SegmentationReport>,
}

impl ExperimentReport {
    /// Successful `(p, p_two_sided)` pairs of a cell in replication order.
    pub fn cell_pvalues(&self, cell: usize) -> Vec<Pvalues> {
        self.replicates.iter().filter(|r| r.cell == cell).filter_map(|r| r.outcome.as_ref().ok().copied()).collect()
    }

    pub fn row(&self, method_label: &str, statistic: StatisticKind, n: usize) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.method == method_label && r.statistic == statistic && r.n == n)
    }
}

/// Lists cells in the order truth, sample size, statistic, method.
pub fn cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for (t, truth) in cfg.truths.iter().enumerate() {
        for (n_index, &n) in cfg.n_grid.iter().enumerate() {
            for &statistic in &cfg.statistics {
                for (m, spec) in cfg.methods.iter().enumerate() {
                    out.push(Cell {
                        id: out.len(),
                        truth: t,
                        truth_label: truth.label.clone(),
                        n_index,
                        n,
                        statistic,
                        method: m,
                        label: format!("{}[{}]", spec.display_label(), truth.label),
                    });
                }
            }
        }
    }
    out
}

/// Runs every cell `replications` times. Each replication draws one dataset
/// per (truth, sample size) and every statistic and method of that pair is
/// checked on it. A failed check becomes an error entry for that replication.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let model = cfg.model.build()?;
    let cells = cells(cfg);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let root = SeedSpec::new(cfg.master_seed);

    let tasks: Vec<(usize, usize, usize)> = (0..cfg.truths.len())
        .flat_map(|t| (0..cfg.n_grid.len()).flat_map(move |ni| (0..cfg.replications).map(move |r| (t, ni, r))))
        .collect();
    let (mut replicates, segmentation) = pool.install(|| {
        let replicates: Vec<Replicate> =
            tasks.par_iter().flat_map_iter(|&(t, ni, r)| run_task(cfg, &model, &cells, &root, t, ni, r)).collect();
        let segmentation = match &cfg.segmentation {
            Some(seg) => seg
                .n_sub
                .iter()
                .map(|&n_sub| {
                    run_segmentation(
                        &model,
                        &seg.truth,
                        seg.n_total,
                        n_sub,
                        &check_configs(cfg),
                        cfg.alpha,
                        cfg.one_sided,
                        &root.child(SEGMENTATION_STREAM),
                    )
                })
                .collect::<Result<Vec<_>>>(),
            None => Ok(Vec::new()),
        };
        (replicates, segmentation)
    });
    replicates.sort_by_key(|r| (r.cell, r.replication));

    let rows = cells.iter().map(|cell| report_row(cfg, cell, &replicates)).collect();
    Ok(ExperimentReport { config: cfg.clone(), cells, rows, replicates, segmentation: segmentation? })
}

/// Every (statistic, method) pair of the experiment.
pub fn check_configs(cfg: &ExperimentConfig) -> Vec<CheckConfig> {
    cfg.statistics
        .iter()
        .flat_map(|&statistic| cfg.methods.iter().map(move |spec| CheckConfig { statistic, spec: spec.clone() }))
        .collect()
}

fn run_task(
    cfg: &ExperimentConfig,
    model: &AnyModel,
    cells: &[Cell],
    root: &SeedSpec,
    t: usize,
    ni: usize,
    r: usize,
) -> Vec<Replicate> {
    let truth = &cfg.truths[t].spec;
    let n = cfg.n_grid[ni];
    let data_seed = root.child(DATA_STREAM).child(t as u64).child(ni as u64).child(r as u64);
    let data = sample_truth(truth, n, &mut data_seed.rng());
    cells
        .iter()
        .filter(|c| c.truth == t && c.n_index == ni)
        .map(|cell| {
            let outcome = match &data {
                Err(e) => Err(format!("data generation: {e}")),
                Ok(data) => {
                    let check = CheckConfig { statistic: cell.statistic, spec: cfg.methods[cell.method].clone() };
                    let seed = root.child(CHECK_STREAM).child(cell.id as u64).child(r as u64);
                    run_check(model, data, &check, Some(truth), &seed)
                        .map(|res| Pvalues { p: res.p.value, p_two_sided: res.p_two_sided.value, k: res.diagnostics.k })
                        .map_err(|e| e.to_string())
                }
            };
            Replicate { cell: cell.id, replication: r, outcome }
        })
        .collect()
}

fn report_row(cfg: &ExperimentConfig, cell: &Cell, replicates: &[Replicate]) -> ReportRow {
    let spec = &cfg.methods[cell.method];
    let ok: Vec<Pvalues> =
        replicates.iter().filter(|r| r.cell == cell.id).filter_map(|r| r.outcome.as_ref().ok().copied()).collect();
    let tested: Vec<f64> = ok.iter().map(|p| if cfg.one_sided { p.p } else { p.p_two_sided }).collect();
    ReportRow {
        cell: cell.id,
        method: cell.label.clone(),
        statistic: cell.statistic,
        n: cell.n,
        q: spec.method.uses_split().then_some(spec.q),
        k: if spec.method == Method::DividedSpc { ok.iter().find_map(|p| p.k) } else { None },
        alpha: cfg.alpha,
        estimate: estimate_rate(&tested, cfg.alpha).ok(),
        reps: ok.len(),
        seed: cfg.master_seed,
    }
}
