use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::config::LabeledTruth;
use super::experiment::{estimate_rate, RateEstimate};
use crate::checks::{run_check, CheckConfig};
use crate::data::{Dataset, IidDataset};
use crate::error::{Error, Result};
use crate::models::{sample_truth, AnyModel};
use crate::rng::SeedSpec;

/// Fewer segments than this still run but carry a warning.
pub const MIN_SEGMENTS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentCheck {
    pub config: CheckConfig,
    /// One entry per segment.
    pub outcomes: Vec<std::result::Result<(f64, f64), String>>,
    pub estimate: Option<RateEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationReport {
    pub truth_label: String,
    pub n_total: usize,
    pub n_sub: usize,
    pub n_segments: usize,
    /// Stream that permuted the data.
    pub permutation_seed: SeedSpec,
    pub warning: Option<String>,
    pub checks: Vec<SegmentCheck>,
}

/// A random permutation of `0..n` cut into `⌊n / n_sub⌋` segments of size `n_sub`.
pub fn segment_indices(n: usize, n_sub: usize, seed: &SeedSpec) -> Result<Vec<Vec<usize>>> {
    if n_sub == 0 || 2 * n_sub > n {
        return Err(Error::InvalidParameter(format!("segment size {n_sub} must lie in [1, {}]", n / 2)));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut seed.rng());
    Ok(perm.chunks_exact(n_sub).map(<[usize]>::to_vec).collect())
}

/// Checks every segment of `data` with every configuration and estimates
/// each configuration's rejection rate over segments.
pub fn segment_and_check(
    model: &AnyModel,
    data: &IidDataset,
    n_sub: usize,
    checks: &[CheckConfig],
    alpha: f64,
    one_sided: bool,
    seed: &SeedSpec,
) -> Result<SegmentationReport> {
    let permutation_seed = seed.child(n_sub as u64).child(0);
    let segments = segment_indices(data.len(), n_sub, &permutation_seed)?;
    let n_segments = segments.len();
    let warning =
        (n_segments < MIN_SEGMENTS).then(|| format!("only {n_segments} segments of size {n_sub}; rates are coarse"));
    let check_seed = seed.child(n_sub as u64).child(1);
    let segment_data: Vec<Dataset> = segments
        .iter()
        .map(|idx| {
            let values = idx.iter().map(|&i| data.values()[i]).collect();
            Ok(Dataset::Iid(IidDataset::new(values)?))
        })
        .collect::<Result<_>>()?;
    let checks = checks
        .iter()
        .enumerate()
        .map(|(c, cfg)| {
            let outcomes: Vec<_> = segment_data
                .iter()
                .enumerate()
                .map(|(s, d)| {
                    run_check(model, d, cfg, None, &check_seed.child(c as u64).child(s as u64))
                        .map(|r| (r.p.value, r.p_two_sided.value))
                        .map_err(|e| e.to_string())
                })
                .collect();
            let tested: Vec<f64> = outcomes
                .iter()
                .filter_map(|o| o.as_ref().ok())
                .map(|&(p, p2)| if one_sided { p } else { p2 })
                .collect();
            SegmentCheck { config: cfg.clone(), estimate: estimate_rate(&tested, alpha).ok(), outcomes }
        })
        .collect();
    Ok(SegmentationReport {
        truth_label: String::new(),
        n_total: data.len(),
        n_sub,
        n_segments,
        permutation_seed,
        warning,
        checks,
    })
}

/// Simulates `n_total` observations from `truth` and runs [`segment_and_check`].
#[allow(clippy::too_many_arguments)]
pub fn run_segmentation(
    model: &AnyModel,
    truth: &LabeledTruth,
    n_total: usize,
    n_sub: usize,
    checks: &[CheckConfig],
    alpha: f64,
    one_sided: bool,
    seed: &SeedSpec,
) -> Result<SegmentationReport> {
    let data = sample_truth(&truth.spec, n_total, &mut seed.child(u64::MAX).rng())?;
    let Dataset::Iid(data) = data else {
        return Err(Error::ShapeMismatch("segmentation needs exchangeable data".into()));
    };
    let mut report = segment_and_check(model, &data, n_sub, checks, alpha, one_sided, seed)?;
    report.truth_label = truth.label.clone();
    Ok(report)
}
