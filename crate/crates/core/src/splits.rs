//! Splitting data into an observed part and a held-out part, and dividing
//! data into equal folds.
//!
//! Selections always list positions in increasing order, so time-series
//! subsets stay in time order.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{ceil_prop, Dataset, GroupSelection, Selection};
use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// How observations are assigned to the observed side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SplitKind {
    /// Uniformly random `⌈qN⌉`-subset observed.
    IidRandom,
    /// First `⌈qN⌉` in storage order observed.
    IidPrefix,
    /// `⌈qI⌉` randomly chosen whole groups observed.
    HierCross,
    /// Within every group, `⌈qJ_i⌉` random observations observed.
    HierWithin,
    /// First `⌈qN⌉` in time order observed.
    TsExtrapolated,
    /// Within each consecutive block of `m`, the first `⌈qm⌉` observed.
    /// `None` means `max(⌊N/20⌋, 2)`.
    TsInterpolated { block: Option<usize> },
}

/// A split rule with its observed proportion `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitStrategy {
    pub kind: SplitKind,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitResult {
    pub observed: Selection,
    pub heldout: Selection,
}

/// How fold membership is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldKind {
    /// Random partition of observations.
    Random,
    /// Consecutive runs in storage/time order.
    Contiguous,
    /// Every k-th observation, so each fold spans the whole time range.
    Strided,
    /// Random partition of whole groups.
    GroupPartition,
    /// Random partition inside every group; each fold keeps all groups.
    WithinPartition,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub kind: FoldKind,
    pub folds: Vec<Selection>,
    /// Units per fold (observations, or groups for a group partition).
    pub fold_size: usize,
    /// Observations left out of every fold.
    pub dropped: usize,
    pub warning: Option<String>,
}

impl SplitKind {
    /// Fold formation matching this split kind.
    pub fn fold_kind(self) -> FoldKind {
        match self {
            SplitKind::IidRandom => FoldKind::Random,
            SplitKind::IidPrefix | SplitKind::TsExtrapolated => FoldKind::Contiguous,
            SplitKind::TsInterpolated { .. } => FoldKind::Strided,
            SplitKind::HierCross => FoldKind::GroupPartition,
            SplitKind::HierWithin => FoldKind::WithinPartition,
        }
    }

    pub fn needs_groups(self) -> bool {
        matches!(self, SplitKind::HierCross | SplitKind::HierWithin)
    }
}

impl fmt::Display for SplitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitKind::IidRandom => f.write_str("iid_random"),
            SplitKind::IidPrefix => f.write_str("iid_prefix"),
            SplitKind::HierCross => f.write_str("hier_cross"),
            SplitKind::HierWithin => f.write_str("hier_within"),
            SplitKind::TsExtrapolated => f.write_str("ts_extrapolated"),
            SplitKind::TsInterpolated { block: None } => f.write_str("ts_interpolated"),
            SplitKind::TsInterpolated { block: Some(m) } => write!(f, "ts_interpolated:{m}"),
        }
    }
}

impl FromStr for SplitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Ok(match s {
            "iid_random" => SplitKind::IidRandom,
            "iid_prefix" => SplitKind::IidPrefix,
            "hier_cross" => SplitKind::HierCross,
            "hier_within" => SplitKind::HierWithin,
            "ts_extrapolated" => SplitKind::TsExtrapolated,
            "ts_interpolated" => SplitKind::TsInterpolated { block: None },
            _ => {
                let m = s
                    .strip_prefix("ts_interpolated:")
                    .and_then(|m| m.parse::<usize>().ok())
                    .ok_or_else(|| Error::Config(format!("unknown split strategy {s:?}")))?;
                if m < 2 {
                    return Err(Error::Config(format!("interpolation block must be >= 2, got {m}")));
                }
                SplitKind::TsInterpolated { block: Some(m) }
            }
        })
    }
}

impl TryFrom<String> for SplitKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SplitKind> for String {
    fn from(k: SplitKind) -> String {
        k.to_string()
    }
}

impl SplitStrategy {
    pub fn new(kind: SplitKind, q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidParameter(format!("split proportion q must be in (0, 1), got {q}")));
        }
        Ok(Self { kind, q })
    }
}

/// Splits `data` into observed and held-out selections.
pub fn split(data: &Dataset, strategy: &SplitStrategy, rng: &mut StreamRng) -> Result<SplitResult> {
    let SplitStrategy { kind, q } = *strategy;
    SplitStrategy::new(kind, q)?;
    let result = match kind {
        SplitKind::HierCross => hier_cross(data, q, rng)?,
        SplitKind::HierWithin => hier_within(data, q, rng)?,
        _ => {
            let n = flat_len(data, kind)?;
            let n_obs = ceil_prop(q, n);
            let observed: Vec<usize> = match kind {
                SplitKind::IidRandom => {
                    let mut o = sample(rng, n, n_obs.min(n)).into_vec();
                    o.sort_unstable();
                    o
                }
                SplitKind::IidPrefix | SplitKind::TsExtrapolated => (0..n_obs.min(n)).collect(),
                SplitKind::TsInterpolated { block } => {
                    let m = block.unwrap_or_else(|| default_block(n));
                    if m < 2 {
                        return Err(Error::InvalidParameter(format!("interpolation block must be >= 2, got {m}")));
                    }
                    (0..n)
                        .step_by(m)
                        .flat_map(|start| {
                            let len = m.min(n - start);
                            start..start + ceil_prop(q, len)
                        })
                        .collect()
                }
                SplitKind::HierCross | SplitKind::HierWithin => unreachable!(),
            };
            let heldout = complement(&observed, n);
            SplitResult { observed: Selection::Flat(observed), heldout: Selection::Flat(heldout) }
        }
    };
    if result.observed.is_empty() || result.heldout.is_empty() {
        return Err(Error::DegenerateSplit(format!(
            "{kind} with q={q} leaves {} observed and {} held out",
            result.observed.len(),
            result.heldout.len()
        )));
    }
    Ok(result)
}

/// `max(⌊N/20⌋, 2)`.
pub fn default_block(n: usize) -> usize {
    (n / 20).max(2)
}

fn flat_len(data: &Dataset, kind: SplitKind) -> Result<usize> {
    if data.as_grouped().is_some() {
        return Err(Error::ShapeMismatch(format!("{kind} needs ungrouped data")));
    }
    Ok(data.len())
}

fn groups_of(data: &Dataset, what: &str) -> Result<Vec<usize>> {
    data.as_grouped().map(|g| g.group_sizes()).ok_or_else(|| Error::ShapeMismatch(format!("{what} needs grouped data")))
}

fn complement(sorted: &[usize], n: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(n - sorted.len());
    let mut it = sorted.iter().peekable();
    for i in 0..n {
        if it.peek() == Some(&&i) {
            it.next();
        } else {
            out.push(i);
        }
    }
    out
}

fn hier_cross(data: &Dataset, q: f64, rng: &mut StreamRng) -> Result<SplitResult> {
    let sizes = groups_of(data, "hier_cross")?;
    let n_groups = sizes.len();
    let mut chosen = sample(rng, n_groups, ceil_prop(q, n_groups).min(n_groups)).into_vec();
    chosen.sort_unstable();
    let rest = complement(&chosen, n_groups);
    let whole = |ids: Vec<usize>| {
        Selection::Grouped(
            ids.into_iter().map(|group| GroupSelection { group, positions: (0..sizes[group]).collect() }).collect(),
        )
    };
    Ok(SplitResult { observed: whole(chosen), heldout: whole(rest) })
}

fn hier_within(data: &Dataset, q: f64, rng: &mut StreamRng) -> Result<SplitResult> {
    let sizes = groups_of(data, "hier_within")?;
    let mut observed = Vec::with_capacity(sizes.len());
    let mut heldout = Vec::with_capacity(sizes.len());
    for (group, &j) in sizes.iter().enumerate() {
        let n_obs = ceil_prop(q, j);
        if n_obs == 0 || n_obs >= j {
            return Err(Error::DegenerateSplit(format!("group {group} of size {j} cannot be split with q={q}")));
        }
        let mut o = sample(rng, j, n_obs).into_vec();
        o.sort_unstable();
        let h = complement(&o, j);
        observed.push(GroupSelection { group, positions: o });
        heldout.push(GroupSelection { group, positions: h });
    }
    Ok(SplitResult { observed: Selection::Grouped(observed), heldout: Selection::Grouped(heldout) })
}

/// `max(⌊b N^β⌋, 2)`.
pub fn k_from_rule(n: usize, b: f64, beta: f64) -> usize {
    let x = b * (n as f64).powf(beta);
    // absorb rounding when b N^β is an integer up to a few ulps
    let k = (x * (1.0 + 1e-12)).floor();
    if k.is_finite() && k >= 2.0 {
        k as usize
    } else {
        2
    }
}

/// Number of units the fold rule divides: observations, groups for a group
/// partition, and the smallest group size for a within-group partition.
pub fn fold_units(data: &Dataset, kind: FoldKind) -> Result<usize> {
    match kind {
        FoldKind::GroupPartition => Ok(groups_of(data, "group folds")?.len()),
        FoldKind::WithinPartition => Ok(groups_of(data, "within-group folds")?.into_iter().min().unwrap_or(0)),
        _ => {
            if data.as_grouped().is_some() {
                return Err(Error::ShapeMismatch(format!("{kind:?} folds need ungrouped data")));
            }
            Ok(data.len())
        }
    }
}

/// Divides `data` into `k` disjoint folds of equal size, dropping the remainder.
pub fn make_folds(data: &Dataset, k: usize, kind: FoldKind, rng: &mut StreamRng) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 folds, got {k}")));
    }
    let units = fold_units(data, kind)?;
    let size = units / k;
    if size < 2 {
        return Err(Error::TooManyFolds(format!("{k} folds of {units} units leave {size} per fold")));
    }
    let warning = (size < 4).then(|| format!("{k} folds of {units} units leave only {size} per fold"));

    let folds: Vec<Selection> = match kind {
        FoldKind::Random => {
            let mut perm: Vec<usize> = (0..units).collect();
            perm.shuffle(rng);
            perm.chunks_exact(size)
                .take(k)
                .map(|c| {
                    let mut c = c.to_vec();
                    c.sort_unstable();
                    Selection::Flat(c)
                })
                .collect()
        }
        FoldKind::Contiguous => (0..k).map(|f| Selection::Flat((f * size..(f + 1) * size).collect())).collect(),
        FoldKind::Strided => (0..k).map(|f| Selection::Flat((0..size).map(|i| f + i * k).collect())).collect(),
        FoldKind::GroupPartition => {
            let sizes = groups_of(data, "group folds")?;
            let mut perm: Vec<usize> = (0..units).collect();
            perm.shuffle(rng);
            perm.chunks_exact(size)
                .take(k)
                .map(|c| {
                    let mut c = c.to_vec();
                    c.sort_unstable();
                    Selection::Grouped(
                        c.into_iter()
                            .map(|group| GroupSelection { group, positions: (0..sizes[group]).collect() })
                            .collect(),
                    )
                })
                .collect()
        }
        FoldKind::WithinPartition => {
            let sizes = groups_of(data, "within-group folds")?;
            let mut folds = vec![Vec::with_capacity(sizes.len()); k];
            for (group, &j) in sizes.iter().enumerate() {
                let per = j / k;
                let mut perm: Vec<usize> = (0..j).collect();
                perm.shuffle(rng);
                for (fold, chunk) in folds.iter_mut().zip(perm.chunks_exact(per)) {
                    let mut positions = chunk.to_vec();
                    positions.sort_unstable();
                    fold.push(GroupSelection { group, positions });
                }
            }
            folds.into_iter().map(Selection::Grouped).collect()
        }
    };
    let covered: usize = folds.iter().map(Selection::len).sum();
    Ok(FoldPlan { k, kind, folds, fold_size: size, dropped: data.len() - covered, warning })
}
