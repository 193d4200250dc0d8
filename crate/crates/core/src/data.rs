//! Dataset shapes and index selections into them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, ValidationError};

/// Exchangeable observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IidDataset {
    values: Vec<f64>,
}

/// Ragged two-level data: `groups[i][j]` is observation `j` of group `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedDataset {
    groups: Vec<Vec<f64>>,
}

/// Observations ordered by a strictly increasing time index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesDataset {
    values: Vec<f64>,
    index: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Dataset {
    Iid(IidDataset),
    Grouped(GroupedDataset),
    TimeSeries(TimeSeriesDataset),
}

pub fn validate_values(values: &[f64]) -> Result<(), ValidationError> {
    if values.is_empty() {
        return Err(ValidationError::EmptyData);
    }
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(ValidationError::NonFiniteValue(i)),
        None => Ok(()),
    }
}

/// Positions in grouped data are counted in flattened (row-major) order.
pub fn validate_groups(groups: &[Vec<f64>]) -> Result<(), ValidationError> {
    if groups.is_empty() {
        return Err(ValidationError::EmptyData);
    }
    if groups.len() < 2 {
        return Err(ValidationError::TooFewGroups(groups.len()));
    }
    let mut offset = 0;
    for (i, g) in groups.iter().enumerate() {
        if g.is_empty() {
            return Err(ValidationError::EmptyGroup(i));
        }
        if let Some(j) = g.iter().position(|v| !v.is_finite()) {
            return Err(ValidationError::NonFiniteValue(offset + j));
        }
        offset += g.len();
    }
    Ok(())
}

pub fn validate_series(values: &[f64], index: &[f64]) -> Result<(), ValidationError> {
    validate_values(values)?;
    if values.len() != index.len() {
        return Err(ValidationError::LengthMismatch { values: values.len(), index: index.len() });
    }
    if let Some(i) = index.iter().position(|t| !t.is_finite()) {
        return Err(ValidationError::NonFiniteValue(i));
    }
    match index.windows(2).position(|w| w[1] <= w[0]) {
        Some(i) => Err(ValidationError::NonMonotoneIndex(i + 1)),
        None => Ok(()),
    }
}

impl IidDataset {
    pub fn new(values: Vec<f64>) -> Result<Self, ValidationError> {
        validate_values(&values)?;
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl GroupedDataset {
    pub fn new(groups: Vec<Vec<f64>>) -> Result<Self, ValidationError> {
        validate_groups(&groups)?;
        Ok(Self { groups })
    }

    /// Subsets produced by splitting may hold a single group; values are
    /// already known to be finite and groups nonempty.
    pub(crate) fn from_subset(groups: Vec<Vec<f64>>) -> Self {
        debug_assert!(!groups.is_empty() && groups.iter().all(|g| !g.is_empty()));
        Self { groups }
    }

    pub fn groups(&self) -> &[Vec<f64>] {
        &self.groups
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }

    pub fn total_len(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.groups.iter().flatten().copied().collect()
    }

    pub fn group_means(&self) -> Vec<f64> {
        self.groups.iter().map(|g| g.iter().sum::<f64>() / g.len() as f64).collect()
    }
}

impl TimeSeriesDataset {
    pub fn new(values: Vec<f64>, index: Vec<f64>) -> Result<Self, ValidationError> {
        validate_series(&values, &index)?;
        Ok(Self { values, index })
    }

    /// Series indexed `0, 1, 2, ...`.
    pub fn regular(values: Vec<f64>) -> Result<Self, ValidationError> {
        let index = (0..values.len()).map(|i| i as f64).collect();
        Self::new(values, index)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn index(&self) -> &[f64] {
        &self.index
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Which observations of a dataset belong to one side of a split or fold.
///
/// Flat positions refer to [`IidDataset`] / [`TimeSeriesDataset`] entries;
/// grouped selections name a source group and positions inside it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Selection {
    Flat(Vec<usize>),
    Grouped(Vec<GroupSelection>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSelection {
    pub group: usize,
    pub positions: Vec<usize>,
}

impl Selection {
    /// Number of selected observations.
    pub fn len(&self) -> usize {
        match self {
            Selection::Flat(p) => p.len(),
            Selection::Grouped(gs) => gs.iter().map(|g| g.positions.len()).sum(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Selected observations as `(group, position)` pairs; flat selections use group 0.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        match self {
            Selection::Flat(p) => p.iter().map(|&i| (0, i)).collect(),
            Selection::Grouped(gs) => gs.iter().flat_map(|g| g.positions.iter().map(move |&j| (g.group, j))).collect(),
        }
    }
}

impl Dataset {
    pub fn validate(&self) -> Result<(), ValidationError> {
        match self {
            Dataset::Iid(d) => validate_values(&d.values),
            Dataset::Grouped(d) => validate_groups(&d.groups),
            Dataset::TimeSeries(d) => validate_series(&d.values, &d.index),
        }
    }

    /// Total number of observations.
    pub fn len(&self) -> usize {
        match self {
            Dataset::Iid(d) => d.len(),
            Dataset::Grouped(d) => d.total_len(),
            Dataset::TimeSeries(d) => d.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All values in storage order (row-major for grouped data).
    pub fn flat_values(&self) -> Vec<f64> {
        match self {
            Dataset::Iid(d) => d.values.clone(),
            Dataset::Grouped(d) => d.flatten(),
            Dataset::TimeSeries(d) => d.values.clone(),
        }
    }

    /// Borrowed flat values; `None` for grouped data.
    pub fn as_slice(&self) -> Option<&[f64]> {
        match self {
            Dataset::Iid(d) => Some(&d.values),
            Dataset::TimeSeries(d) => Some(&d.values),
            Dataset::Grouped(_) => None,
        }
    }

    pub fn as_grouped(&self) -> Option<&GroupedDataset> {
        match self {
            Dataset::Grouped(d) => Some(d),
            _ => None,
        }
    }

    pub fn shape_name(&self) -> &'static str {
        match self {
            Dataset::Iid(_) => "iid",
            Dataset::Grouped(_) => "grouped",
            Dataset::TimeSeries(_) => "time series",
        }
    }

    /// Selection covering every observation.
    pub fn full_selection(&self) -> Selection {
        match self {
            Dataset::Grouped(d) => Selection::Grouped(
                d.groups
                    .iter()
                    .enumerate()
                    .map(|(group, g)| GroupSelection { group, positions: (0..g.len()).collect() })
                    .collect(),
            ),
            _ => Selection::Flat((0..self.len()).collect()),
        }
    }

    /// Materializes a selection as a new dataset of the same shape.
    pub fn subset(&self, sel: &Selection) -> Result<Dataset> {
        if sel.is_empty() {
            return Err(Error::DegenerateSplit("empty selection".into()));
        }
        match (self, sel) {
            (Dataset::Iid(d), Selection::Flat(pos)) => {
                let values = gather(&d.values, pos)?;
                Ok(Dataset::Iid(IidDataset { values }))
            }
            (Dataset::TimeSeries(d), Selection::Flat(pos)) => {
                let values = gather(&d.values, pos)?;
                let index = gather(&d.index, pos)?;
                if index.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::ShapeMismatch("time-series selection must be in increasing time order".into()));
                }
                Ok(Dataset::TimeSeries(TimeSeriesDataset { values, index }))
            }
            (Dataset::Grouped(d), Selection::Grouped(gs)) => {
                let mut groups = Vec::with_capacity(gs.len());
                for g in gs {
                    if g.positions.is_empty() {
                        continue;
                    }
                    let src = d
                        .groups
                        .get(g.group)
                        .ok_or_else(|| Error::ShapeMismatch(format!("group {} out of range", g.group)))?;
                    groups.push(gather(src, &g.positions)?);
                }
                Ok(Dataset::Grouped(GroupedDataset::from_subset(groups)))
            }
            _ => Err(Error::ShapeMismatch(format!("selection kind does not match {} data", self.shape_name()))),
        }
    }
}

fn gather(src: &[f64], pos: &[usize]) -> Result<Vec<f64>> {
    pos.iter()
        .map(|&i| src.get(i).copied().ok_or_else(|| Error::ShapeMismatch(format!("position {i} out of range"))))
        .collect()
}

impl From<IidDataset> for Dataset {
    fn from(d: IidDataset) -> Self {
        Dataset::Iid(d)
    }
}

impl From<GroupedDataset> for Dataset {
    fn from(d: GroupedDataset) -> Self {
        Dataset::Grouped(d)
    }
}

impl From<TimeSeriesDataset> for Dataset {
    fn from(d: TimeSeriesDataset) -> Self {
        Dataset::TimeSeries(d)
    }
}

/// `⌈q n⌉`, treating products within a few ulps of an integer as that integer
/// (so `0.7 * 10` gives 7, not 8).
pub fn ceil_prop(q: f64, n: usize) -> usize {
    let x = q * n as f64;
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}
