//! Test statistics `T_N` compared by every predictive check.
//!
//! Quantiles are empirical order statistics at 1-based rank `⌈cN⌉` with no
//! interpolation; standard deviation and autocovariance divide by `N`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{ceil_prop, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum StatisticKind {
    Mean,
    /// `(1/N) Σ x^r` for `r ∈ {2, 3}`.
    Moment(u8),
    Quantile(f64),
    StdDev,
    /// `N / Σ x`.
    SuccessRate,
    Autocorrelation(usize),
    GrandMean,
    MeanOfGroupQuantiles(f64),
    QuantileOfGroupMeans(f64),
    /// `(1/N) Σ (x - E[X | θ])²`; depends on the parameter draw.
    MseDiscrepancy,
}

impl StatisticKind {
    pub fn is_parameter_dependent(&self) -> bool {
        matches!(self, StatisticKind::MseDiscrepancy)
    }

    pub fn needs_groups(&self) -> bool {
        matches!(
            self,
            StatisticKind::GrandMean | StatisticKind::MeanOfGroupQuantiles(_) | StatisticKind::QuantileOfGroupMeans(_)
        )
    }

    fn check_params(&self) -> Result<()> {
        match *self {
            StatisticKind::Moment(r) if !(2..=3).contains(&r) => {
                Err(Error::InvalidParameter(format!("moment order must be 2 or 3, got {r}")))
            }
            StatisticKind::Quantile(c)
            | StatisticKind::MeanOfGroupQuantiles(c)
            | StatisticKind::QuantileOfGroupMeans(c)
                if !(c > 0.0 && c < 1.0) =>
            {
                Err(Error::InvalidParameter(format!("quantile level must lie in (0, 1), got {c}")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for StatisticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatisticKind::Mean => write!(f, "mean"),
            StatisticKind::Moment(r) => write!(f, "moment{r}"),
            StatisticKind::Quantile(c) => write!(f, "quantile:{c}"),
            StatisticKind::StdDev => write!(f, "std_dev"),
            StatisticKind::SuccessRate => write!(f, "success_rate"),
            StatisticKind::Autocorrelation(l) => write!(f, "autocorr:{l}"),
            StatisticKind::GrandMean => write!(f, "grand_mean"),
            StatisticKind::MeanOfGroupQuantiles(c) => write!(f, "mean_group_quantiles:{c}"),
            StatisticKind::QuantileOfGroupMeans(c) => write!(f, "quantile_group_means:{c}"),
            StatisticKind::MseDiscrepancy => write!(f, "mse"),
        }
    }
}

impl FromStr for StatisticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("unknown statistic '{s}'"));
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let level = |a: Option<&str>| -> Result<f64> {
            a.ok_or_else(bad)?.parse::<f64>().map_err(|_| Error::InvalidParameter(format!("bad level in '{s}'")))
        };
        let kind = match (name, arg) {
            ("mean", None) => StatisticKind::Mean,
            ("moment2", None) => StatisticKind::Moment(2),
            ("moment3", None) => StatisticKind::Moment(3),
            ("quantile", a) => StatisticKind::Quantile(level(a)?),
            ("std_dev", None) => StatisticKind::StdDev,
            ("success_rate", None) => StatisticKind::SuccessRate,
            ("autocorr", Some(a)) => StatisticKind::Autocorrelation(
                a.parse().map_err(|_| Error::InvalidParameter(format!("bad lag in '{s}'")))?,
            ),
            ("grand_mean", None) => StatisticKind::GrandMean,
            ("mean_group_quantiles", a) => StatisticKind::MeanOfGroupQuantiles(level(a)?),
            ("quantile_group_means", a) => StatisticKind::QuantileOfGroupMeans(level(a)?),
            ("mse", None) => StatisticKind::MseDiscrepancy,
            _ => return Err(bad()),
        };
        kind.check_params()?;
        Ok(kind)
    }
}

impl TryFrom<String> for StatisticKind {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<StatisticKind> for String {
    fn from(k: StatisticKind) -> String {
        k.to_string()
    }
}

/// Evaluates a parameter-free statistic.
pub fn evaluate(kind: StatisticKind, data: &Dataset) -> Result<f64> {
    kind.check_params()?;
    if kind.needs_groups() && data.as_grouped().is_none() {
        return Err(Error::ShapeMismatch(format!("{kind} needs grouped data, got {}", data.shape_name())));
    }
    match kind {
        StatisticKind::MseDiscrepancy => {
            Err(Error::ShapeMismatch("mse depends on the parameter; use evaluate_discrepancy".into()))
        }
        StatisticKind::Autocorrelation(lag) => match data.as_slice() {
            Some(v) => autocorrelation(v, lag),
            None => Err(Error::ShapeMismatch("autocorrelation needs a vector or time series".into())),
        },
        StatisticKind::GrandMean => Ok(mean(&data.flat_values())),
        StatisticKind::MeanOfGroupQuantiles(c) => {
            let g = data.as_grouped().expect("checked above");
            let sum: f64 = g.groups().iter().map(|grp| quantile(grp, c)).sum();
            Ok(sum / g.n_groups() as f64)
        }
        StatisticKind::QuantileOfGroupMeans(c) => {
            let g = data.as_grouped().expect("checked above");
            Ok(quantile(&g.group_means(), c))
        }
        _ => match data.as_slice() {
            Some(v) => evaluate_values(kind, v),
            None => evaluate_values(kind, &data.flat_values()),
        },
    }
}

/// Statistic of a plain vector (no grouped kinds, no MSE).
pub fn evaluate_values(kind: StatisticKind, v: &[f64]) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::ShapeMismatch("statistic of empty data".into()));
    }
    let n = v.len() as f64;
    match kind {
        StatisticKind::Mean => Ok(mean(v)),
        StatisticKind::Moment(r) => Ok(v.iter().map(|x| x.powi(r as i32)).sum::<f64>() / n),
        StatisticKind::Quantile(c) => Ok(quantile(v, c)),
        StatisticKind::StdDev => {
            let m = mean(v);
            Ok((v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt())
        }
        StatisticKind::SuccessRate => {
            let s: f64 = v.iter().sum();
            if s == 0.0 {
                Err(Error::DivisionByZero("success rate of all-zero data".into()))
            } else {
                Ok(n / s)
            }
        }
        StatisticKind::Autocorrelation(lag) => autocorrelation(v, lag),
        other => Err(Error::ShapeMismatch(format!("{other} is not defined on a plain vector"))),
    }
}

/// `(1/N) Σ (x_i - m)²` where `m = E[X | θ]`.
pub fn evaluate_discrepancy(data: &Dataset, conditional_mean: f64) -> Result<f64> {
    match data.as_slice() {
        Some(v) => Ok(mse(v, conditional_mean)),
        None => Err(Error::ShapeMismatch("mse discrepancy is defined for exchangeable or time-series data".into())),
    }
}

pub(crate) fn mse(v: &[f64], m: f64) -> f64 {
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Order statistic at 1-based rank `⌈c N⌉`.
pub fn quantile(v: &[f64], c: f64) -> f64 {
    assert!(!v.is_empty());
    let rank = ceil_prop(c, v.len()).clamp(1, v.len());
    let mut buf = v.to_vec();
    let (_, x, _) = buf.select_nth_unstable_by(rank - 1, f64::total_cmp);
    *x
}

fn autocorrelation(v: &[f64], lag: usize) -> Result<f64> {
    if lag >= v.len() {
        return Err(Error::ShapeMismatch(format!("lag {lag} needs more than {} observations", v.len())));
    }
    let m = mean(v);
    let denom: f64 = v.iter().map(|x| (x - m).powi(2)).sum();
    if denom == 0.0 {
        return Err(Error::DegenerateStatistic("autocorrelation of a constant series".into()));
    }
    let num: f64 = v.iter().zip(&v[lag..]).map(|(a, b)| (a - m) * (b - m)).sum();
    Ok(num / denom)
}
