use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::splits::{fold_units, k_from_rule, FoldKind, SplitKind};
use crate::statistics::StatisticKind;
use crate::uniformity::KsMethod;

/// Smallest Monte Carlo resolution a check accepts.
pub const MIN_MC_SAMPLES: usize = 100;
pub const DEFAULT_MC_SAMPLES: usize = 1000;
pub const DEFAULT_BETA: f64 = 0.49;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ppc,
    PopPcV1,
    SingleSpc,
    DividedSpc,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ppc => "ppc",
            Method::PopPcV1 => "pop_pc_v1",
            Method::SingleSpc => "single_spc",
            Method::DividedSpc => "divided_spc",
        }
    }

    pub fn uses_split(self) -> bool {
        matches!(self, Method::SingleSpc | Method::DividedSpc)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "ppc" => Ok(Method::Ppc),
            "pop_pc_v1" | "pop_pc" => Ok(Method::PopPcV1),
            "single_spc" | "spc" => Ok(Method::SingleSpc),
            "divided_spc" => Ok(Method::DividedSpc),
            other => Err(Error::Config(format!("unknown method {other:?}"))),
        }
    }
}

/// How a replicate statistic equal to the observed one is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieMode {
    /// Only strict exceedances count.
    #[default]
    Strict,
    /// Ties count one half.
    Midp,
}

impl FromStr for TieMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "strict" => Ok(TieMode::Strict),
            "midp" => Ok(TieMode::Midp),
            other => Err(Error::Config(format!("unknown tie mode {other:?}"))),
        }
    }
}

/// Everything about a check except the statistic. This is the unit listed
/// in an experiment's `methods`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub method: Method,
    /// Display name in reports; derived from the settings when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Observed proportion of every split.
    #[serde(default = "default_q")]
    pub q: f64,
    /// Split applied to the data (single) or to each fold (divided).
    /// Defaults by data shape: iid_random, hier_cross, ts_interpolated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitKind>,
    /// Strategy whose fold formation divides the data; defaults to `split`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fold_split: Option<SplitKind>,
    /// Explicit number of folds. Exclusive with `b`/`beta`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Fold rule `k = ⌊b U^β⌋` over the fold units `U`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default = "default_mc")]
    pub mc_samples: usize,
    #[serde(default)]
    pub tie_mode: TieMode,
    /// Fresh datasets averaged by POP-PC-v1; defaults to 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_new: Option<usize>,
    #[serde(default)]
    pub ks_method: KsMethod,
    /// Draw conjugate statistics from their exact law when possible.
    #[serde(default = "default_true")]
    pub use_shortcut: bool,
}

fn default_q() -> f64 {
    0.5
}

fn default_mc() -> usize {
    DEFAULT_MC_SAMPLES
}

fn default_true() -> bool {
    true
}

impl MethodSpec {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            label: None,
            q: default_q(),
            split: None,
            fold_split: None,
            k: None,
            b: None,
            beta: None,
            mc_samples: DEFAULT_MC_SAMPLES,
            tie_mode: TieMode::Strict,
            r_new: None,
            ks_method: KsMethod::Exact,
            use_shortcut: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mc_samples < MIN_MC_SAMPLES {
            return Err(Error::Config(format!(
                "mc_samples must be at least {MIN_MC_SAMPLES}, got {}",
                self.mc_samples
            )));
        }
        if self.method.uses_split() && !(self.q > 0.0 && self.q < 1.0) {
            return Err(Error::Config(format!("q must lie in (0, 1), got {}", self.q)));
        }
        if self.k.is_some() && (self.b.is_some() || self.beta.is_some()) {
            return Err(Error::Config("give either k or the (b, beta) fold rule, not both".into()));
        }
        if let Some(k) = self.k {
            if k < 2 {
                return Err(Error::Config(format!("k must be at least 2, got {k}")));
            }
        }
        if let Some(b) = self.b {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::Config(format!("b must be positive, got {b}")));
            }
        }
        if let Some(beta) = self.beta {
            if !(beta > 0.0 && beta < 1.0) {
                return Err(Error::Config(format!("beta must lie in (0, 1), got {beta}")));
            }
        }
        if self.r_new == Some(0) {
            return Err(Error::Config("r_new must be positive".into()));
        }
        if self.method != Method::DividedSpc
            && (self.k.is_some() || self.b.is_some() || self.beta.is_some() || self.fold_split.is_some())
        {
            return Err(Error::Config(format!("fold settings only apply to divided_spc, not {}", self.method)));
        }
        if !self.method.uses_split() && self.split.is_some() {
            return Err(Error::Config(format!("{} does not split the data", self.method)));
        }
        Ok(())
    }

    /// Inner split kind for `data`.
    pub fn split_kind(&self, data: &Dataset) -> SplitKind {
        self.split.unwrap_or(match data {
            Dataset::Iid(_) => SplitKind::IidRandom,
            Dataset::Grouped(_) => SplitKind::HierCross,
            Dataset::TimeSeries(_) => SplitKind::TsInterpolated { block: None },
        })
    }

    pub fn fold_kind(&self, data: &Dataset) -> FoldKind {
        self.fold_split.unwrap_or_else(|| self.split_kind(data)).fold_kind()
    }

    /// Number of folds used on `data`.
    pub fn resolve_k(&self, data: &Dataset) -> Result<usize> {
        if let Some(k) = self.k {
            return Ok(k);
        }
        let units = fold_units(data, self.fold_kind(data))?;
        Ok(k_from_rule(units, self.b.unwrap_or(1.0), self.beta.unwrap_or(DEFAULT_BETA)))
    }

    pub fn r_new(&self) -> usize {
        self.r_new.unwrap_or(1)
    }

    /// Label used in reports.
    pub fn display_label(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        let mut s = self.method.to_string();
        if self.method.uses_split() {
            s.push_str(&format!(" q={}", self.q));
            if let Some(split) = self.split {
                s.push_str(&format!(" {split}"));
            }
        }
        if self.method == Method::DividedSpc {
            if let Some(outer) = self.fold_split {
                s.push_str(&format!(" folds={outer}"));
            }
            match (self.k, self.b, self.beta) {
                (Some(k), _, _) => s.push_str(&format!(" k={k}")),
                (None, b, beta) => {
                    s.push_str(&format!(" beta={}", beta.unwrap_or(DEFAULT_BETA)));
                    if let Some(b) = b {
                        s.push_str(&format!(" b={b}"));
                    }
                }
            }
        }
        if self.tie_mode == TieMode::Midp {
            s.push_str(" midp");
        }
        s
    }
}

/// A fully specified check: method settings plus the statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckConfig {
    pub statistic: StatisticKind,
    #[serde(flatten)]
    pub spec: MethodSpec,
}

impl CheckConfig {
    pub fn new(method: Method, statistic: StatisticKind) -> Self {
        Self { statistic, spec: MethodSpec::new(method) }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()
    }
}
