//! Split predictive checks for Bayesian models.
//!
//! A predictive check compares a statistic of observed data with the same
//! statistic of data replicated from a fitted model. The split predictive
//! check fits the posterior on one part of the data and checks the other;
//! the divided check repeats that on `k` folds and tests the fold p-values
//! for uniformity. Posterior predictive checks and POP-PC-v1 are provided
//! for comparison, along with closed-form large-sample theory and a seeded
//! Monte Carlo harness.

// `!(x > 0.0)` guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod data;
pub mod error;
pub mod harness;
pub mod models;
pub mod pvalue;
pub mod rng;
pub mod splits;
pub mod statistics;
pub mod theory;
pub mod uniformity;

pub use checks::{
    divided_spc, pop_pc_v1, ppc, run_check, single_spc, CheckConfig, CheckResult, Diagnostics, Method, MethodSpec,
    TieMode,
};
pub use data::{Dataset, GroupedDataset, IidDataset, Selection, TimeSeriesDataset};
pub use error::{Error, Result, ValidationError};
pub use harness::{
    check_csv, estimate_rate, qq_points, run_experiment, write_outputs, ExperimentConfig, ExperimentReport,
    RateEstimate,
};
pub use models::{AnyModel, ModelSpec, PosteriorModel, ReplicateShape, TruthSpec};
pub use pvalue::{two_sided, PValue};
pub use rng::{SeedSpec, StreamRng};
pub use splits::{k_from_rule, make_folds, split, FoldKind, SplitKind, SplitStrategy};
pub use statistics::{evaluate, evaluate_discrepancy, StatisticKind};
pub use theory::{asym_power_two_sided, asym_rejection_prob, rho_squared, RhoScenario};
pub use uniformity::{kolmogorov_cdf, ks_statistic, ks_uniform_pvalue, ks_uniform_test, KsMethod, KsReport};
