//! Monte Carlo harness: estimates test size and power of the checks over a
//! grid of truths, sample sizes, statistics and methods, and runs checks on
//! CSV data.
//!
//! Every dataset and every check draws from a stream addressed by its grid
//! position and replication number, so reports do not depend on how many
//! threads ran them.

mod config;
mod csv_input;
mod experiment;
mod output;
mod segmentation;

pub use config::{ExperimentConfig, LabeledTruth, SegmentationConfig, MIN_REPLICATIONS};
pub use csv_input::{check_csv, check_dataset, read_dataset, read_dataset_path};
pub use experiment::{
    cells, check_configs, estimate_rate, qq_points, run_experiment, wilson_interval, Cell, ExperimentReport, Pvalues,
    RateEstimate, Replicate, ReportRow, CHECK_STREAM, DATA_STREAM, SEGMENTATION_STREAM, Z_95,
};
pub use output::{
    write_cells, write_errors, write_outputs, write_pvalues, write_qq, write_report, write_run_json,
    write_segmentation, REPORT_HEADER,
};
pub use segmentation::{
    run_segmentation, segment_and_check, segment_indices, SegmentCheck, SegmentationReport, MIN_SEGMENTS,
};
