use std::path::Path;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::experiment::{qq_points, ExperimentReport, CHECK_STREAM, DATA_STREAM, SEGMENTATION_STREAM};
use crate::error::Result;

pub const REPORT_HEADER: [&str; 11] =
    ["method", "statistic", "N", "q", "k", "alpha", "estimate", "ci_low", "ci_high", "reps", "seed"];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// `report.csv`: one row per cell.
pub fn write_report<W: std::io::Write>(report: &ExperimentReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER)?;
    for row in &report.rows {
        let est = row.estimate;
        w.write_record([
            row.method.clone(),
            row.statistic.to_string(),
            row.n.to_string(),
            opt(row.q),
            opt(row.k),
            row.alpha.to_string(),
            opt(est.map(|e| e.rate)),
            opt(est.map(|e| e.ci_low)),
            opt(est.map(|e| e.ci_high)),
            row.reps.to_string(),
            row.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `pvalues.csv`: successful replications in long format.
pub fn write_pvalues<W: std::io::Write>(report: &ExperimentReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["cell_id", "replication", "p", "p_two_sided"])?;
    for r in &report.replicates {
        if let Ok(p) = &r.outcome {
            w.write_record([
                r.cell.to_string(),
                r.replication.to_string(),
                p.p.to_string(),
                p.p_two_sided.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `qq.csv`: Q-Q points of each cell's one-sided p-values.
pub fn write_qq<W: std::io::Write>(report: &ExperimentReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["cell_id", "u", "p_sorted"])?;
    for cell in &report.cells {
        let ps: Vec<f64> = report.cell_pvalues(cell.id).iter().map(|p| p.p).collect();
        for (u, p) in qq_points(&ps) {
            w.write_record([cell.id.to_string(), u.to_string(), p.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `cells.csv`: what each `cell_id` stands for.
pub fn write_cells<W: std::io::Write>(report: &ExperimentReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["cell_id", "truth", "method", "statistic", "N"])?;
    for c in &report.cells {
        w.write_record([
            c.id.to_string(),
            c.truth_label.clone(),
            c.label.clone(),
            c.statistic.to_string(),
            c.n.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `errors.csv`: failed replications.
pub fn write_errors<W: std::io::Write>(report: &ExperimentReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["cell_id", "replication", "error"])?;
    for r in &report.replicates {
        if let Err(e) = &r.outcome {
            w.write_record([r.cell.to_string(), r.replication.to_string(), e.clone()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `segmentation.csv`: one row per (segment size, statistic, method).
pub fn write_segmentation<W: std::io::Write>(report: &ExperimentReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "method",
        "statistic",
        "N_sub",
        "segments",
        "alpha",
        "estimate",
        "ci_low",
        "ci_high",
        "failed",
        "warning",
    ])?;
    for seg in &report.segmentation {
        for c in &seg.checks {
            let est = c.estimate;
            let failed = c.outcomes.iter().filter(|o| o.is_err()).count();
            w.write_record([
                format!("{}[{}]", c.config.spec.display_label(), seg.truth_label),
                c.config.statistic.to_string(),
                seg.n_sub.to_string(),
                seg.n_segments.to_string(),
                report.config.alpha.to_string(),
                opt(est.map(|e| e.rate)),
                opt(est.map(|e| e.ci_low)),
                opt(est.map(|e| e.ci_high)),
                failed.to_string(),
                seg.warning.clone().unwrap_or_default(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct RunRecord<'a> {
    config: &'a ExperimentConfig,
    cells: usize,
    streams: Streams,
    segmentation_permutations: Vec<String>,
    version: &'static str,
}

#[derive(Serialize)]
struct Streams {
    data: String,
    checks: String,
    segmentation: String,
}

/// `run.json`: the resolved configuration and the seed streams it used.
pub fn write_run_json<W: std::io::Write>(report: &ExperimentReport, out: W) -> Result<()> {
    let record = RunRecord {
        config: &report.config,
        cells: report.cells.len(),
        streams: Streams {
            data: format!("[{DATA_STREAM}, truth, n_index, replication]"),
            checks: format!("[{CHECK_STREAM}, cell_id, replication]"),
            segmentation: format!("[{SEGMENTATION_STREAM}, n_sub, 0]"),
        },
        segmentation_permutations: report.segmentation.iter().map(|s| s.permutation_seed.to_string()).collect(),
        version: env!("CARGO_PKG_VERSION"),
    };
    serde_json::to_writer_pretty(out, &record)?;
    Ok(())
}

/// Writes every output file into `dir`, creating it if needed.
pub fn write_outputs(report: &ExperimentReport, dir: &Path) -> Result<()> {
    use std::fs::File;
    use std::io::BufWriter;
    std::fs::create_dir_all(dir)?;
    let file = |name: &str| -> Result<BufWriter<File>> { Ok(BufWriter::new(File::create(dir.join(name))?)) };
    write_report(report, file("report.csv")?)?;
    write_pvalues(report, file("pvalues.csv")?)?;
    write_qq(report, file("qq.csv")?)?;
    write_cells(report, file("cells.csv")?)?;
    write_errors(report, file("errors.csv")?)?;
    if !report.segmentation.is_empty() {
        write_segmentation(report, file("segmentation.csv")?)?;
    }
    let mut run = file("run.json")?;
    write_run_json(report, &mut run)?;
    std::io::Write::write_all(&mut run, b"\n")?;
    Ok(())
}
