//! `spc`: run simulation studies, check a CSV dataset, or print the
//! closed-form rejection rates of a misspecification scenario.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use spc_core::checks::{CheckConfig, Method};
use spc_core::harness::{check_csv, run_experiment, write_outputs, ExperimentConfig};
use spc_core::models::ModelSpec;
use spc_core::rng::SeedSpec;
use spc_core::splits::SplitKind;
use spc_core::statistics::StatisticKind;
use spc_core::theory::{theory_report, RhoScenario};

#[derive(Parser)]
#[command(name = "spc", version, about = "Split predictive checks for Bayesian models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo size/power study described by a JSON config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a model against a CSV dataset and print the result as JSON.
    Check {
        #[arg(long)]
        data: PathBuf,
        /// e.g. `poisson_gamma:0.1,0.2`, `normal_improper`, `gaussian_hier:4`
        #[arg(long)]
        model: ModelSpec,
        /// e.g. `mean`, `mse`, `quantile_group_means:0.75`
        #[arg(long)]
        statistic: StatisticKind,
        /// `ppc`, `single_spc` or `divided_spc`
        #[arg(long)]
        method: Method,
        #[arg(long)]
        q: Option<f64>,
        /// Fold count for the divided check.
        #[arg(long, conflicts_with = "beta")]
        k: Option<usize>,
        /// Fold rule exponent: k = ⌊N^beta⌋.
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        split: Option<SplitKind>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Monte Carlo replicates per p-value.
        #[arg(long)]
        mc: Option<usize>,
    },
    /// Print ρ and the limiting rejection rates of a scenario as JSON.
    Theory {
        /// e.g. `negbin:0.01`, `binomial:0.5`, `gaussian_mse:1.414,1`
        #[arg(long)]
        scenario: RhoScenario,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 0.5)]
        q: f64,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, out } => simulate(config, out),
        Command::Check { data, model, statistic, method, q, k, beta, split, seed, mc } => {
            if method == Method::PopPcV1 {
                bail!("pop_pc_v1 needs the true data-generating process and is only available in `simulate`");
            }
            let mut cfg = CheckConfig::new(method, statistic);
            if let Some(q) = q {
                cfg.spec.q = q;
            }
            cfg.spec.k = k;
            cfg.spec.beta = beta;
            cfg.spec.split = split;
            if let Some(mc) = mc {
                cfg.spec.mc_samples = mc;
            }
            let result = check_csv(&data, &model, &cfg, &SeedSpec::new(seed))
                .with_context(|| format!("checking {}", data.display()))?;
            println!("{}", serde_json::to_string_pretty(&result)?);
            Ok(())
        }
        Command::Theory { scenario, alpha, q } => {
            let report = theory_report(&scenario, alpha, q)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
    }
}

fn simulate(config: PathBuf, out: Option<PathBuf>) -> Result<()> {
    let mut cfg = ExperimentConfig::from_path(&config).with_context(|| format!("reading {}", config.display()))?;
    let dir = match out.or_else(|| cfg.output.clone()) {
        Some(dir) => dir,
        None => bail!("no output directory: pass --out or set `output` in the config"),
    };
    cfg.output = Some(dir.clone());
    let report = run_experiment(&cfg)?;
    write_outputs(&report, &dir).with_context(|| format!("writing to {}", dir.display()))?;
    let failed = report.replicates.iter().filter(|r| r.outcome.is_err()).count();
    eprintln!("{} cells x {} replications written to {}", report.cells.len(), cfg.replications, dir.display());
    if failed > 0 {
        eprintln!("{failed} replications failed; see errors.csv");
    }
    Ok(())
}
