//! Command-line front end: figure-reproduction sweeps, the property suite,
//! displacement-law dumps and raw series dumps, all driven by one flat
//! key/value config file with explicit seeds.
//!
//! Exit codes: 0 success, 1 validation or I/O error, 2 property failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use icorr_core::experiment::{
    run_correlations, run_displacement, run_moments, run_properties, run_series_dump, run_speeds,
    ExperimentConfig,
};
use icorr_core::Error;

#[derive(Parser)]
#[command(
    name = "icorr",
    about = "Interference statistics for bounded 1D mobile networks with blockage",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config file (flat TOML keys); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for CSV reports.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the ensemble size (Monte Carlo realizations per variant).
    #[arg(long, global = true)]
    ensemble: Option<usize>,

    /// Worker threads for the parallel sweeps (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Interference mean/std over the probes for each obstacle density,
    /// validated by simulation at evenly spaced probes.
    Fig1,
    /// Temporal correlation coefficients per lag for the with/without
    /// blockage and static variants, validated by simulation.
    Fig2,
    /// Lag-1 correlation against user count and speed (zero think time)
    /// with static baselines and simulation spot checks.
    Fig3,
    /// Structural property suite; exits 2 if any check fails.
    Properties,
    /// Dump the displacement law of the configured mobility model.
    Displacement {
        /// Time lag in slots (defaults to the first configured lag).
        #[arg(long)]
        lag: Option<u32>,
    },
    /// Dump raw interference series over the configured ensemble.
    Simulate,
}

fn load_config(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            ExperimentConfig::from_toml_str(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(ensemble) = cli.ensemble {
        config.ensemble = ensemble;
    }
    config.validate()?;
    Ok(config)
}

fn write_report(
    path: &Path,
    write: impl FnOnce(&mut fs::File) -> std::io::Result<()>,
) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut file =
        fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write(&mut file)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<ExitCode> {
    let config = load_config(cli)?;
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("configuring worker threads")?;
    }
    match &cli.command {
        Command::Fig1 => {
            let report = run_moments(&config)?;
            write_report(&cli.out.join("fig1.csv"), |f| report.write_csv(f))?;
        }
        Command::Fig2 => {
            let report = run_correlations(&config)?;
            write_report(&cli.out.join("fig2.csv"), |f| report.write_csv(f))?;
        }
        Command::Fig3 => {
            let report = run_speeds(&config)?;
            write_report(&cli.out.join("fig3.csv"), |f| report.write_csv(f))?;
        }
        Command::Properties => {
            let report = run_properties(&config)?;
            write_report(&cli.out.join("properties.csv"), |f| report.write_csv(f))?;
            let failed: Vec<_> = report.rows.iter().filter(|r| r.status == "fail").collect();
            println!(
                "property checks: {} total, {} failed",
                report.rows.len(),
                failed.len()
            );
            for row in &failed {
                eprintln!("FAIL {} [{}]: {}", row.check, row.params, row.detail);
            }
            if !report.all_pass {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Displacement { lag } => {
            let lag = lag.unwrap_or_else(|| config.lags.first().copied().unwrap_or(1));
            let report = run_displacement(&config, lag)?;
            write_report(&cli.out.join("displacement.csv"), |f| report.write_csv(f))?;
        }
        Command::Simulate => {
            let report = run_series_dump(&config)?;
            write_report(&cli.out.join("series.csv"), |f| report.write_csv(f))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(err) => {
            if let Some(Error::Validation(problems)) = err.downcast_ref::<Error>() {
                eprintln!("invalid configuration:");
                for p in problems {
                    eprintln!("  - {p}");
                }
            } else {
                eprintln!("error: {err:#}");
            }
            ExitCode::from(1)
        }
    }
}
