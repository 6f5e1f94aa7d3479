use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hvcollapse::harness::RunOptions;
use hvcollapse_cli::{
    cmd_collapse, cmd_evolve, cmd_sweep, parse_evolve_spec, parse_spec, parse_values, CliError, Override, SweepAxis,
};

/// Collapse-dynamics experiments on hidden-variable sequence states.
///
/// Exit status: 0 on success (and, for `collapse`, a passing goodness-of-fit
/// verdict), 2 when a `collapse` run fails the verdict, 1 on any
/// configuration or I/O error.
#[derive(Debug, Parser)]
#[command(name = "hvcollapse", version)]
struct Cli {
    /// Worker threads for trials (0 = all cores, 1 = sequential).
    #[arg(long, global = true, env = "HVCOLLAPSE_WORKERS", default_value_t = 0)]
    workers: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one collapse experiment: writes report.json and trials.csv.
    Collapse {
        /// JSON experiment spec.
        #[arg(long)]
        spec: PathBuf,
        /// Override a spec value, e.g. `window.f=0.999`. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Integrate the lattice Schroedinger equation: writes trajectory.csv and summary.json.
    Evolve {
        /// JSON lattice spec (sites, mass, box_length, scheme, dt, steps, initial).
        #[arg(long)]
        spec: PathBuf,
        /// Override a spec value. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Repeat an experiment over values of one parameter: writes one
    /// subdirectory per value and summary.csv.
    Sweep {
        /// JSON experiment spec used as the base.
        #[arg(long)]
        spec: PathBuf,
        /// Override a base spec value. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Parameter to vary: f, N, d or R.
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long)]
        values: String,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

fn overrides(set: &[String]) -> Result<Vec<Override>, CliError> {
    set.iter().map(|s| s.parse()).collect()
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let options = RunOptions { workers: cli.workers };
    match cli.command {
        Command::Collapse { spec, set, out } => {
            let spec = parse_spec(&spec, &overrides(&set)?)?;
            let report = cmd_collapse(&spec, &out, options)?;
            println!(
                "fixation frequencies {:?}  TV {:.5}  chi-square {}  exhausted {}/{}  {}",
                report.fixation_frequencies,
                report.total_variation,
                report
                    .chi_square
                    .as_ref()
                    .map(|c| format!("{:.3} (dof {})", c.statistic, c.dof))
                    .unwrap_or_else(|| "n/a".into()),
                report.exhausted,
                report.trials,
                if report.pass { "PASS" } else { "FAIL" }
            );
            Ok(report.pass)
        }
        Command::Evolve { spec, set, out } => {
            let spec = parse_evolve_spec(&spec, &overrides(&set)?)?;
            let summary = cmd_evolve(&spec, &out)?;
            println!(
                "{} frames  norm {:.12} -> {:.12}  energy {:.12} -> {:.12}",
                summary.frames, summary.initial_norm, summary.final_norm, summary.initial_energy, summary.final_energy
            );
            Ok(true)
        }
        Command::Sweep {
            spec,
            set,
            axis,
            values,
            out,
        } => {
            let spec = parse_spec(&spec, &overrides(&set)?)?;
            let axis: SweepAxis = axis.parse()?;
            let values = parse_values(&values)?;
            for point in cmd_sweep(&spec, axis, &values, &out, options)? {
                let r = &point.report;
                println!(
                    "{:<10} TV {:.5}  median steps {}  exhausted {:.4}",
                    point.value,
                    r.total_variation,
                    r.steps.map(|s| s.median.to_string()).unwrap_or_else(|| "-".into()),
                    r.exhausted_fraction
                );
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
