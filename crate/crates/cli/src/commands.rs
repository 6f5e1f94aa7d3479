use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use hvcollapse::harness::{run_experiment, EngineKind, ExperimentReport, ExperimentSpec, RunOptions, StepSizes};
use hvcollapse::lattice::{evolve, LatticeHamiltonian, StepScheme};
use hvcollapse::output::{write_atomic, write_atomic_with};
use hvcollapse::{HiddenState, WaveVector};

use crate::error::CliError;
use crate::spec::EvolveSpec;

/// Run a collapse experiment and write its outputs into `out`.
pub fn cmd_collapse(spec: &ExperimentSpec, out: &Path, options: RunOptions) -> Result<ExperimentReport, CliError> {
    let run = run_experiment(spec, options)?;
    run.write_to(out)?;
    Ok(run.report)
}

pub(crate) fn evolve_initial_state(spec: &EvolveSpec) -> Result<(LatticeHamiltonian, WaveVector), CliError> {
    let h = LatticeHamiltonian::new(spec.sites, spec.mass, spec.box_length)?;
    StepScheme::new(spec.scheme, spec.dt)?;
    let init = &spec.initial;
    let psi = match (init.eigenmode, &init.counts) {
        (Some(_), Some(_)) => return Err(CliError::validation("initial", "give eigenmode or counts, not both")),
        (None, None) => return Err(CliError::validation("initial", "missing eigenmode or counts")),
        (Some(n), None) => {
            if init.phases.is_some() {
                return Err(CliError::validation("initial.phases", "only valid with counts"));
            }
            h.eigenmode(n)?
        }
        (None, Some(counts)) => {
            if counts.len() != spec.sites {
                return Err(CliError::validation(
                    "initial.counts",
                    format!("{} counts for {} sites", counts.len(), spec.sites),
                ));
            }
            let gamma = counts
                .iter()
                .enumerate()
                .flat_map(|(i, &c)| std::iter::repeat_n(i + 1, c))
                .collect();
            let phases = init.phases.clone().unwrap_or_else(|| vec![0.0; spec.sites]);
            HiddenState::new(gamma, phases)
                .map_err(|e| CliError::validation("initial", e.to_string()))?
                .to_wave()
        }
    };
    Ok((h, psi))
}

#[derive(Debug, Serialize)]
pub struct EvolveSummary {
    pub spec: EvolveSpec,
    pub coupling: f64,
    pub eigenvalues: Vec<f64>,
    pub initial_norm: f64,
    pub final_norm: f64,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub frames: usize,
}

/// Integrate the lattice equation; writes `trajectory.csv` and `summary.json`.
pub fn cmd_evolve(spec: &EvolveSpec, out: &Path) -> Result<EvolveSummary, CliError> {
    let (h, psi) = evolve_initial_state(spec)?;
    let scheme = StepScheme::new(spec.scheme, spec.dt)?;
    let traj = evolve(&psi, &h, scheme, spec.steps, spec.stride.unwrap_or(1))?;
    let last = traj.last();
    let summary = EvolveSummary {
        spec: spec.clone(),
        coupling: h.coupling(),
        eigenvalues: h.eigenvalues(),
        initial_norm: psi.norm(),
        final_norm: last.norm(),
        initial_energy: h.energy(&psi).re,
        final_energy: h.energy(last).re,
        frames: traj.frames.len(),
    };
    write_atomic_with(&out.join("trajectory.csv"), |buf| traj.write_csv(buf)).map_err(io_err(out))?;
    let mut json = serde_json::to_vec_pretty(&summary).map_err(hvcollapse::Error::from)?;
    json.push(b'\n');
    write_atomic(&out.join("summary.json"), &json).map_err(io_err(out))?;
    Ok(summary)
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_owned(),
        source,
    }
}

/// Engine parameter a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// `window.f`
    F,
    /// Sequence length `n` of the resample or window engine.
    N,
    /// Uniform random-walk step size.
    D,
    /// Trial count.
    R,
}

impl std::str::FromStr for SweepAxis {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "f" => Ok(SweepAxis::F),
            "N" | "n" => Ok(SweepAxis::N),
            "d" => Ok(SweepAxis::D),
            "R" | "trials" => Ok(SweepAxis::R),
            other => Err(CliError::validation("--axis", format!("unknown axis `{other}` (expected f, N, d or R)"))),
        }
    }
}

impl SweepAxis {
    fn name(self) -> &'static str {
        match self {
            SweepAxis::F => "f",
            SweepAxis::N => "N",
            SweepAxis::D => "d",
            SweepAxis::R => "R",
        }
    }

    /// `base` with this axis set to `value`.
    pub fn apply(self, base: &ExperimentSpec, value: f64) -> Result<ExperimentSpec, CliError> {
        let mut spec = base.clone();
        let as_count = |what: &str| -> Result<u64, CliError> {
            if value >= 1.0 && value.fract() == 0.0 {
                Ok(value as u64)
            } else {
                Err(CliError::validation("--values", format!("{what} must be a positive integer, got {value}")))
            }
        };
        match self {
            SweepAxis::F => {
                let w = spec
                    .window
                    .as_mut()
                    .ok_or_else(|| CliError::validation("--axis", "axis f needs the window engine"))?;
                w.f = value;
            }
            SweepAxis::N => {
                if spec.initial.counts.is_some() {
                    return Err(CliError::validation("--axis", "axis N needs initial.p rather than initial.counts"));
                }
                let n = Some(as_count("N")? as usize);
                match spec.engine {
                    EngineKind::Resample => spec.resample.get_or_insert_with(Default::default).n = n,
                    EngineKind::Window => {
                        spec.window
                            .as_mut()
                            .ok_or_else(|| CliError::validation("window", "section is required"))?
                            .n = n
                    }
                    EngineKind::Randomwalk => {
                        return Err(CliError::validation("--axis", "the random walk has no sequence length"))
                    }
                }
            }
            SweepAxis::D => {
                let w = spec
                    .randomwalk
                    .as_mut()
                    .ok_or_else(|| CliError::validation("--axis", "axis d needs the randomwalk engine"))?;
                w.d = StepSizes::Uniform(value);
            }
            SweepAxis::R => spec.trials = as_count("R")?,
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub report: ExperimentReport,
}

/// One experiment per value, each written to `out/<axis>=<value>/`, plus
/// `out/summary.csv` with columns `value,tv,median_steps,exhausted_fraction`.
pub fn cmd_sweep(
    base: &ExperimentSpec,
    axis: SweepAxis,
    values: &[f64],
    out: &Path,
    options: RunOptions,
) -> Result<Vec<SweepPoint>, CliError> {
    if values.is_empty() {
        return Err(CliError::validation("--values", "no values given"));
    }
    let specs = values
        .iter()
        .map(|&v| axis.apply(base, v))
        .collect::<Result<Vec<_>, _>>()?;
    let mut points = Vec::with_capacity(values.len());
    let mut summary = String::from("value,tv,median_steps,exhausted_fraction\n");
    for (&value, spec) in values.iter().zip(&specs) {
        let dir = out.join(format!("{}={value}", axis.name()));
        let report = cmd_collapse(spec, &dir, options)?;
        let median = report.steps.map(|s| s.median.to_string()).unwrap_or_default();
        writeln!(
            summary,
            "{value},{},{median},{}",
            report.total_variation, report.exhausted_fraction
        )
        .expect("writing to a String");
        points.push(SweepPoint { value, report });
    }
    write_atomic(&out.join("summary.csv"), summary.as_bytes()).map_err(io_err(out))?;
    Ok(points)
}
