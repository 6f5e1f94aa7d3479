//! Repeated seeded trials of a collapse engine, scored against the Born
//! prediction.
//!
//! Trial `t` draws from [`trial_rng`]`(seed, t)` and nothing else, so the
//! per-trial outcomes and the aggregated [`ExperimentReport`] are identical
//! for any worker count. With the `parallel` feature, trials are spread over
//! a rayon pool; otherwise, or with one worker, they run in a plain loop.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::output::{write_atomic, write_atomic_with};
use crate::randomwalk::{self, PairingRule, WalkConfig};
use crate::resample::{self, ResampleConfig};
use crate::seed::{trial_rng, SEED_RULE};
use crate::state::{exact_counts, ProbVector};
use crate::stats::{chi_square, total_variation, ChiSquare, Pooling, StepSummary};
use crate::trial::{Outcome, TrialResult};
use crate::window::{self, WindowConfig};

/// A run passes only if fewer than this fraction of trials hit the budget.
pub const EXHAUSTED_LIMIT: f64 = 0.001;

/// Tolerance on `Σ p = 1` for probabilities read from a spec.
pub const SPEC_PROB_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Resample,
    Randomwalk,
    Window,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResampleParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<u64>,
}

/// One step size for every site, or one per site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StepSizes {
    Uniform(f64),
    PerSite(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkParams {
    pub d: StepSizes,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<PairingRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowParams {
    pub f: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<u64>,
    /// Dump `p` every this many steps for the first `trajectory_trials` trials.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory_stride: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory_trials: Option<u64>,
}

/// Initial condition: label counts `n0`, or probabilities `p`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<f64>>,
}

/// Everything needed to reproduce an experiment. This is also the JSON spec
/// file format, with `engine` selecting which engine section applies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub engine: EngineKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resample: Option<ResampleParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub randomwalk: Option<WalkParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowParams>,
    pub initial: InitialSpec,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EngineConfig {
    Resample(ResampleConfig),
    RandomWalk(WalkConfig),
    Window(WindowConfig),
}

/// A validated spec.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub engine: EngineConfig,
    pub initial: ProbVector,
    pub trials: u64,
    pub seed: u64,
    pub trajectory_trials: u64,
}

fn initial_probabilities(initial: &InitialSpec) -> Result<(ProbVector, Option<usize>)> {
    match (&initial.counts, &initial.p) {
        (Some(_), Some(_)) => Err(Error::config("initial", "give either counts or p, not both")),
        (None, None) => Err(Error::config("initial", "missing counts or p")),
        (Some(counts), None) => {
            if counts.len() < 2 {
                return Err(Error::config("initial.counts", "need at least 2 sites"));
            }
            let n: usize = counts.iter().sum();
            let p = ProbVector::from_counts(counts)
                .map_err(|e| Error::config("initial.counts", e.to_string()))?;
            Ok((p, Some(n)))
        }
        (None, Some(p)) => {
            if p.len() < 2 {
                return Err(Error::config("initial.p", "need at least 2 sites"));
            }
            if let Some(bad) = p.iter().find(|x| !(x.is_finite() && (0.0..=1.0).contains(*x))) {
                return Err(Error::config("initial.p", format!("entry {bad} outside [0, 1]")));
            }
            let sum: f64 = p.iter().sum();
            if (sum - 1.0).abs() > SPEC_PROB_TOL {
                return Err(Error::config("initial.p", format!("entries sum to {sum}, not 1")));
            }
            let p = ProbVector::normalized(p.clone()).map_err(|e| Error::config("initial.p", e.to_string()))?;
            Ok((p, None))
        }
    }
}

fn sequence_length(section: &str, given: Option<usize>, implied: Option<usize>) -> Result<usize> {
    match (given, implied) {
        (Some(a), Some(b)) if a != b => Err(Error::config(
            format!("{section}.n"),
            format!("{a} disagrees with initial.counts total {b}"),
        )),
        (Some(a), _) | (None, Some(a)) => Ok(a),
        (None, None) => Err(Error::config(
            format!("{section}.n"),
            "required when initial.p is given",
        )),
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<Plan> {
        if self.trials < 1 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        let unused = |present: bool, name: &str| -> Result<()> {
            if present {
                Err(Error::config(name, format!("section does not apply to engine {:?}", self.engine)))
            } else {
                Ok(())
            }
        };
        let (initial, implied_n) = initial_probabilities(&self.initial)?;
        let sites = initial.len();
        let mut trajectory_trials = 0;
        let engine = match self.engine {
            EngineKind::Resample => {
                unused(self.randomwalk.is_some(), "randomwalk")?;
                unused(self.window.is_some(), "window")?;
                let params = self.resample.clone().unwrap_or_default();
                let n = sequence_length("resample", params.n, implied_n)?;
                if n < 1 {
                    return Err(Error::config("resample.n", "must be at least 1"));
                }
                exact_counts(&initial, n).map_err(|e| Error::config("initial", e.to_string()))?;
                let cfg = ResampleConfig {
                    n,
                    sites,
                    max_steps: params.max_steps.unwrap_or(ResampleConfig::default_max_steps(n)),
                    seed: self.seed,
                };
                cfg.validate()?;
                EngineConfig::Resample(cfg)
            }
            EngineKind::Randomwalk => {
                unused(self.resample.is_some(), "resample")?;
                unused(self.window.is_some(), "window")?;
                let params = self
                    .randomwalk
                    .as_ref()
                    .ok_or_else(|| Error::config("randomwalk", "section is required"))?;
                let d = match &params.d {
                    StepSizes::Uniform(d) => vec![*d; sites],
                    StepSizes::PerSite(d) if d.len() == sites => d.clone(),
                    StepSizes::PerSite(d) => {
                        return Err(Error::config(
                            "randomwalk.d",
                            format!("{} step sizes for {sites} sites", d.len()),
                        ))
                    }
                };
                let max_steps = params.max_steps.unwrap_or(WalkConfig::default_max_steps(&d));
                let cfg = WalkConfig {
                    d,
                    rule: params.rule.unwrap_or_default(),
                    max_steps,
                    seed: self.seed,
                };
                cfg.validate()?;
                EngineConfig::RandomWalk(cfg)
            }
            EngineKind::Window => {
                unused(self.resample.is_some(), "resample")?;
                unused(self.randomwalk.is_some(), "randomwalk")?;
                let params = self
                    .window
                    .as_ref()
                    .ok_or_else(|| Error::config("window", "section is required"))?;
                let n = sequence_length("window", params.n, implied_n)?;
                exact_counts(&initial, n).map_err(|e| Error::config("initial", e.to_string()))?;
                let cfg = WindowConfig {
                    f: params.f,
                    n,
                    max_steps: params.max_steps.unwrap_or(WindowConfig::default_max_steps(params.f, n)),
                    seed: self.seed,
                    trajectory_stride: params.trajectory_stride,
                };
                cfg.validate()?;
                if cfg.trajectory_stride.is_some() {
                    trajectory_trials = params.trajectory_trials.unwrap_or(1);
                }
                EngineConfig::Window(cfg)
            }
        };
        Ok(Plan {
            engine,
            initial,
            trials: self.trials,
            seed: self.seed,
            trajectory_trials,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Worker threads; 0 uses every available core, 1 runs sequentially.
    pub workers: usize,
}

/// Outcome of one trial, as written to the per-trial CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub result: TrialResult,
}

/// Running fixation tally. Merging tallies of disjoint trial ranges in
/// index order gives the tally of their union.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub counts: Vec<u64>,
    pub exhausted: u64,
    /// Steps of each fixated trial, in trial order.
    pub fixation_steps: Vec<u64>,
}

impl Tally {
    pub fn new(sites: usize) -> Self {
        Self {
            counts: vec![0; sites],
            exhausted: 0,
            fixation_steps: Vec::new(),
        }
    }

    pub fn record(&mut self, result: &TrialResult) {
        match result.outcome {
            Outcome::Fixated(k) => {
                self.counts[k - 1] += 1;
                self.fixation_steps.push(result.steps);
            }
            Outcome::Exhausted => self.exhausted += 1,
        }
    }

    pub fn merge(mut self, other: Tally) -> Tally {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        self.exhausted += other.exhausted;
        self.fixation_steps.extend(other.fixation_steps);
        self
    }

    pub fn trials(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.exhausted
    }

    pub fn from_results<'a>(sites: usize, results: impl IntoIterator<Item = &'a TrialResult>) -> Self {
        let mut t = Self::new(sites);
        for r in results {
            t.record(r);
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub engine: EngineKind,
    pub sites: usize,
    pub trials: u64,
    pub initial_p: Vec<f64>,
    pub fixation_counts: Vec<u64>,
    /// `counts_k / trials`.
    pub fixation_frequencies: Vec<f64>,
    /// Binomial standard error `√(p_k (1 − p_k) / trials)` of each frequency.
    pub standard_errors: Vec<f64>,
    pub exhausted: u64,
    pub exhausted_fraction: f64,
    /// Over fixated trials only; absent when none fixated.
    pub chi_square: Option<ChiSquare>,
    pub total_variation: f64,
    /// Steps to fixation over fixated trials.
    pub steps: Option<StepSummary>,
    pub pass: bool,
    pub seed_rule: String,
    pub spec: ExperimentSpec,
    pub wall_clock_secs: f64,
}

impl ExperimentReport {
    pub fn from_tally(spec: &ExperimentSpec, initial: &ProbVector, tally: &Tally, wall_clock_secs: f64) -> Result<Self> {
        let trials = tally.trials();
        let r = trials as f64;
        let p0 = initial.as_slice();
        let freqs: Vec<f64> = tally.counts.iter().map(|&c| c as f64 / r).collect();
        let fixated: u64 = tally.counts.iter().sum();
        let chi = if fixated > 0 {
            Some(chi_square(&tally.counts, p0, fixated, Pooling::Small)?)
        } else {
            None
        };
        let exhausted_fraction = tally.exhausted as f64 / r;
        let pass = chi.as_ref().is_some_and(|c| c.pass) && exhausted_fraction < EXHAUSTED_LIMIT;
        Ok(Self {
            engine: spec.engine,
            sites: initial.len(),
            trials,
            initial_p: p0.to_vec(),
            fixation_counts: tally.counts.clone(),
            total_variation: total_variation(&freqs, p0),
            standard_errors: p0.iter().map(|p| (p * (1.0 - p) / r).sqrt()).collect(),
            fixation_frequencies: freqs,
            exhausted: tally.exhausted,
            exhausted_fraction,
            chi_square: chi,
            steps: StepSummary::from_unsorted(&tally.fixation_steps),
            pass,
            seed_rule: SEED_RULE.to_string(),
            spec: spec.clone(),
            wall_clock_secs,
        })
    }

    /// The report with timing zeroed, for reproducibility comparisons.
    pub fn without_wall_clock(&self) -> Self {
        Self {
            wall_clock_secs: 0.0,
            ..self.clone()
        }
    }

    /// Largest `|f_k − p_k| / σ_k` over sites with `0 < p_k < 1`.
    pub fn max_sigma_deviation(&self) -> f64 {
        self.fixation_frequencies
            .iter()
            .zip(&self.initial_p)
            .zip(&self.standard_errors)
            .filter(|(_, &s)| s > 0.0)
            .map(|((f, p), s)| (f - p).abs() / s)
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRun {
    pub report: ExperimentReport,
    pub records: Vec<TrialRecord>,
    /// Window-engine `p` trajectories for the first trials, when requested.
    pub trajectories: Vec<(u64, Vec<(u64, ProbVector)>)>,
}

impl ExperimentRun {
    /// Writes `report.json`, `trials.csv` and any `trajectory_<t>.csv`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut json = serde_json::to_vec_pretty(&self.report)?;
        json.push(b'\n');
        write_atomic(&dir.join("report.json"), &json)?;
        write_atomic_with(&dir.join("trials.csv"), |buf| write_trials_csv(&self.records, buf))?;
        for (trial, traj) in &self.trajectories {
            write_atomic_with(&dir.join(format!("trajectory_{trial}.csv")), |buf| {
                window::write_trajectory_csv(traj, buf)
            })?;
        }
        Ok(())
    }
}

/// CSV with header `trial,outcome,steps`; outcome is the site or `exhausted`.
pub fn write_trials_csv<W: std::io::Write>(records: &[TrialRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "trial,outcome,steps")?;
    for rec in records {
        match rec.result.outcome {
            Outcome::Fixated(k) => writeln!(out, "{},{},{}", rec.trial, k, rec.result.steps)?,
            Outcome::Exhausted => writeln!(out, "{},exhausted,{}", rec.trial, rec.result.steps)?,
        }
    }
    Ok(())
}

type TrajectoryData = Option<Vec<(u64, ProbVector)>>;

fn run_one(plan: &Plan, trial: u64) -> Result<(TrialResult, TrajectoryData)> {
    let mut rng = trial_rng(plan.seed, trial);
    match &plan.engine {
        EngineConfig::Resample(cfg) => Ok((resample::run_trial(cfg, &plan.initial, &mut rng)?, None)),
        EngineConfig::RandomWalk(cfg) => Ok((randomwalk::run_from(&plan.initial, cfg, &mut rng)?, None)),
        EngineConfig::Window(cfg) => {
            let keep = trial < plan.trajectory_trials;
            let cfg = if keep {
                *cfg
            } else {
                WindowConfig {
                    trajectory_stride: None,
                    ..*cfg
                }
            };
            let run = window::run_trial(&cfg, &plan.initial, &mut rng)?;
            Ok((run.result, keep.then_some(run.trajectory)))
        }
    }
}

/// Evaluate `f(0..trials)` in index order, in parallel when enabled.
pub fn map_trials<T, F>(trials: u64, options: RunOptions, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if options.workers != 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.workers)
            .build()
            .expect("failed to build worker pool");
        return pool.install(|| (0..trials).into_par_iter().map(&f).collect());
    }
    #[cfg(not(feature = "parallel"))]
    let _ = options;
    (0..trials).map(f).collect()
}

/// Run every trial of `spec` and aggregate.
pub fn run_experiment(spec: &ExperimentSpec, options: RunOptions) -> Result<ExperimentRun> {
    let plan = spec.validate()?;
    let started = Instant::now();
    let outcomes = map_trials(plan.trials, options, |t| run_one(&plan, t));
    let mut records = Vec::with_capacity(outcomes.len());
    let mut trajectories = Vec::new();
    for (trial, outcome) in (0..).zip(outcomes) {
        let (result, traj) = outcome?;
        if let Some(traj) = traj {
            trajectories.push((trial, traj));
        }
        records.push(TrialRecord { trial, result });
    }
    let tally = Tally::from_results(plan.initial.len(), records.iter().map(|r| &r.result));
    let report = ExperimentReport::from_tally(spec, &plan.initial, &tally, started.elapsed().as_secs_f64())?;
    Ok(ExperimentRun {
        report,
        records,
        trajectories,
    })
}
