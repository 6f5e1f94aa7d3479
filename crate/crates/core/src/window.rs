//! Sliding-window update with a memory parameter `f`.
//!
//! Each step drops the first label of the sequence and appends `x_new`:
//! with probability `f` a copy of the current last label, otherwise a label
//! drawn from the current frequencies (the window before the shift). Near
//! `f = 1` long runs of copies sweep the window and it collapses quickly;
//! at `f = 0` the update is a Moran-type step with no drift.

use serde::{Deserialize, Serialize};

use crate::draw::Draw;
use crate::error::{Error, Result};
use crate::seed::trial_rng;
use crate::state::{counts_of, sample_hidden, HiddenState, ProbVector, SampleMode, Site};
use crate::trial::TrialResult;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub f: f64,
    pub n: usize,
    pub max_steps: u64,
    pub seed: u64,
    /// Record `p` every this many steps in [`window_run`].
    #[serde(default)]
    pub trajectory_stride: Option<u64>,
}

impl WindowConfig {
    pub fn new(f: f64, n: usize) -> Self {
        Self {
            f,
            n,
            max_steps: Self::default_max_steps(f, n),
            seed: 0,
            trajectory_stride: None,
        }
    }

    /// `ceil(100·N² / (1 − f + 1/N))`.
    pub fn default_max_steps(f: f64, n: usize) -> u64 {
        let n = n.max(1) as f64;
        (100.0 * n * n / (1.0 - f + 1.0 / n)).ceil() as u64
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.f) {
            return Err(Error::config("window.f", format!("{} outside [0, 1]", self.f)));
        }
        if self.n < 2 {
            return Err(Error::config("window.n", "must be at least 2"));
        }
        if self.max_steps < 1 {
            return Err(Error::config("window.max_steps", "must be at least 1"));
        }
        if self.trajectory_stride == Some(0) {
            return Err(Error::config("window.trajectory_stride", "must be positive"));
        }
        Ok(())
    }
}

/// Ring buffer over the sequence with running label counts.
struct Ring {
    buf: Vec<Site>,
    head: usize,
    counts: Vec<usize>,
}

impl Ring {
    fn new(state: &HiddenState) -> Self {
        Self {
            buf: state.gamma().to_vec(),
            head: 0,
            counts: counts_of(state.gamma(), state.sites()),
        }
    }

    /// Shift once; returns whether the window is now a single label.
    fn advance<D: Draw + ?Sized>(&mut self, f: f64, draw: &mut D) -> bool {
        let n = self.buf.len();
        let last = self.buf[(self.head + n - 1) % n];
        let x_new = if draw.chance(f) {
            last
        } else {
            self.buf[(self.head + draw.index(n)) % n]
        };
        let removed = self.buf[self.head];
        self.counts[removed - 1] -= 1;
        self.counts[x_new - 1] += 1;
        self.buf[self.head] = x_new;
        self.head = (self.head + 1) % n;
        self.counts[x_new - 1] == n
    }

    fn is_fixated(&self) -> bool {
        self.counts.contains(&self.buf.len())
    }

    fn prob(&self) -> ProbVector {
        let n = self.buf.len() as f64;
        ProbVector::from_vec_unchecked(self.counts.iter().map(|&c| c as f64 / n).collect())
    }

    fn into_gamma(mut self) -> Vec<Site> {
        self.buf.rotate_left(self.head);
        self.buf
    }
}

/// One shift of the window. Phases are carried over unchanged.
pub fn window_step<D: Draw + ?Sized>(state: &HiddenState, config: &WindowConfig, draw: &mut D) -> HiddenState {
    let mut ring = Ring::new(state);
    ring.advance(config.f, draw);
    HiddenState::from_parts_unchecked(ring.into_gamma(), state.phases().to_vec())
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowRun {
    pub result: TrialResult,
    /// `(step, p)` at multiples of the stride, plus the final step; empty
    /// when no stride is configured.
    pub trajectory: Vec<(u64, ProbVector)>,
}

/// Iterate [`window_step`] until fixation or `max_steps`.
pub fn window_run<D: Draw + ?Sized>(state0: &HiddenState, config: &WindowConfig, draw: &mut D) -> Result<WindowRun> {
    config.validate()?;
    if state0.len() != config.n {
        return Err(Error::Dimension {
            expected: config.n,
            actual: state0.len(),
        });
    }
    let mut ring = Ring::new(state0);
    let stride = config.trajectory_stride;
    let mut trajectory = Vec::new();
    if stride.is_some() {
        trajectory.push((0, ring.prob()));
    }
    let mut steps = 0;
    let mut fixated = ring.is_fixated();
    while !fixated && steps < config.max_steps {
        fixated = ring.advance(config.f, draw);
        steps += 1;
        if let Some(s) = stride {
            if steps % s == 0 {
                trajectory.push((steps, ring.prob()));
            }
        }
    }
    let final_p = ring.prob();
    if stride.is_some() && trajectory.last().map(|(s, _)| *s) != Some(steps) {
        trajectory.push((steps, final_p.clone()));
    }
    Ok(WindowRun {
        result: TrialResult::new(final_p, steps),
        trajectory,
    })
}

/// Build the exact initial window for `p0`, shuffled with `rng`, and run it.
pub fn run_trial<R: rand::Rng + ?Sized>(config: &WindowConfig, p0: &ProbVector, rng: &mut R) -> Result<WindowRun> {
    config.validate()?;
    let state = sample_hidden(p0, config.n, SampleMode::Exact, rng)?;
    window_run(&state, config, rng)
}

/// Seeded single run; the stream is `trial_rng(config.seed, 0)`.
pub fn run_to_fixation(config: &WindowConfig, p0: &ProbVector) -> Result<WindowRun> {
    run_trial(config, p0, &mut trial_rng(config.seed, 0))
}

/// CSV with header `step,p_1,...,p_S`.
pub fn write_trajectory_csv<W: std::io::Write>(trajectory: &[(u64, ProbVector)], mut out: W) -> std::io::Result<()> {
    let sites = trajectory.first().map(|(_, p)| p.len()).unwrap_or(0);
    let header: Vec<String> = (1..=sites).map(|i| format!("p_{i}")).collect();
    writeln!(out, "step,{}", header.join(","))?;
    for (step, p) in trajectory {
        let row: Vec<String> = p.as_slice().iter().map(|x| x.to_string()).collect();
        writeln!(out, "{step},{}", row.join(","))?;
    }
    Ok(())
}
