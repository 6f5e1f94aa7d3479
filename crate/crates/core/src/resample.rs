//! Whole-sequence resampling.
//!
//! Each step throws an `S`-faced die `N` times, where face `i` comes up with
//! the current frequency `n_i / N`, and the throws become the new sequence.
//! Drawing a uniformly random element of the current sequence is exactly a
//! throw of that die. A sequence made of a single label reproduces itself,
//! so fixation is absorbing.

use serde::{Deserialize, Serialize};

use crate::draw::Draw;
use crate::error::{Error, Result};
use crate::seed::trial_rng;
use crate::state::{sample_hidden, HiddenState, ProbVector, SampleMode, Site};
use crate::trial::TrialResult;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResampleConfig {
    pub n: usize,
    pub sites: usize,
    pub max_steps: u64,
    pub seed: u64,
}

impl ResampleConfig {
    /// Budget of `100·N` generations, seed 0.
    pub fn new(n: usize, sites: usize) -> Self {
        Self {
            n,
            sites,
            max_steps: Self::default_max_steps(n),
            seed: 0,
        }
    }

    pub fn default_max_steps(n: usize) -> u64 {
        100 * n as u64
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::config("resample.n", "must be at least 1"));
        }
        if self.sites < 2 {
            return Err(Error::config("sites", "need at least 2 sites"));
        }
        if self.max_steps < 1 {
            return Err(Error::config("resample.max_steps", "must be at least 1"));
        }
        Ok(())
    }
}

/// Fill `next` with `current.len()` draws from the frequencies of `current`.
fn regenerate<D: Draw + ?Sized>(current: &[Site], next: &mut Vec<Site>, draw: &mut D) {
    let n = current.len();
    next.clear();
    next.extend((0..n).map(|_| current[draw.index(n)]));
}

/// One generation. Phases are carried over unchanged.
pub fn resample_step<D: Draw + ?Sized>(state: &HiddenState, draw: &mut D) -> HiddenState {
    let mut next = Vec::with_capacity(state.len());
    regenerate(state.gamma(), &mut next, draw);
    HiddenState::from_parts_unchecked(next, state.phases().to_vec())
}

fn all_equal(gamma: &[Site]) -> bool {
    gamma.iter().all(|&x| x == gamma[0])
}

/// Iterate [`resample_step`] from `state` until fixation or `max_steps`.
pub fn run_from_state<D: Draw + ?Sized>(
    state: &HiddenState,
    max_steps: u64,
    draw: &mut D,
) -> TrialResult {
    let mut current = state.gamma().to_vec();
    let mut next = Vec::with_capacity(current.len());
    let mut steps = 0;
    while !all_equal(&current) && steps < max_steps {
        regenerate(&current, &mut next, draw);
        std::mem::swap(&mut current, &mut next);
        steps += 1;
    }
    let final_state = HiddenState::from_parts_unchecked(current, state.phases().to_vec());
    TrialResult::new(final_state.to_prob(), steps)
}

/// Build the exact initial sequence for `p0` and run it with `rng`.
pub fn run_trial<R: rand::Rng + ?Sized>(
    config: &ResampleConfig,
    p0: &ProbVector,
    rng: &mut R,
) -> Result<TrialResult> {
    config.validate()?;
    if p0.len() != config.sites {
        return Err(Error::Dimension {
            expected: config.sites,
            actual: p0.len(),
        });
    }
    let state = sample_hidden(p0, config.n, SampleMode::Exact, rng)?;
    Ok(run_from_state(&state, config.max_steps, rng))
}

/// Seeded single run; the stream is `trial_rng(config.seed, 0)`.
pub fn run_to_fixation(config: &ResampleConfig, p0: &ProbVector) -> Result<TrialResult> {
    run_trial(config, p0, &mut trial_rng(config.seed, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trial::Outcome;

    #[test]
    fn fixated_state_is_absorbing() {
        let s = HiddenState::with_zero_phases(vec![3; 7], 4).unwrap();
        let mut rng = trial_rng(1, 1);
        for _ in 0..10 {
            assert_eq!(resample_step(&s, &mut rng), s);
        }
    }

    #[test]
    fn step_keeps_length_and_phases() {
        let s = HiddenState::new(vec![1, 2, 3, 1, 2], vec![0.1, 0.2, 0.3]).unwrap();
        let t = resample_step(&s, &mut trial_rng(4, 0));
        assert_eq!(t.len(), 5);
        assert_eq!(t.phases(), s.phases());
        assert!(t.gamma().iter().all(|x| s.gamma().contains(x)));
    }

    #[test]
    fn already_fixated_takes_zero_steps() {
        let cfg = ResampleConfig::new(8, 3);
        let r = run_to_fixation(&cfg, &ProbVector::basis(1, 3)).unwrap();
        assert_eq!(r.outcome, Outcome::Fixated(1));
        assert_eq!(r.steps, 0);
        assert_eq!(r.final_p, ProbVector::basis(1, 3));
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let cfg = ResampleConfig {
            max_steps: 1,
            ..ResampleConfig::new(1000, 2)
        };
        let p = ProbVector::new(vec![0.5, 0.5]).unwrap();
        let r = run_to_fixation(&cfg, &p).unwrap();
        assert_eq!(r.outcome, Outcome::Exhausted);
        assert_eq!(r.steps, 1);
    }

    #[test]
    fn single_element_sequence_is_fixated() {
        let cfg = ResampleConfig::new(1, 2);
        let r = run_to_fixation(&cfg, &ProbVector::basis(2, 2)).unwrap();
        assert_eq!(r.outcome, Outcome::Fixated(2));
    }

    #[test]
    fn config_errors() {
        let p = ProbVector::new(vec![0.5, 0.5]).unwrap();
        assert!(run_to_fixation(&ResampleConfig { n: 0, ..ResampleConfig::new(2, 2) }, &p).is_err());
        assert!(run_to_fixation(&ResampleConfig::new(4, 3), &p).is_err());
        assert!(run_to_fixation(&ResampleConfig::new(3, 2), &p).is_err());
    }

    #[test]
    fn two_by_two_mean_fixation_time() {
        // Absorption with probability 1/2 per generation: E[M] = 2, P(site 1) = 1/2.
        let cfg = ResampleConfig::new(2, 2);
        let p = ProbVector::new(vec![0.5, 0.5]).unwrap();
        let trials = 40_000u64;
        let mut steps = 0u64;
        let mut ones = 0u64;
        for t in 0..trials {
            let r = run_trial(&cfg, &p, &mut trial_rng(11, t)).unwrap();
            steps += r.steps;
            ones += (r.outcome == Outcome::Fixated(1)) as u64;
        }
        let mean = steps as f64 / trials as f64;
        // Geometric(1/2): variance 2.
        assert!((mean - 2.0).abs() < 4.0 * (2.0 / trials as f64).sqrt(), "mean {mean}");
        let f = ones as f64 / trials as f64;
        assert!((f - 0.5).abs() < 4.0 * (0.25 / trials as f64).sqrt());
    }
}
