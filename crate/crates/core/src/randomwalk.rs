//! Zero-sum random walk on the face probabilities.
//!
//! Every step adds `d_i g_i` to each active face (`0 < p_i < 1`), with
//! `g_i = ±1` and `Σ d_i g_i = 0`. Faces that reach 0 or 1 stay there. How
//! the constrained signs are drawn is a [`PairingRule`].

use serde::{Deserialize, Serialize};

use crate::draw::Draw;
use crate::error::{Error, Result};
use crate::seed::trial_rng;
use crate::state::ProbVector;
use crate::trial::TrialResult;

/// Values this close to 0 or 1 are snapped onto the boundary.
const SNAP: f64 = 1e-12;

/// Largest active-face count the rejection rule will enumerate.
pub const MAX_REJECTION_SITES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairingRule {
    /// Pick an ordered pair `(i, j)` of active faces uniformly; `i` gains and
    /// `j` loses the same amount `min(d_i, d_j)`. Other faces do not move.
    #[default]
    PairExchange,
    /// Draw every `g_i` as a fair sign and keep the draw only if
    /// `Σ d_i g_i = 0`. Falls back to pair exchange on steps where no sign
    /// pattern satisfies the constraint.
    Rejection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub d: Vec<f64>,
    #[serde(default)]
    pub rule: PairingRule,
    pub max_steps: u64,
    pub seed: u64,
}

impl WalkConfig {
    /// Pair exchange, default budget, seed 0.
    pub fn new(d: Vec<f64>) -> Self {
        let max_steps = Self::default_max_steps(&d);
        Self {
            d,
            rule: PairingRule::PairExchange,
            max_steps,
            seed: 0,
        }
    }

    /// `ceil(20 / d_min²)`.
    pub fn default_max_steps(d: &[f64]) -> u64 {
        let d_min = d.iter().cloned().fold(f64::INFINITY, f64::min);
        if d_min.is_finite() && d_min > 0.0 {
            (20.0 / (d_min * d_min)).ceil() as u64
        } else {
            1
        }
    }

    pub fn sites(&self) -> usize {
        self.d.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.d.len() < 2 {
            return Err(Error::config("randomwalk.d", "need a step size for at least 2 sites"));
        }
        if let Some(bad) = self.d.iter().find(|x| !(**x > 0.0 && **x < 1.0)) {
            return Err(Error::config("randomwalk.d", format!("{bad} outside (0, 1)")));
        }
        if self.max_steps < 1 {
            return Err(Error::config("randomwalk.max_steps", "must be at least 1"));
        }
        if self.rule == PairingRule::Rejection && self.d.len() > MAX_REJECTION_SITES {
            return Err(Error::config(
                "randomwalk.rule",
                format!("rejection supports at most {MAX_REJECTION_SITES} sites"),
            ));
        }
        Ok(())
    }
}

fn active_faces(p: &[f64]) -> Vec<usize> {
    (0..p.len()).filter(|&i| p[i] > 0.0 && p[i] < 1.0).collect()
}

fn collapse_to(p: &mut [f64], k: usize) {
    p.iter_mut().for_each(|x| *x = 0.0);
    p[k] = 1.0;
}

fn pair_exchange<D: Draw + ?Sized>(p: &mut [f64], active: &[usize], d: &[f64], draw: &mut D) {
    let k = active.len();
    let a = draw.index(k);
    let mut b = draw.index(k - 1);
    if b >= a {
        b += 1;
    }
    let (up, down) = (active[a], active[b]);
    // The same shrunken step is used for both orientations of the pair, so a
    // step that would cross a boundary lands on it without biasing the mean.
    let delta = d[up]
        .min(d[down])
        .min(p[up])
        .min(p[down])
        .min(1.0 - p[up])
        .min(1.0 - p[down]);
    p[up] += delta;
    p[down] -= delta;
    if p[down] < SNAP {
        p[up] += p[down];
        p[down] = 0.0;
    }
    if p[up] > 1.0 - SNAP {
        collapse_to(p, up);
    }
}

fn zero_sum_patterns(active: &[usize], d: &[f64]) -> Vec<u32> {
    let scale = active.iter().map(|&i| d[i]).fold(0.0, f64::max);
    (0u32..1 << active.len())
        .filter(|mask| {
            let sum: f64 = active
                .iter()
                .enumerate()
                .map(|(b, &i)| if mask >> b & 1 == 1 { d[i] } else { -d[i] })
                .sum();
            sum.abs() <= 1e-12 * scale
        })
        .collect()
}

fn rejection<D: Draw + ?Sized>(p: &mut [f64], active: &[usize], d: &[f64], draw: &mut D) {
    // Uniform over accepted sign patterns is the law of i.i.d. signs
    // conditioned on the constraint.
    let patterns = zero_sum_patterns(active, d);
    if patterns.is_empty() {
        pair_exchange(p, active, d, draw);
        return;
    }
    let mask = patterns[draw.index(patterns.len())];
    let mut increment_sum = 0.0;
    for (b, &i) in active.iter().enumerate() {
        let inc = if mask >> b & 1 == 1 { d[i] } else { -d[i] };
        increment_sum += inc;
        p[i] = (p[i] + inc).clamp(0.0, 1.0);
    }
    debug_assert!(increment_sum.abs() <= 1e-9);
    if let Some(k) = p.iter().position(|&x| x > 1.0 - SNAP) {
        collapse_to(p, k);
        return;
    }
    for x in p.iter_mut() {
        if *x < SNAP {
            *x = 0.0;
        }
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > f64::EPSILON {
        p.iter_mut().for_each(|x| *x /= sum);
    }
}

fn advance<D: Draw + ?Sized>(p: &mut [f64], config: &WalkConfig, draw: &mut D) {
    let active = active_faces(p);
    if active.len() < 2 {
        return;
    }
    match config.rule {
        PairingRule::PairExchange => pair_exchange(p, &active, &config.d, draw),
        PairingRule::Rejection => rejection(p, &active, &config.d, draw),
    }
}

/// One step. States with fewer than two active faces are returned unchanged.
pub fn walk_step<D: Draw + ?Sized>(p: &ProbVector, config: &WalkConfig, draw: &mut D) -> ProbVector {
    let mut next = p.as_slice().to_vec();
    advance(&mut next, config, draw);
    ProbVector::from_vec_unchecked(next)
}

/// Iterate [`walk_step`] from `p0` until one face holds all the mass or the
/// budget runs out.
pub fn run_from<D: Draw + ?Sized>(p0: &ProbVector, config: &WalkConfig, draw: &mut D) -> Result<TrialResult> {
    config.validate()?;
    if p0.len() != config.sites() {
        return Err(Error::Dimension {
            expected: config.sites(),
            actual: p0.len(),
        });
    }
    let mut p = p0.as_slice().to_vec();
    let mut steps = 0;
    while !p.contains(&1.0) && steps < config.max_steps {
        advance(&mut p, config, draw);
        steps += 1;
    }
    Ok(TrialResult::new(ProbVector::from_vec_unchecked(p), steps))
}

/// Seeded single run; the stream is `trial_rng(config.seed, 0)`.
pub fn walk_to_fixation(p0: &ProbVector, config: &WalkConfig) -> Result<TrialResult> {
    run_from(p0, config, &mut trial_rng(config.seed, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trial::Outcome;

    fn pv(p: &[f64]) -> ProbVector {
        ProbVector::new(p.to_vec()).unwrap()
    }

    #[test]
    fn absorbed_state_unchanged() {
        let cfg = WalkConfig::new(vec![0.01, 0.01]);
        let p = pv(&[0.0, 1.0]);
        assert_eq!(walk_step(&p, &cfg, &mut trial_rng(0, 0)), p);
    }

    #[test]
    fn two_site_step_has_two_outcomes() {
        let cfg = WalkConfig::new(vec![0.01, 0.01]);
        let p = pv(&[0.3, 0.7]);
        let mut rng = trial_rng(3, 0);
        let (mut up, mut down) = (0, 0);
        for _ in 0..4000 {
            let q = walk_step(&p, &cfg, &mut rng);
            let q = q.as_slice();
            if (q[0] - 0.31).abs() < 1e-15 && (q[1] - 0.69).abs() < 1e-15 {
                up += 1;
            } else if (q[0] - 0.29).abs() < 1e-15 && (q[1] - 0.71).abs() < 1e-15 {
                down += 1;
            } else {
                panic!("unexpected step {q:?}");
            }
        }
        assert!((up as f64 - 2000.0).abs() < 4.0 * 1000f64.sqrt());
        assert_eq!(up + down, 4000);
    }

    #[test]
    fn clamped_step_lands_on_boundary() {
        let cfg = WalkConfig::new(vec![0.1, 0.1, 0.1]);
        let p = pv(&[0.05, 0.0, 0.95]);
        let mut rng = trial_rng(5, 0);
        for _ in 0..100 {
            let q = walk_step(&p, &cfg, &mut rng);
            let q = q.as_slice();
            assert!(q == [0.0, 0.0, 1.0] || (q[0] - 0.1).abs() < 1e-15 && (q[2] - 0.9).abs() < 1e-15, "{q:?}");
            assert_eq!(q[1], 0.0);
        }
    }

    #[test]
    fn absorbed_faces_stay_absorbed() {
        let cfg = WalkConfig::new(vec![0.05; 5]);
        let mut p = pv(&[0.2, 0.2, 0.2, 0.2, 0.2]);
        let mut rng = trial_rng(8, 1);
        let mut dead = [false; 5];
        for _ in 0..20_000 {
            p = walk_step(&p, &cfg, &mut rng);
            for (i, &x) in p.as_slice().iter().enumerate() {
                if dead[i] {
                    assert_eq!(x, 0.0);
                }
                dead[i] |= x == 0.0;
            }
            let sum: f64 = p.as_slice().iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            if p.fixated().is_some() {
                break;
            }
        }
    }

    #[test]
    fn rejection_rule_keeps_distribution_valid() {
        let cfg = WalkConfig {
            rule: PairingRule::Rejection,
            ..WalkConfig::new(vec![0.02, 0.03, 0.05, 0.04])
        };
        let mut p = pv(&[0.25, 0.25, 0.25, 0.25]);
        let mut rng = trial_rng(2, 2);
        for _ in 0..5000 {
            p = walk_step(&p, &cfg, &mut rng);
            let sum: f64 = p.as_slice().iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(p.as_slice().iter().all(|x| (0.0..=1.0).contains(x)));
        }
    }

    #[test]
    fn rejection_falls_back_when_constraint_unattainable() {
        // Three equal steps can never cancel.
        let cfg = WalkConfig {
            rule: PairingRule::Rejection,
            ..WalkConfig::new(vec![0.01; 3])
        };
        let p = pv(&[0.3, 0.3, 0.4]);
        let q = walk_step(&p, &cfg, &mut trial_rng(0, 0));
        let moved: Vec<f64> = q.as_slice().iter().zip(p.as_slice()).map(|(a, b)| a - b).collect();
        assert_eq!(moved.iter().filter(|x| x.abs() > 1e-15).count(), 2);
        assert!(moved.iter().sum::<f64>().abs() < 1e-15);
    }

    #[test]
    fn zero_sum_patterns_for_equal_steps() {
        let d = vec![0.1; 4];
        assert_eq!(zero_sum_patterns(&[0, 1, 2, 3], &d).len(), 6);
        assert!(zero_sum_patterns(&[0, 1, 2], &d).is_empty());
    }

    #[test]
    fn fixated_start_takes_zero_steps() {
        let cfg = WalkConfig::new(vec![0.01; 4]);
        let r = walk_to_fixation(&ProbVector::basis(1, 4), &cfg).unwrap();
        assert_eq!(r.outcome, Outcome::Fixated(1));
        assert_eq!(r.steps, 0);
    }

    #[test]
    fn default_budget() {
        assert_eq!(WalkConfig::default_max_steps(&[0.01, 0.02]), 200_000);
        assert_eq!(WalkConfig::new(vec![0.5, 0.25]).max_steps, 320);
    }

    #[test]
    fn config_errors() {
        assert!(WalkConfig::new(vec![0.01]).validate().is_err());
        assert!(WalkConfig::new(vec![0.0, 0.1]).validate().is_err());
        assert!(WalkConfig::new(vec![1.0, 0.1]).validate().is_err());
        let cfg = WalkConfig::new(vec![0.1, 0.1]);
        assert!(walk_to_fixation(&pv(&[0.2, 0.3, 0.5]), &cfg).is_err());
    }
}
