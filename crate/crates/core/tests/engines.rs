mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hvcollapse::harness::{run_experiment, EngineKind, ExperimentSpec, InitialSpec, RunOptions, WindowParams};
use hvcollapse::randomwalk::{walk_step, WalkConfig};
use hvcollapse::resample::{resample_step, run_from_state, ResampleConfig};
use hvcollapse::window::{window_run, window_step, WindowConfig};
use hvcollapse::{HiddenState, Outcome, ProbVector};

use common::{enumerate, gamblers_ruin, resample_chain};

#[test]
fn two_by_two_resample_step_distribution() {
    let state = HiddenState::with_zero_phases(vec![1, 2], 2).unwrap();
    let branches = enumerate(|d| resample_step(&state, d).counts());
    assert_eq!(branches.len(), 4);
    let mut by_counts = [0.0; 3];
    for (w, c) in &branches {
        by_counts[c[0]] += w;
    }
    assert_eq!(by_counts, [0.25, 0.5, 0.25]);
}

#[test]
fn two_by_two_chain_absorbs_in_two_steps_on_average() {
    let (h, t) = resample_chain(2);
    assert!((h[0] - 0.5).abs() < 1e-14);
    assert!((t[0] - 2.0).abs() < 1e-12);
}

#[test]
fn resample_fixation_matches_chain_for_n_4() {
    let (h, _) = resample_chain(4);
    let trials = 20_000;
    let mut hits = 0;
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(t);
        let start = HiddenState::with_zero_phases(vec![1, 2, 2, 2], 2).unwrap();
        let r = run_from_state(&start, ResampleConfig::default_max_steps(4), &mut rng);
        if r.outcome == Outcome::Fixated(1) {
            hits += 1;
        }
    }
    let f = hits as f64 / trials as f64;
    let sigma = (h[0] * (1.0 - h[0]) / trials as f64).sqrt();
    assert!((f - h[0]).abs() < 4.0 * sigma, "{f} vs {}", h[0]);
}

#[test]
fn fixated_states_are_absorbing() {
    let state = HiddenState::with_zero_phases(vec![3; 5], 3).unwrap();
    for (_, s) in enumerate(|d| resample_step(&state, d)) {
        assert_eq!(s.fixated(), Some(3));
    }
    for f in [0.0, 0.5, 1.0] {
        let cfg = WindowConfig::new(f, 5);
        for (_, s) in enumerate(|d| window_step(&state, &cfg, d)) {
            assert_eq!(s.fixated(), Some(3));
        }
    }
    let p = ProbVector::basis(2, 3);
    let cfg = WalkConfig::new(vec![0.1; 3]);
    for (_, q) in enumerate(|d| walk_step(&p, &cfg, d)) {
        assert_eq!(q, p);
    }
}

#[test]
fn window_f0_two_branches() {
    let state = HiddenState::with_zero_phases(vec![1, 2], 2).unwrap();
    let cfg = WindowConfig::new(0.0, 2);
    let mut branches: Vec<(f64, Vec<usize>)> = enumerate(|d| window_step(&state, &cfg, d).gamma().to_vec())
        .into_iter()
        .filter(|(w, _)| *w > 0.0)
        .collect();
    branches.sort_by(|a, b| a.1.cmp(&b.1));
    assert_eq!(branches, vec![(0.5, vec![2, 1]), (0.5, vec![2, 2])]);
}

#[test]
fn window_f1_copies_last() {
    let state = HiddenState::with_zero_phases(vec![1, 3, 2], 3).unwrap();
    let cfg = WindowConfig::new(1.0, 3);
    let branches: Vec<_> = enumerate(|d| window_step(&state, &cfg, d).gamma().to_vec())
        .into_iter()
        .filter(|(w, _)| *w > 0.0)
        .collect();
    assert_eq!(branches, vec![(1.0, vec![3, 2, 2])]);
}

#[test]
fn walk_two_site_step() {
    let p = ProbVector::new(vec![0.3, 0.7]).unwrap();
    let cfg = WalkConfig::new(vec![0.01, 0.01]);
    let mut branches = enumerate(|d| walk_step(&p, &cfg, d).as_slice().to_vec());
    branches.sort_by(|a, b| a.1[0].total_cmp(&b.1[0]));
    assert_eq!(branches.len(), 2);
    for ((w, q), want) in branches.iter().zip([[0.29, 0.71], [0.31, 0.69]]) {
        assert_eq!(*w, 0.5);
        assert!((q[0] - want[0]).abs() < 1e-15 && (q[1] - want[1]).abs() < 1e-15);
    }
}

#[test]
fn gamblers_ruin_grid_is_linear() {
    for k in [4, 10, 50] {
        for (i, h) in gamblers_ruin(k).iter().enumerate() {
            assert!((h - (i + 1) as f64 / k as f64).abs() < 1e-10);
        }
    }
}

#[test]
fn window_collapses_faster_near_threshold() {
    let n = 20;
    let spec = |f: f64, seed| ExperimentSpec {
        engine: EngineKind::Window,
        resample: None,
        randomwalk: None,
        window: Some(WindowParams {
            f,
            n: None,
            max_steps: None,
            trajectory_stride: None,
            trajectory_trials: None,
        }),
        initial: InitialSpec {
            counts: Some(vec![n / 2, n / 2]),
            p: None,
        },
        trials: 5_000,
        seed,
    };
    let fast = run_experiment(&spec(1.0 - 1.0 / (2.0 * n as f64), 5), RunOptions::default()).unwrap();
    let slow = run_experiment(&spec(0.0, 6), RunOptions::default()).unwrap();
    let (a, b) = (fast.report.steps.unwrap().median, slow.report.steps.unwrap().median);
    assert!(a < b, "median {a} at f=1−1/2N vs {b} at f=0");
}

proptest! {
    #[test]
    fn window_steps_keep_length_and_move_slowly(
        seed in any::<u64>(),
        f in 0.0f64..=1.0,
        gamma in prop::collection::vec(1usize..=3, 2..12),
    ) {
        let n = gamma.len();
        let state = HiddenState::with_zero_phases(gamma, 3).unwrap();
        let mut cfg = WindowConfig::new(f, n);
        cfg.max_steps = 200;
        cfg.trajectory_stride = Some(1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let run = window_run(&state, &cfg, &mut rng).unwrap();
        for pair in run.trajectory.windows(2) {
            let (a, b) = (&pair[0].1, &pair[1].1);
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                prop_assert!((x - y).abs() <= 1.0 / n as f64 + 1e-12);
            }
        }
        let mut x = state;
        for _ in 0..50 {
            x = window_step(&x, &cfg, &mut rng);
            prop_assert_eq!(x.len(), n);
        }
    }

    #[test]
    fn walk_steps_stay_on_the_simplex(
        seed in any::<u64>(),
        weights in prop::collection::vec(0.0f64..1.0, 2..6),
        d in 0.001f64..0.2,
    ) {
        prop_assume!(weights.iter().sum::<f64>() > 0.1);
        let s = weights.len();
        let mut p = ProbVector::normalized(weights).unwrap();
        let cfg = WalkConfig::new(vec![d; s]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..200 {
            let q = walk_step(&p, &cfg, &mut rng);
            let sum: f64 = q.as_slice().iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            for (a, b) in p.as_slice().iter().zip(q.as_slice()) {
                prop_assert!((0.0..=1.0).contains(b));
                if *a == 0.0 || *a == 1.0 {
                    prop_assert_eq!(a, b);
                }
            }
            p = q;
        }
    }
}
