//! Test-only oracles, independent of the engines' sampling paths.
#![allow(dead_code)]

use hvcollapse::Draw;
use nalgebra::{DMatrix, DVector};

/// A [`Draw`] that replays a fixed prefix of choices and takes choice 0
/// beyond it, recording every decision and the probability of the path.
pub struct ScriptedDraw {
    prefix: Vec<usize>,
    taken: Vec<(usize, usize)>,
    weight: f64,
}

impl ScriptedDraw {
    fn next_choice(&mut self, arity: usize) -> usize {
        let choice = self.prefix.get(self.taken.len()).copied().unwrap_or(0);
        assert!(choice < arity);
        self.taken.push((choice, arity));
        choice
    }
}

impl Draw for ScriptedDraw {
    fn index(&mut self, len: usize) -> usize {
        let c = self.next_choice(len);
        self.weight /= len as f64;
        c
    }

    fn chance(&mut self, p: f64) -> bool {
        let c = self.next_choice(2);
        if c == 0 {
            self.weight *= p;
            true
        } else {
            self.weight *= 1.0 - p;
            false
        }
    }
}

/// Every branch of `f` with its exact probability.
pub fn enumerate<T>(mut f: impl FnMut(&mut ScriptedDraw) -> T) -> Vec<(f64, T)> {
    let mut out = Vec::new();
    let mut prefix = Vec::new();
    loop {
        let mut d = ScriptedDraw {
            prefix: prefix.clone(),
            taken: Vec::new(),
            weight: 1.0,
        };
        let value = f(&mut d);
        out.push((d.weight, value));
        let mut taken = d.taken;
        let mut advanced = false;
        while let Some((c, arity)) = taken.pop() {
            if c + 1 < arity {
                prefix = taken.iter().map(|x| x.0).collect();
                prefix.push(c + 1);
                advanced = true;
                break;
            }
        }
        if !advanced {
            return out;
        }
    }
}

/// All count vectors of `s` nonnegative parts summing to `n`.
pub fn compositions(n: usize, s: usize) -> Vec<Vec<usize>> {
    if s == 1 {
        return vec![vec![n]];
    }
    (0..=n)
        .flat_map(|first| {
            compositions(n - first, s - 1).into_iter().map(move |mut rest| {
                rest.insert(0, first);
                rest
            })
        })
        .collect()
}

/// All distinct orderings of the multiset with the given label counts.
pub fn arrangements(counts: &[usize]) -> Vec<Vec<usize>> {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for (i, &c) in counts.iter().enumerate() {
        if c > 0 {
            let mut rest = counts.to_vec();
            rest[i] -= 1;
            for mut tail in arrangements(&rest) {
                tail.insert(0, i + 1);
                out.push(tail);
            }
        }
    }
    out
}

fn binomial_pmf(n: usize, k: usize, p: f64) -> f64 {
    let mut c = 1.0;
    for i in 0..k {
        c *= (n - i) as f64 / (i + 1) as f64;
    }
    c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

/// Two-site resampling as a Markov chain on the count of label 1:
/// `i → j` with probability `Binomial(N, i/N)(j)`. Returns, for each
/// transient `i = 1..N−1`, the probability of absorbing at `N` and the
/// expected absorption time.
pub fn resample_chain(n: usize) -> (Vec<f64>, Vec<f64>) {
    let m = n - 1;
    let mut a = DMatrix::<f64>::identity(m, m);
    let mut r = DVector::<f64>::zeros(m);
    for i in 1..n {
        let p = i as f64 / n as f64;
        for j in 1..n {
            a[(i - 1, j - 1)] -= binomial_pmf(n, j, p);
        }
        r[i - 1] = binomial_pmf(n, n, p);
    }
    let lu = a.lu();
    let h = lu.solve(&r).expect("nonsingular");
    let t = lu.solve(&DVector::from_element(m, 1.0)).expect("nonsingular");
    (h.iter().copied().collect(), t.iter().copied().collect())
}

/// Symmetric ±1 walk on `0..=k` absorbed at both ends: probability of
/// reaching `k` from each interior point, by dense linear solve.
pub fn gamblers_ruin(k: usize) -> Vec<f64> {
    let m = k - 1;
    let mut a = DMatrix::<f64>::identity(m, m);
    let mut r = DVector::<f64>::zeros(m);
    for i in 1..k {
        if i > 1 {
            a[(i - 1, i - 2)] -= 0.5;
        }
        if i + 1 < k {
            a[(i - 1, i)] -= 0.5;
        } else {
            r[i - 1] = 0.5;
        }
    }
    a.lu().solve(&r).expect("nonsingular").iter().copied().collect()
}

/// Expectation of a vector-valued outcome over enumerated branches.
pub fn mean_vector(branches: &[(f64, Vec<f64>)]) -> (f64, Vec<f64>) {
    let dim = branches[0].1.len();
    let mut mean = vec![0.0; dim];
    let mut total = 0.0;
    for (w, v) in branches {
        total += w;
        for (m, x) in mean.iter_mut().zip(v) {
            *m += w * x;
        }
    }
    (total, mean)
}
