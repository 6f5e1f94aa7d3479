//! Hard-wall lattice Hamiltonian and time stepping for the linear regime.
//!
//! The Hamiltonian on `S` sites is `c · tridiag(−1, 2, −1)` with
//! `c = 1 / (2 m h²)` and lattice spacing `h = ℓ / S` (units with ħ = 1).
//! Its spectrum is known in closed form, `E_n = 2c (1 − cos(nπ / (S + 1)))`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::WaveVector;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeHamiltonian {
    sites: usize,
    mass: f64,
    box_length: f64,
    coupling: f64,
}

impl LatticeHamiltonian {
    pub fn new(sites: usize, mass: f64, box_length: f64) -> Result<Self> {
        if sites < 2 {
            return Err(Error::config("sites", "need at least 2 sites"));
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::config("mass", format!("must be positive, got {mass}")));
        }
        if !(box_length > 0.0 && box_length.is_finite()) {
            return Err(Error::config(
                "box_length",
                format!("must be positive, got {box_length}"),
            ));
        }
        let h = box_length / sites as f64;
        Ok(Self {
            sites,
            mass,
            box_length,
            coupling: 1.0 / (2.0 * mass * h * h),
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    /// The prefactor `c`.
    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn diagonal(&self) -> f64 {
        2.0 * self.coupling
    }

    pub fn off_diagonal(&self) -> f64 {
        -self.coupling
    }

    /// Row-major dense copy of the matrix.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let s = self.sites;
        (0..s)
            .map(|i| {
                (0..s)
                    .map(|j| match i.abs_diff(j) {
                        0 => self.diagonal(),
                        1 => self.off_diagonal(),
                        _ => 0.0,
                    })
                    .collect()
            })
            .collect()
    }

    /// `H ψ`.
    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let s = psi.len();
        let (d, o) = (self.diagonal(), self.off_diagonal());
        (0..s)
            .map(|i| {
                let mut acc = psi[i] * d;
                if i > 0 {
                    acc += psi[i - 1] * o;
                }
                if i + 1 < s {
                    acc += psi[i + 1] * o;
                }
                acc
            })
            .collect()
    }

    /// `⟨ψ|H|ψ⟩`; real for any ψ up to rounding.
    pub fn energy(&self, psi: &WaveVector) -> Complex64 {
        let a = psi.amplitudes();
        self.apply(a)
            .iter()
            .zip(a)
            .map(|(hp, p)| p.conj() * hp)
            .sum()
    }

    /// `E_n` for `n = 1..=S`.
    pub fn eigenvalue(&self, n: usize) -> f64 {
        assert!(n >= 1 && n <= self.sites, "mode {n} outside 1..={}", self.sites);
        let theta = n as f64 * PI / (self.sites + 1) as f64;
        2.0 * self.coupling * (1.0 - theta.cos())
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        (1..=self.sites).map(|n| self.eigenvalue(n)).collect()
    }

    /// Normalized eigenvector `v_n(j) = √(2/(S+1)) sin(nπj/(S+1))`.
    pub fn eigenmode(&self, n: usize) -> Result<WaveVector> {
        if n == 0 || n > self.sites {
            return Err(Error::config(
                "eigenmode",
                format!("mode {n} outside 1..={}", self.sites),
            ));
        }
        let s1 = (self.sites + 1) as f64;
        let scale = (2.0 / s1).sqrt();
        let amp = (1..=self.sites)
            .map(|j| Complex64::new(scale * (n as f64 * PI * j as f64 / s1).sin(), 0.0))
            .collect();
        Ok(WaveVector::from_amplitudes(amp))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// `ψ' = ψ − iΔ Hψ`. Not norm preserving.
    ExplicitEuler,
    /// `(I + iΔH/2) ψ' = (I − iΔH/2) ψ`.
    CrankNicolson,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepScheme {
    scheme: Scheme,
    dt: f64,
}

impl StepScheme {
    /// `dt = 0` is accepted and gives the identity map.
    pub fn new(scheme: Scheme, dt: f64) -> Result<Self> {
        if !(dt >= 0.0 && dt.is_finite()) {
            return Err(Error::config("dt", format!("must be nonnegative, got {dt}")));
        }
        Ok(Self { scheme, dt })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
}

/// Reusable stepper; Crank–Nicolson keeps its tridiagonal factorization.
#[derive(Debug, Clone)]
pub struct Stepper {
    h: LatticeHamiltonian,
    scheme: StepScheme,
    // Thomas-algorithm forward sweep for I + iΔH/2.
    upper: Vec<Complex64>,
    pivot_inv: Vec<Complex64>,
}

impl Stepper {
    pub fn new(h: LatticeHamiltonian, scheme: StepScheme) -> Self {
        let (upper, pivot_inv) = match scheme.scheme {
            Scheme::ExplicitEuler => (Vec::new(), Vec::new()),
            Scheme::CrankNicolson => {
                let half = 0.5 * scheme.dt;
                let diag = Complex64::new(1.0, 0.0) + I * half * h.diagonal();
                let off = I * half * h.off_diagonal();
                let s = h.sites;
                let mut upper = Vec::with_capacity(s);
                let mut pivot_inv = Vec::with_capacity(s);
                let mut prev = Complex64::new(0.0, 0.0);
                for _ in 0..s {
                    let inv = 1.0 / (diag - off * prev);
                    pivot_inv.push(inv);
                    prev = off * inv;
                    upper.push(prev);
                }
                (upper, pivot_inv)
            }
        };
        Self {
            h,
            scheme,
            upper,
            pivot_inv,
        }
    }

    pub fn step(&self, psi: &WaveVector) -> Result<WaveVector> {
        let a = psi.amplitudes();
        if a.len() != self.h.sites {
            return Err(Error::Dimension {
                expected: self.h.sites,
                actual: a.len(),
            });
        }
        let dt = self.scheme.dt;
        let hpsi = self.h.apply(a);
        let next = match self.scheme.scheme {
            Scheme::ExplicitEuler => a.iter().zip(&hpsi).map(|(p, hp)| p - I * dt * hp).collect(),
            Scheme::CrankNicolson => {
                let rhs: Vec<Complex64> = a
                    .iter()
                    .zip(&hpsi)
                    .map(|(p, hp)| p - I * (0.5 * dt) * hp)
                    .collect();
                self.solve(&rhs)
            }
        };
        Ok(WaveVector::from_amplitudes(next))
    }

    fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let off = I * (0.5 * self.scheme.dt) * self.h.off_diagonal();
        let s = rhs.len();
        let mut x = vec![Complex64::new(0.0, 0.0); s];
        let mut prev = Complex64::new(0.0, 0.0);
        for i in 0..s {
            prev = (rhs[i] - off * prev) * self.pivot_inv[i];
            x[i] = prev;
        }
        for i in (0..s - 1).rev() {
            let next = x[i + 1];
            x[i] -= self.upper[i] * next;
        }
        x
    }
}

/// One step of `scheme`. The result is not renormalized.
pub fn step(psi: &WaveVector, h: &LatticeHamiltonian, scheme: StepScheme) -> Result<WaveVector> {
    Stepper::new(*h, scheme).step(psi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub step: u64,
    pub wave: WaveVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub frames: Vec<Frame>,
}

impl Trajectory {
    pub fn last(&self) -> &WaveVector {
        &self.frames.last().expect("trajectory always has a frame").wave
    }

    /// CSV with header `step,site,re,im,prob`; one row per site per frame.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "step,site,re,im,prob")?;
        for frame in &self.frames {
            for (i, z) in frame.wave.amplitudes().iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{:e},{:e},{:e}",
                    frame.step,
                    i + 1,
                    z.re,
                    z.im,
                    z.norm_sqr()
                )?;
            }
        }
        Ok(())
    }
}

/// States at `m = 0, stride, 2·stride, ...` plus the final step `steps`.
pub fn evolve(
    psi: &WaveVector,
    h: &LatticeHamiltonian,
    scheme: StepScheme,
    steps: u64,
    stride: u64,
) -> Result<Trajectory> {
    if psi.len() != h.sites {
        return Err(Error::Dimension {
            expected: h.sites,
            actual: psi.len(),
        });
    }
    let stride = stride.max(1);
    let stepper = Stepper::new(*h, scheme);
    let mut frames = vec![Frame {
        step: 0,
        wave: psi.clone(),
    }];
    let mut current = psi.clone();
    for m in 1..=steps {
        current = stepper.step(&current)?;
        if m % stride == 0 || m == steps {
            frames.push(Frame {
                step: m,
                wave: current.clone(),
            });
        }
    }
    Ok(Trajectory { frames })
}
