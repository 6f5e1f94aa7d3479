//! Hidden-variable state, face probabilities and the derived wave vector.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A site label. Labels are 1-based: a lattice with `S` sites uses `1..=S`.
pub type Site = usize;

/// Tolerance on `Σ p_i = 1` and `Σ |ψ_i|² = 1`.
pub const NORM_TOL: f64 = 1e-12;

/// The sequence `gamma` of site labels together with one phase per site.
///
/// The number of sites is the number of phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawHiddenState")]
pub struct HiddenState {
    gamma: Vec<Site>,
    phases: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHiddenState {
    gamma: Vec<Site>,
    phases: Vec<f64>,
}

impl TryFrom<RawHiddenState> for HiddenState {
    type Error = Error;

    fn try_from(raw: RawHiddenState) -> Result<Self> {
        HiddenState::new(raw.gamma, raw.phases)
    }
}

impl HiddenState {
    pub fn new(gamma: Vec<Site>, phases: Vec<f64>) -> Result<Self> {
        let sites = phases.len();
        if sites < 2 {
            return Err(Error::InvalidState(format!(
                "need at least 2 sites, got {sites}"
            )));
        }
        if gamma.is_empty() {
            return Err(Error::InvalidState("gamma is empty".into()));
        }
        if let Some(bad) = gamma.iter().find(|&&x| x == 0 || x > sites) {
            return Err(Error::InvalidState(format!(
                "label {bad} outside 1..={sites}"
            )));
        }
        if let Some(bad) = phases.iter().find(|a| !(0.0..TAU).contains(*a)) {
            return Err(Error::InvalidState(format!("phase {bad} outside [0, 2π)")));
        }
        Ok(Self { gamma, phases })
    }

    /// State with every phase set to zero.
    pub fn with_zero_phases(gamma: Vec<Site>, sites: usize) -> Result<Self> {
        Self::new(gamma, vec![0.0; sites])
    }

    /// Lower-level constructor for engines that already guarantee the invariants.
    pub(crate) fn from_parts_unchecked(gamma: Vec<Site>, phases: Vec<f64>) -> Self {
        debug_assert!(gamma.iter().all(|&x| x >= 1 && x <= phases.len()));
        Self { gamma, phases }
    }

    pub fn gamma(&self) -> &[Site] {
        &self.gamma
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// Sequence length `N`.
    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    /// Site count `S`.
    pub fn sites(&self) -> usize {
        self.phases.len()
    }

    /// Replace the phases, keeping `gamma`.
    pub fn with_phases(self, phases: Vec<f64>) -> Result<Self> {
        if phases.len() != self.sites() {
            return Err(Error::Dimension {
                expected: self.sites(),
                actual: phases.len(),
            });
        }
        Self::new(self.gamma, phases)
    }

    /// Occurrences of each label; entry `i` counts label `i + 1`.
    pub fn counts(&self) -> Vec<usize> {
        counts_of(&self.gamma, self.sites())
    }

    pub fn to_prob(&self) -> ProbVector {
        let n = self.len() as f64;
        ProbVector(self.counts().into_iter().map(|c| c as f64 / n).collect())
    }

    /// `ψ_i = √(n_i / N) · e^{iα_i}`.
    pub fn to_wave(&self) -> WaveVector {
        let p = self.to_prob();
        WaveVector(
            p.0.iter()
                .zip(&self.phases)
                .map(|(&pi, &alpha)| Complex64::from_polar(pi.sqrt(), alpha))
                .collect(),
        )
    }

    /// The common label if every element of `gamma` is the same.
    pub fn fixated(&self) -> Option<Site> {
        let first = self.gamma[0];
        self.gamma.iter().all(|&x| x == first).then_some(first)
    }
}

pub(crate) fn counts_of(gamma: &[Site], sites: usize) -> Vec<usize> {
    let mut counts = vec![0usize; sites];
    for &x in gamma {
        counts[x - 1] += 1;
    }
    counts
}

/// How [`sample_hidden`] turns probabilities into a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMode {
    /// Exactly `N·p_i` copies of label `i`, sorted, then shuffled.
    Exact,
    /// `N` independent draws from `p`.
    Multinomial,
}

/// Build a sequence of length `n` realizing `p`. Phases are zero; use
/// [`HiddenState::with_phases`] to set them.
pub fn sample_hidden<R: Rng + ?Sized>(
    p: &ProbVector,
    n: usize,
    mode: SampleMode,
    rng: &mut R,
) -> Result<HiddenState> {
    if n == 0 {
        return Err(Error::InvalidState("sequence length must be positive".into()));
    }
    let sites = p.len();
    let gamma = match mode {
        SampleMode::Exact => {
            let counts = exact_counts(p, n)?;
            let mut gamma: Vec<Site> = counts
                .iter()
                .enumerate()
                .flat_map(|(i, &c)| std::iter::repeat_n(i + 1, c))
                .collect();
            gamma.shuffle(rng);
            gamma
        }
        SampleMode::Multinomial => {
            let cdf: Vec<f64> = p
                .0
                .iter()
                .scan(0.0, |acc, &x| {
                    *acc += x;
                    Some(*acc)
                })
                .collect();
            let last_nonzero = p.0.iter().rposition(|&x| x > 0.0).unwrap_or(sites - 1);
            (0..n)
                .map(|_| {
                    let u: f64 = rng.random::<f64>() * cdf[sites - 1];
                    let i = cdf.partition_point(|&c| c <= u);
                    i.min(last_nonzero) + 1
                })
                .collect()
        }
    };
    Ok(HiddenState::from_parts_unchecked(gamma, vec![0.0; sites]))
}

/// Integer counts `N·p_i`, rejecting probabilities that are not multiples of `1/N`.
pub fn exact_counts(p: &ProbVector, n: usize) -> Result<Vec<usize>> {
    let scale = n as f64;
    let tol = 1e-9 * scale.max(1.0);
    let mut counts = Vec::with_capacity(p.len());
    for (i, &pi) in p.0.iter().enumerate() {
        let target = pi * scale;
        let rounded = target.round();
        if (target - rounded).abs() > tol {
            return Err(Error::InvalidProb(format!(
                "N·p_{} = {target} is not an integer (N = {n})",
                i + 1
            )));
        }
        counts.push(rounded as usize);
    }
    let total: usize = counts.iter().sum();
    if total != n {
        return Err(Error::InvalidProb(format!(
            "exact counts sum to {total}, expected {n}"
        )));
    }
    Ok(counts)
}

/// Face probabilities `p_i`, nonnegative and summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbVector(Vec<f64>);

impl TryFrom<Vec<f64>> for ProbVector {
    type Error = Error;

    fn try_from(p: Vec<f64>) -> Result<Self> {
        ProbVector::new(p)
    }
}

impl From<ProbVector> for Vec<f64> {
    fn from(p: ProbVector) -> Self {
        p.0
    }
}

impl ProbVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.len() < 2 {
            return Err(Error::InvalidProb(format!(
                "need at least 2 entries, got {}",
                p.len()
            )));
        }
        if let Some((i, x)) = p.iter().enumerate().find(|(_, x)| !(0.0..=1.0).contains(*x)) {
            return Err(Error::InvalidProb(format!("p_{} = {x} outside [0, 1]", i + 1)));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidProb(format!("entries sum to {sum}")));
        }
        Ok(Self(p))
    }

    /// Rescale nonnegative weights to a distribution.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidProb("weights must be finite and nonnegative".into()));
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(Error::InvalidProb("weights sum to zero".into()));
        }
        Self::new(weights.into_iter().map(|w| w / sum).collect())
    }

    /// `N` counts as probabilities `n_i / N`.
    pub fn from_counts(counts: &[usize]) -> Result<Self> {
        let n: usize = counts.iter().sum();
        if n == 0 {
            return Err(Error::InvalidProb("counts sum to zero".into()));
        }
        Self::new(counts.iter().map(|&c| c as f64 / n as f64).collect())
    }

    /// Point mass at `site` on `sites` sites.
    pub fn basis(site: Site, sites: usize) -> Self {
        assert!(site >= 1 && site <= sites, "site {site} outside 1..={sites}");
        let mut p = vec![0.0; sites];
        p[site - 1] = 1.0;
        Self(p)
    }

    pub(crate) fn from_vec_unchecked(p: Vec<f64>) -> Self {
        Self(p)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, site: Site) -> f64 {
        self.0[site - 1]
    }

    /// The site carrying all the mass, if any.
    pub fn fixated(&self) -> Option<Site> {
        self.0.iter().position(|&x| x == 1.0).map(|i| i + 1)
    }
}

/// Complex amplitude per site. Serializes as `[[re, im], ...]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Complex64>", into = "Vec<Complex64>")]
pub struct WaveVector(Vec<Complex64>);

impl TryFrom<Vec<Complex64>> for WaveVector {
    type Error = Error;

    fn try_from(amp: Vec<Complex64>) -> Result<Self> {
        WaveVector::new(amp)
    }
}

impl From<WaveVector> for Vec<Complex64> {
    fn from(w: WaveVector) -> Self {
        w.0
    }
}

impl WaveVector {
    /// Checked constructor: requires unit norm.
    pub fn new(amp: Vec<Complex64>) -> Result<Self> {
        if amp.len() < 2 {
            return Err(Error::InvalidWave(format!(
                "need at least 2 sites, got {}",
                amp.len()
            )));
        }
        let w = Self(amp);
        let norm2 = w.norm_sqr();
        if (norm2 - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidWave(format!("squared norm is {norm2}")));
        }
        Ok(w)
    }

    /// Amplitudes without a norm check. Non-unitary integrators produce these.
    pub fn from_amplitudes(amp: Vec<Complex64>) -> Self {
        Self(amp)
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.0
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `|ψ_i|²` per site, not renormalized.
    pub fn probabilities(&self) -> Vec<f64> {
        self.0.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Euclidean distance `‖self − other‖`.
    pub fn distance(&self, other: &WaveVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}
