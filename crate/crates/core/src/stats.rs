//! Goodness-of-fit statistics for fixation counts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cells whose expected count falls below this are pooled.
pub const MIN_EXPECTED: f64 = 5.0;

/// Significance level of the compiled-in critical values.
pub const ALPHA: f64 = 0.001;

/// Upper 0.001 quantiles of the chi-square distribution, 1 to 30 degrees
/// of freedom.
const CRITICAL_0_001: [f64; 30] = [
    10.828, 13.816, 16.266, 18.467, 20.515, 22.458, 24.322, 26.124, 27.877, 29.588, 31.264, 32.909,
    34.528, 36.123, 37.697, 39.252, 40.790, 42.312, 43.820, 45.315, 46.797, 48.268, 49.728, 51.179,
    52.620, 54.052, 55.476, 56.892, 58.301, 59.703,
];

/// Standard normal quantile at 0.999.
const Z_0_999: f64 = 3.090_232_306_167_813;

/// Critical value at `ALPHA` for `dof` degrees of freedom. Beyond the table
/// the Wilson–Hilferty approximation is used.
pub fn critical_value(dof: usize) -> Option<f64> {
    match dof {
        0 => None,
        1..=30 => Some(CRITICAL_0_001[dof - 1]),
        _ => {
            let k = dof as f64;
            let a = 2.0 / (9.0 * k);
            Some(k * (1.0 - a + Z_0_999 * a.sqrt()).powi(3))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pooling {
    /// Merge cells with expected count below [`MIN_EXPECTED`].
    Small,
    /// Use every cell as is; a zero expected count is an error.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub critical_value: Option<f64>,
    pub alpha: f64,
    /// Number of cells after pooling.
    pub cells: usize,
    pub pass: bool,
}

/// Pearson statistic `Σ (O − R p)² / (R p)` of `observed` against `expected`.
///
/// `observed` must sum to `total`. With `Pooling::Small`, cells with
/// expected count under 5 are merged into one cell; if that cell is still
/// under 5 it is merged into the smallest remaining cell.
pub fn chi_square(observed: &[u64], expected: &[f64], total: u64, pooling: Pooling) -> Result<ChiSquare> {
    if observed.len() != expected.len() {
        return Err(Error::ChiSquare(format!(
            "{} observed cells but {} expected",
            observed.len(),
            expected.len()
        )));
    }
    if total == 0 {
        return Err(Error::ChiSquare("no trials".into()));
    }
    let sum: u64 = observed.iter().sum();
    if sum != total {
        return Err(Error::ChiSquare(format!("observed counts sum to {sum}, expected {total}")));
    }
    let r = total as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    match pooling {
        Pooling::None => {
            for (&o, &p) in observed.iter().zip(expected) {
                if p <= 0.0 {
                    return Err(Error::ChiSquare("cell with zero expected count".into()));
                }
                cells.push((o as f64, r * p));
            }
        }
        Pooling::Small => {
            let mut pooled = (0.0, 0.0);
            let mut any_pooled = false;
            for (&o, &p) in observed.iter().zip(expected) {
                let e = r * p;
                if e < MIN_EXPECTED {
                    pooled.0 += o as f64;
                    pooled.1 += e;
                    any_pooled = true;
                } else {
                    cells.push((o as f64, e));
                }
            }
            if any_pooled {
                if pooled.1 >= MIN_EXPECTED || cells.is_empty() {
                    cells.push(pooled);
                } else {
                    let smallest = cells
                        .iter_mut()
                        .min_by(|a, b| a.1.total_cmp(&b.1))
                        .expect("nonempty");
                    smallest.0 += pooled.0;
                    smallest.1 += pooled.1;
                }
            }
        }
    }
    let statistic = cells
        .iter()
        .map(|&(o, e)| if e > 0.0 { (o - e).powi(2) / e } else { 0.0 })
        .sum();
    let dof = cells.len().saturating_sub(1);
    let critical_value = critical_value(dof);
    Ok(ChiSquare {
        statistic,
        dof,
        critical_value,
        alpha: ALPHA,
        cells: cells.len(),
        pass: critical_value.is_none_or(|c| statistic < c),
    })
}

/// `½ Σ |a_k − b_k|`.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Nearest-rank quantile of sorted data: element `ceil(q·n) − 1`.
pub fn nearest_rank(sorted: &[u64], q: f64) -> Option<u64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, sorted.len()) - 1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepSummary {
    pub min: u64,
    pub median: u64,
    pub p95: u64,
    pub max: u64,
}

impl StepSummary {
    pub fn from_unsorted(steps: &[u64]) -> Option<Self> {
        let mut sorted = steps.to_vec();
        sorted.sort_unstable();
        Some(Self {
            min: *sorted.first()?,
            median: nearest_rank(&sorted, 0.5)?,
            p95: nearest_rank(&sorted, 0.95)?,
            max: *sorted.last()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn exact_match_is_zero() {
        let c = chi_square(&[20, 30, 50], &[0.2, 0.3, 0.5], 100, Pooling::Small).unwrap();
        assert_eq!(c.statistic, 0.0);
        assert_eq!(c.dof, 2);
        assert!(c.pass);
    }

    #[test]
    fn fifty_five_forty_five() {
        let c = chi_square(&[55, 45], &[0.5, 0.5], 100, Pooling::None).unwrap();
        assert!((c.statistic - 1.0).abs() < 1e-12);
        assert_eq!(c.dof, 1);
        assert_eq!(c.critical_value, Some(10.828));
    }

    #[test]
    fn table_matches_inverse_cdf() {
        for dof in 1..=30 {
            let exact = ChiSquared::new(dof as f64).unwrap().inverse_cdf(1.0 - ALPHA);
            let table = critical_value(dof).unwrap();
            assert!((exact - table).abs() < 6e-4, "dof {dof}: {exact} vs {table}");
        }
        assert_eq!(critical_value(5), Some(20.515));
        for dof in [31, 50, 120] {
            let exact = ChiSquared::new(dof as f64).unwrap().inverse_cdf(1.0 - ALPHA);
            let approx = critical_value(dof).unwrap();
            assert!((exact - approx).abs() / exact < 2e-3);
        }
    }

    #[test]
    fn small_cells_are_pooled() {
        // Expected (1, 2, 47, 50): the first two are pooled (3 < 5) and then
        // folded into the 47 cell.
        let c = chi_square(&[1, 2, 47, 50], &[0.01, 0.02, 0.47, 0.5], 100, Pooling::Small).unwrap();
        assert_eq!(c.cells, 2);
        assert_eq!(c.dof, 1);
        assert!(c.statistic.abs() < 1e-12);

        let c = chi_square(&[1, 0], &[1.0, 0.0], 1, Pooling::Small).unwrap();
        assert_eq!(c.dof, 0);
        assert_eq!(c.critical_value, None);
        assert!(c.pass);
    }

    #[test]
    fn zero_expected_without_pooling_is_rejected() {
        assert!(chi_square(&[10, 0], &[1.0, 0.0], 10, Pooling::None).is_err());
        assert!(chi_square(&[10, 1], &[0.5, 0.5], 10, Pooling::Small).is_err());
        assert!(chi_square(&[], &[], 0, Pooling::Small).is_err());
    }

    #[test]
    fn tv_and_quantiles() {
        assert!((total_variation(&[0.5, 0.5], &[0.3, 0.7]) - 0.2).abs() < 1e-15);
        let s = StepSummary::from_unsorted(&[5, 1, 4, 2, 3]).unwrap();
        assert_eq!(s, StepSummary { min: 1, median: 3, p95: 5, max: 5 });
        let s = StepSummary::from_unsorted(&[0]).unwrap();
        assert_eq!(s, StepSummary { min: 0, median: 0, p95: 0, max: 0 });
        assert!(StepSummary::from_unsorted(&[]).is_none());
        let s = StepSummary::from_unsorted(&[1, 2, 3, 4]).unwrap();
        assert_eq!(s.median, 2);
    }
}
