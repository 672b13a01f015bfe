//! Least-squares power-law fits.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{LabError, Result};

/// Straight-line fit `y ≈ intercept + slope·x` with a 95% interval on the
/// slope. The interval is `(slope, slope)` when there are only two points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub ci95: (f64, f64),
    pub points: usize,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() {
        return Err(LabError::rejected("fit abscissae and ordinates differ in length"));
    }
    if x.len() < 2 {
        return Err(LabError::rejected("fit needs at least two points"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(LabError::rejected("fit data must be finite"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(LabError::rejected("fit abscissae are all equal"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let (stderr, ci95) = if x.len() > 2 {
        let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        let dof = n - 2.0;
        let se = (rss / dof / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, dof)
            .expect("positive degrees of freedom")
            .inverse_cdf(0.975);
        (se, (slope - t * se, slope + t * se))
    } else {
        (0.0, (slope, slope))
    };
    Ok(LineFit {
        slope,
        intercept,
        slope_stderr: stderr,
        ci95,
        points: x.len(),
    })
}

/// Fit of `ln y` against `ln x`; all data must be positive.
pub fn log_log_fit(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.iter().chain(y).any(|&v| !(v > 0.0)) {
        return Err(LabError::rejected("log-log fit needs positive data"));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly)
}

/// Percentile bootstrap of a log-log slope over groups of replicate
/// measurements: each resample draws one replicate per abscissa, with
/// replacement, and fits the group medians.
pub fn bootstrap_log_log_slope(x: &[f64], groups: &[Vec<f64>], resamples: usize, seed: u64) -> Result<(f64, f64)> {
    if x.len() != groups.len() || groups.iter().any(|g| g.is_empty()) {
        return Err(LabError::rejected("bootstrap needs one nonempty group per abscissa"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slopes = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let y: Vec<f64> = groups
            .iter()
            .map(|g| {
                let draw: Vec<f64> = (0..g.len()).map(|_| *g.choose(&mut rng).expect("nonempty")).collect();
                median(&draw)
            })
            .collect();
        if let Ok(fit) = log_log_fit(x, &y) {
            slopes.push(fit.slope);
        }
    }
    if slopes.is_empty() {
        return Err(LabError::rejected("no bootstrap resample produced a fit"));
    }
    slopes.sort_by(f64::total_cmp);
    let q = |p: f64| slopes[((slopes.len() - 1) as f64 * p).round() as usize];
    Ok((q(0.025), q(0.975)))
}

/// Median of a nonempty slice; the mean of the middle pair for even sizes.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-1.5)).collect();
        let fit = log_log_fit(&x, &y).unwrap();
        assert!((fit.slope + 1.5).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(fit.ci95.1 - fit.ci95.0 < 1e-10);
    }

    #[test]
    fn interval_contains_slope() {
        let x = [0.0, 1.0, 2.0, 3.0, 4.0];
        let y = [0.1, 0.9, 2.2, 2.9, 4.1];
        let fit = linear_fit(&x, &y).unwrap();
        assert!(fit.ci95.0 < fit.slope && fit.slope < fit.ci95.1);
    }

    #[test]
    fn degenerate_inputs_rejected() {
        assert!(linear_fit(&[1.0], &[1.0]).is_err());
        assert!(linear_fit(&[1.0, 1.0], &[1.0, 2.0]).is_err());
        assert!(log_log_fit(&[1.0, 2.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn bootstrap_brackets_noiseless_slope() {
        let x = [1.0, 2.0, 4.0];
        let groups: Vec<Vec<f64>> = x.iter().map(|v: &f64| vec![v.powi(-2); 4]).collect();
        let (lo, hi) = bootstrap_log_log_slope(&x, &groups, 200, 7).unwrap();
        assert!((lo + 2.0).abs() < 1e-12 && (hi + 2.0).abs() < 1e-12);
    }
}
