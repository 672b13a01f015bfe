use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fft;
use super::field::Field;
use super::lp::{Block, LpDecomposition};

/// `(R Σ_m (1+ξ_m²)^s |c_m|²)^{1/2}`.
///
/// With coefficients normalized as continuum averages this is the
/// continuum `H^s` norm of the periodic function over one period; at
/// `s = 0` it is the physical `L²` norm (Parseval).
pub fn sobolev_norm(f: &Field, s: f64) -> f64 {
    let grid = f.grid();
    let sum: f64 = f
        .spectrum()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let xi = grid.wavenumber(i);
            (1.0 + xi * xi).powf(s) * c.norm_sqr()
        })
        .sum();
    (grid.circumference() * sum).sqrt()
}

/// `(∫ |f|² dx)^{1/2}` by physical-space quadrature.
pub fn l2_quadrature(f: &Field) -> f64 {
    let sum: f64 = f.values().iter().map(|v| v.norm_sqr()).sum();
    (sum * f.grid().dx()).sqrt()
}

/// How `‖·‖_∞` is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SupSampling {
    /// Maximum over the grid samples.
    #[default]
    Grid,
    /// Maximum over a spectrally zero-padded grid `factor` times finer.
    Oversampled(usize),
}

pub fn sup_norm(f: &Field, sampling: SupSampling) -> f64 {
    match sampling {
        SupSampling::Grid | SupSampling::Oversampled(0) | SupSampling::Oversampled(1) => f.sup_norm(),
        SupSampling::Oversampled(factor) => oversampled_values(f.spectrum(), factor)
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max),
    }
}

/// Samples the trigonometric interpolant of `spectrum` on a grid `factor`
/// times finer. The Nyquist coefficient is split evenly between `±N/2`.
pub(crate) fn oversampled_values(spectrum: &[Complex64], factor: usize) -> Vec<Complex64> {
    let n = spectrum.len();
    let big = n * factor;
    let mut buf = vec![Complex64::new(0.0, 0.0); big];
    let half = n / 2;
    buf[..half].copy_from_slice(&spectrum[..half]);
    for i in half + 1..n {
        buf[big - (n - i)] = spectrum[i];
    }
    let nyq = spectrum[half] * 0.5;
    buf[half] = nyq;
    buf[big - half] = nyq;
    fft::inverse_in_place(&mut buf);
    buf
}

/// `max(‖P_low f‖_∞, sup_{k≥1} 2^{kγ} ‖P_k f‖_∞)` — the `C_*^γ` norm.
pub fn besov_norm(f: &Field, gamma: f64) -> f64 {
    besov_norm_with(f, gamma, &LpDecomposition::for_grid(f.grid()), SupSampling::Grid)
}

pub fn besov_norm_with(f: &Field, gamma: f64, lp: &LpDecomposition, sampling: SupSampling) -> f64 {
    lp.blocks()
        .map(|block| {
            let part = lp.project(f, block).expect("blocks come from the decomposition");
            let weight = match block {
                Block::Low => 1.0,
                Block::Dyadic(k) => 2f64.powf(k as f64 * gamma),
            };
            weight * sup_norm(&part, sampling)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::spectral::PeriodicGrid;

    #[test]
    fn parseval_for_sine() {
        let grid = PeriodicGrid::new(32, 2.0 * PI).unwrap();
        let f = Field::from_real_fn(grid, f64::sin);
        assert!((sobolev_norm(&f, 0.0) - PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn sobolev_zero_matches_quadrature() {
        let grid = PeriodicGrid::new(128, 17.0).unwrap();
        let f = Field::from_real_fn(grid, |x| (0.3 * x).sin().exp() + (1.1 * x).cos());
        let a = sobolev_norm(&f, 0.0);
        let b = l2_quadrature(&f);
        assert!((a - b).abs() <= 1e-12 * b);
    }

    #[test]
    fn besov_of_zero_is_zero() {
        let grid = PeriodicGrid::new(32, 5.0).unwrap();
        assert_eq!(besov_norm(&Field::zeros(grid), 2.5), 0.0);
    }

    #[test]
    fn oversampling_finds_off_grid_peak() {
        // A single mode whose peak falls between samples.
        let grid = PeriodicGrid::new(8, 8.0).unwrap();
        let k = 2.0 * PI * 3.0 / 8.0;
        let f = Field::from_real_fn(grid, |x| (k * (x - 0.5)).cos());
        let coarse = sup_norm(&f, SupSampling::Grid);
        let fine = sup_norm(&f, SupSampling::Oversampled(8));
        assert!(coarse < 0.95);
        assert!((fine - 1.0).abs() < 1e-12);
    }
}
