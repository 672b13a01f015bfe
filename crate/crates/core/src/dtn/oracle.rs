//! Independent `G(h)ψ` from the Laplace problem in the fluid domain.
//!
//! The strip `−L < y < h(x)` is flattened by `y = −L + s D(x)`,
//! `D = h + L`, `s ∈ [0, 1]`. The transformed Laplacian is discretized by
//! Fourier collocation in `x` and Chebyshev collocation in `s`. Below
//! `y = −L` the potential is `Σ a_k e^{|k|y} e^{ikx}`, so `Φ_y = |∇|Φ` there
//! and the bottom condition is exact: the truncated domain introduces no
//! depth error. The system is solved by defect correction preconditioned
//! with the flat-interface operator, which is block diagonal in `k`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::spectral::fft;
use crate::spectral::{Field, PeriodicGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Chebyshev intervals in the vertical direction.
    pub levels: usize,
    /// Depth `L` of the artificial bottom, at least `3‖h‖_∞ + R/4`.
    /// `None` picks that minimum.
    pub depth: Option<f64>,
    /// Stop when the correction falls below `tolerance · ‖ψ‖_∞`.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            levels: 64,
            depth: None,
            tolerance: 1e-14,
            max_iterations: 400,
        }
    }
}

impl OracleConfig {
    fn validate(&self) -> Result<()> {
        if self.levels < 32 {
            return Err(LabError::rejected(format!(
                "oracle needs at least 32 vertical levels, got {}",
                self.levels
            )));
        }
        if !(self.tolerance > 0.0) || self.max_iterations == 0 {
            return Err(LabError::rejected(
                "oracle tolerance and iteration cap must be positive",
            ));
        }
        if let Some(l) = self.depth {
            if !(l > 0.0 && l.is_finite()) {
                return Err(LabError::rejected(format!("oracle depth must be positive, got {l}")));
            }
        }
        Ok(())
    }
}

/// `G(h)ψ` from the elliptic solve. Both inputs must be real.
pub fn dtn_elliptic_oracle(h: &Field, psi: &Field, config: &OracleConfig) -> Result<Field> {
    config.validate()?;
    h.grid().check_same(psi.grid())?;
    if !h.is_real() || !psi.is_real() {
        return Err(LabError::rejected("oracle needs real h and ψ"));
    }
    let grid = *h.grid();
    let n = grid.len();
    let ny = config.levels;
    let hv = h.real_values();
    let h_sup = hv.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min_depth = 3.0 * h_sup + grid.circumference() / 4.0;
    let depth = config.depth.unwrap_or(min_depth);
    if depth < min_depth {
        return Err(LabError::rejected(format!(
            "oracle depth {depth} below 3‖h‖_∞ + R/4 = {min_depth}"
        )));
    }
    let dv: Vec<f64> = hv.iter().map(|v| v + depth).collect();

    let cheb = Chebyshev::new(ny);
    let d_field = Field::from_real_values(grid, dv.clone())?;
    let d1 = d_field.ddx().real_values();
    let d2 = d_field.ddx().ddx().real_values();
    let alpha: Vec<f64> = (0..n).map(|i| d1[i] / dv[i]).collect();
    let beta: Vec<f64> = (0..n)
        .map(|i| (d2[i] * dv[i] - d1[i] * d1[i]) / (dv[i] * dv[i]))
        .collect();

    let op = Operator {
        grid,
        cheb: &cheb,
        xi: grid.wavenumbers(),
        d: dv,
        alpha,
        beta,
    };

    let scale = psi.sup_norm();
    if scale == 0.0 {
        return Ok(Field::zeros(grid));
    }

    // Φ = Φ₀ + φ with Φ₀ the flat-strip extension of ψ at the mean depth.
    // φ vanishes at the surface and is O(h), so round-off in the
    // Chebyshev derivatives is relative to φ rather than to ψ.
    let mean_depth = depth + h.mean().re;
    let pre = Preconditioner::new(&grid, &cheb, mean_depth);
    let psi_hat = psi.spectrum();
    let forcing = op.apply_flat(psi_hat, mean_depth);

    let mut phi: Vec<Vec<f64>> = vec![vec![0.0; n]; ny + 1];
    let mut last = f64::INFINITY;
    let mut converged = false;
    for _ in 0..config.max_iterations {
        let mut residual = op.apply(&phi);
        for (r, f) in residual.iter_mut().zip(&forcing) {
            for (a, b) in r.iter_mut().zip(f) {
                *a += b;
            }
        }
        let delta = pre.solve(&residual);
        let size = delta
            .iter()
            .flat_map(|row| row.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
            / scale;
        for (row, d) in phi.iter_mut().skip(1).zip(&delta) {
            for (p, q) in row.iter_mut().zip(d) {
                *p -= q;
            }
        }
        if !size.is_finite() {
            last = size;
            break;
        }
        // Either below tolerance or stalled at the round-off floor.
        if size <= config.tolerance || (size <= 1e3 * config.tolerance && size >= 0.5 * last) {
            converged = true;
            last = size;
            break;
        }
        last = size;
    }
    if !converged {
        return Err(LabError::NonConvergence {
            iterations: config.max_iterations,
            residual: last,
        });
    }

    let correction_s = cheb.apply_first(&phi, 0);
    let flat_s = psi.abs_grad().scale(mean_depth).real_values();
    let hx = h.ddx().real_values();
    let px = psi.ddx().real_values();
    let g: Vec<f64> = (0..n)
        .map(|i| (flat_s[i] + correction_s[i]) * (1.0 + hx[i] * hx[i]) / op.d[i] - hx[i] * px[i])
        .collect();
    Field::from_real_values(grid, g)
}

/// Chebyshev–Gauss–Lobatto points mapped to `s = (1+z)/2`; row 0 is the
/// surface `s = 1`, the last row the bottom `s = 0`.
struct Chebyshev {
    s: Vec<f64>,
    d1: DMatrix<f64>,
    d2: DMatrix<f64>,
}

impl Chebyshev {
    fn new(ny: usize) -> Self {
        let z: Vec<f64> = (0..=ny).map(|j| (PI * j as f64 / ny as f64).cos()).collect();
        let c = |i: usize| if i == 0 || i == ny { 2.0 } else { 1.0 };
        let mut d = DMatrix::<f64>::zeros(ny + 1, ny + 1);
        for i in 0..=ny {
            let mut diag = 0.0;
            for j in 0..=ny {
                if i != j {
                    let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                    let v = c(i) / c(j) * sign / (z[i] - z[j]);
                    d[(i, j)] = v;
                    diag -= v;
                }
            }
            d[(i, i)] = diag;
        }
        // d/ds = 2 d/dz
        let d1 = d * 2.0;
        let d2 = &d1 * &d1;
        Self {
            s: z.iter().map(|v| 0.5 * (1.0 + v)).collect(),
            d1,
            d2,
        }
    }

    fn levels(&self) -> usize {
        self.s.len() - 1
    }

    fn apply(mat: &DMatrix<f64>, phi: &[Vec<f64>], row: usize) -> Vec<f64> {
        let n = phi[0].len();
        let mut out = vec![0.0; n];
        for (l, level) in phi.iter().enumerate() {
            let w = mat[(row, l)];
            for (o, v) in out.iter_mut().zip(level) {
                *o += w * v;
            }
        }
        out
    }

    fn apply_first(&self, phi: &[Vec<f64>], row: usize) -> Vec<f64> {
        Self::apply(&self.d1, phi, row)
    }

    fn apply_second(&self, phi: &[Vec<f64>], row: usize) -> Vec<f64> {
        Self::apply(&self.d2, phi, row)
    }
}

struct Operator<'a> {
    grid: PeriodicGrid,
    cheb: &'a Chebyshev,
    xi: Vec<f64>,
    d: Vec<f64>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl Operator<'_> {
    fn spectral(&self, row: &[f64], symbol: impl Fn(f64) -> Complex64) -> Vec<f64> {
        let values: Vec<Complex64> = row.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mut spec = fft::forward(&values);
        let half = self.grid.len() / 2;
        for (i, c) in spec.iter_mut().enumerate() {
            let mut sym = symbol(self.xi[i]);
            if i == half {
                sym = Complex64::new(sym.re, 0.0);
            }
            *c *= sym;
        }
        fft::inverse(&spec).iter().map(|v| v.re).collect()
    }

    fn interior(&self, j: usize, xx: &[f64], xs: &[f64], ss: &[f64], first: &[f64]) -> Vec<f64> {
        let s = self.cheb.s[j];
        (0..self.grid.len())
            .map(|i| {
                let a = self.alpha[i];
                let inv_d = 1.0 / self.d[i];
                xx[i] - 2.0 * s * a * xs[i]
                    + (s * s * a * a + inv_d * inv_d) * ss[i]
                    + s * (a * a - self.beta[i]) * first[i]
            })
            .collect()
    }

    fn bottom(&self, first: &[f64], abs: &[f64]) -> Vec<f64> {
        (0..self.grid.len()).map(|i| first[i] - self.d[i] * abs[i]).collect()
    }

    /// Rows `1..=ny` of the operator applied to a correction that vanishes
    /// at the surface: the transformed Laplacian at interior levels and the
    /// transparent condition at the bottom.
    fn apply(&self, phi: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let ny = self.cheb.levels();
        let mut out = Vec::with_capacity(ny);
        for j in 1..ny {
            let xx = self.spectral(&phi[j], |xi| Complex64::new(-xi * xi, 0.0));
            let first = self.cheb.apply_first(phi, j);
            let ss = self.cheb.apply_second(phi, j);
            let xs = self.spectral(&first, |xi| Complex64::new(0.0, xi));
            out.push(self.interior(j, &xx, &xs, &ss, &first));
        }
        let first = self.cheb.apply_first(phi, ny);
        let abs = self.spectral(&phi[ny], |xi| Complex64::new(xi.abs(), 0.0));
        out.push(self.bottom(&first, &abs));
        out
    }

    /// The same rows for the flat-strip extension
    /// `Σ ψ̂_k e^{|k| D₀ (s−1)} e^{ikx}`, with exact vertical derivatives.
    fn apply_flat(&self, psi_hat: &[Complex64], depth: f64) -> Vec<Vec<f64>> {
        let ny = self.cheb.levels();
        let level = |j: usize, symbol: &dyn Fn(f64) -> Complex64| -> Vec<f64> {
            let s = self.cheb.s[j];
            let spec: Vec<Complex64> = psi_hat
                .iter()
                .zip(&self.xi)
                .enumerate()
                .map(|(i, (c, &xi))| {
                    let mut sym = symbol(xi);
                    if i == self.grid.len() / 2 {
                        sym = Complex64::new(sym.re, 0.0);
                    }
                    c * sym * (xi.abs() * depth * (s - 1.0)).exp()
                })
                .collect();
            fft::inverse(&spec).iter().map(|v| v.re).collect()
        };
        let mut out = Vec::with_capacity(ny);
        for j in 1..ny {
            let xx = level(j, &|xi| Complex64::new(-xi * xi, 0.0));
            let xs = level(j, &|xi| Complex64::new(0.0, xi * xi.abs() * depth));
            let ss = level(j, &|xi| Complex64::new((xi * depth).powi(2), 0.0));
            let first = level(j, &|xi| Complex64::new(xi.abs() * depth, 0.0));
            out.push(self.interior(j, &xx, &xs, &ss, &first));
        }
        let first = level(ny, &|xi| Complex64::new(xi.abs() * depth, 0.0));
        let abs = level(ny, &|xi| Complex64::new(xi.abs(), 0.0));
        out.push(self.bottom(&first, &abs));
        out
    }
}

/// Flat-interface operator, one dense factorization per `|k|`.
struct Preconditioner {
    xi: Vec<f64>,
    factors: Vec<(f64, nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>)>,
}

impl Preconditioner {
    fn new(grid: &PeriodicGrid, cheb: &Chebyshev, depth: f64) -> Self {
        let ny = cheb.levels();
        let xi = grid.wavenumbers();
        let mut magnitudes: Vec<f64> = xi.iter().map(|v| v.abs()).collect();
        magnitudes.sort_by(f64::total_cmp);
        magnitudes.dedup();
        let factors = magnitudes
            .into_iter()
            .map(|k| {
                let mut m = DMatrix::<f64>::zeros(ny, ny);
                for j in 1..ny {
                    for l in 1..=ny {
                        m[(j - 1, l - 1)] = cheb.d2[(j, l)] / (depth * depth);
                    }
                    m[(j - 1, j - 1)] -= k * k;
                }
                for l in 1..=ny {
                    m[(ny - 1, l - 1)] = cheb.d1[(ny, l)];
                }
                m[(ny - 1, ny - 1)] -= depth * k;
                (k, m.lu())
            })
            .collect();
        Self { xi, factors }
    }

    fn solve(&self, residual: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let ny = residual.len();
        let n = self.xi.len();
        let spectra: Vec<Vec<Complex64>> = residual
            .iter()
            .map(|row| {
                let values: Vec<Complex64> = row.iter().map(|&v| Complex64::new(v, 0.0)).collect();
                fft::forward(&values)
            })
            .collect();
        let mut out_spec = vec![vec![Complex64::new(0.0, 0.0); n]; ny];
        for i in 0..n {
            let k = self.xi[i].abs();
            let idx = self
                .factors
                .binary_search_by(|(m, _)| m.total_cmp(&k))
                .expect("every grid magnitude has a factor");
            let lu = &self.factors[idx].1;
            let re = DVector::from_iterator(ny, spectra.iter().map(|s| s[i].re));
            let im = DVector::from_iterator(ny, spectra.iter().map(|s| s[i].im));
            let (Some(x_re), Some(x_im)) = (lu.solve(&re), lu.solve(&im)) else {
                continue;
            };
            for j in 0..ny {
                out_spec[j][i] = Complex64::new(x_re[j], x_im[j]);
            }
        }
        out_spec
            .iter()
            .map(|spec| fft::inverse(spec).iter().map(|v| v.re).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> PeriodicGrid {
        PeriodicGrid::new(32, 2.0 * PI).unwrap()
    }

    #[test]
    fn chebyshev_differentiates_polynomials_exactly() {
        let c = Chebyshev::new(12);
        let phi: Vec<Vec<f64>> = c.s.iter().map(|s| vec![s.powi(5)]).collect();
        for j in 0..=12 {
            let s = c.s[j];
            assert!((c.apply_first(&phi, j)[0] - 5.0 * s.powi(4)).abs() < 1e-11);
            assert!((c.apply_second(&phi, j)[0] - 20.0 * s.powi(3)).abs() < 1e-9);
        }
    }

    #[test]
    fn flat_interface_gives_abs_gradient() {
        let g = grid();
        let psi = Field::from_real_fn(g, |x| (3.0 * x).cos() + 0.5 * (5.0 * x).sin());
        let out = dtn_elliptic_oracle(&Field::zeros(g), &psi, &OracleConfig::default()).unwrap();
        let err = out.sub(&psi.abs_grad()).unwrap().sup_norm() / psi.abs_grad().sup_norm();
        assert!(err < 1e-12, "err {err}");
    }

    #[test]
    fn translation_of_flat_interface() {
        // A constant shift of the surface leaves G unchanged in deep water.
        let g = grid();
        let psi = Field::from_real_fn(g, |x| (2.0 * x).sin());
        let h = Field::from_real_fn(g, |_| 0.2);
        let out = dtn_elliptic_oracle(&h, &psi, &OracleConfig::default()).unwrap();
        assert!(out.sub(&psi.abs_grad()).unwrap().sup_norm() < 1e-11);
    }

    #[test]
    fn iteration_cap_reports_residual() {
        let g = grid();
        let h = Field::from_real_fn(g, |x| 0.1 * x.cos());
        let psi = Field::from_real_fn(g, f64::sin);
        let cfg = OracleConfig {
            max_iterations: 1,
            ..OracleConfig::default()
        };
        match dtn_elliptic_oracle(&h, &psi, &cfg) {
            Err(LabError::NonConvergence { iterations, residual }) => {
                assert_eq!(iterations, 1);
                assert!(residual > 0.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
