use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::spectral::{dealias_spectrum, Field, PeriodicGrid};

/// Highest supported truncation order.
pub const MAX_ORDER: usize = 6;

/// `Σ_{j≤M} G_j(h)ψ` by the Taylor recursion for the deep-water operator.
///
/// With `a⁽⁰⁾ = ψ` and `a⁽ⁿ⁾ = −Σ_{m=1..n} η^m/m! |D|^m a⁽ⁿ⁻ᵐ⁾`, the
/// operator is
/// `Σ_{m+j≤M} η^m/m! |D|^{m+1} a⁽ʲ⁾ − η' Σ_{m+j≤M−1} η^m/m! ∂|D|^m a⁽ʲ⁾`.
/// Every product is dealiased and `ψ` enters through its dealiased part.
/// The steepness guard is not checked here.
pub fn dtn_apply(h: &Field, psi: &Field, order: usize) -> Result<Field> {
    let excess = dtn_excess(h, psi, order)?;
    Ok(psi.dealias().abs_grad().add(&excess).expect("same grid"))
}

/// `G(h)ψ − |∇|ψ`, summed from the terms of order at least one in `h`
/// so that no cancellation against `|∇|ψ` occurs.
pub fn dtn_excess(h: &Field, psi: &Field, order: usize) -> Result<Field> {
    h.grid().check_same(psi.grid())?;
    if order > MAX_ORDER {
        return Err(LabError::rejected(format!(
            "series order {order} exceeds maximum {MAX_ORDER}"
        )));
    }
    let grid = *h.grid();
    let ops = Ops::new(grid);

    // η^m / m! in physical space, dealiased at every power.
    let mut powers: Vec<Vec<Complex64>> = vec![vec![Complex64::new(1.0, 0.0); grid.len()]];
    let mut spec = h.spectrum().to_vec();
    dealias_spectrum(&grid, &mut spec);
    let eta = ops.physical(&spec);
    for m in 1..=order {
        let next = ops.product(&powers[m - 1], &eta, 1.0 / m as f64);
        powers.push(ops.physical(&next));
    }

    let mut a: Vec<Vec<Complex64>> = vec![psi.spectrum().to_vec()];
    dealias_spectrum(&grid, &mut a[0]);
    for n in 1..=order {
        let mut acc = vec![Complex64::new(0.0, 0.0); grid.len()];
        for m in 1..=n {
            let term = ops.product(&powers[m], &ops.physical(&ops.abs_pow(&a[n - m], m)), -1.0);
            add_into(&mut acc, &term);
        }
        a.push(acc);
    }

    let mut g = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (j, aj) in a.iter().enumerate() {
        for m in 0..=order - j {
            if j == 0 && m == 0 {
                continue;
            }
            let lifted = ops.abs_pow(aj, m + 1);
            let term = if m == 0 {
                lifted
            } else {
                ops.product(&powers[m], &ops.physical(&lifted), 1.0)
            };
            add_into(&mut g, &term);
        }
    }
    if order > 0 {
        let mut flux = vec![Complex64::new(0.0, 0.0); grid.len()];
        for (j, aj) in a.iter().enumerate().take(order) {
            for m in 0..order - j {
                let lifted = ops.derivative(&ops.abs_pow(aj, m));
                let term = if m == 0 {
                    lifted
                } else {
                    ops.product(&powers[m], &ops.physical(&lifted), 1.0)
                };
                add_into(&mut flux, &term);
            }
        }
        let slope = ops.physical(&ops.derivative(&spec));
        let correction = ops.product(&slope, &ops.physical(&flux), -1.0);
        add_into(&mut g, &correction);
    }
    g[0] = Complex64::new(0.0, 0.0);
    Field::from_spectrum(grid, g, true)
}

fn add_into(acc: &mut [Complex64], term: &[Complex64]) {
    for (a, t) in acc.iter_mut().zip(term) {
        *a += t;
    }
}

struct Ops {
    grid: PeriodicGrid,
    xi: Vec<f64>,
}

impl Ops {
    fn new(grid: PeriodicGrid) -> Self {
        Self {
            xi: grid.wavenumbers(),
            grid,
        }
    }

    fn physical(&self, spec: &[Complex64]) -> Vec<Complex64> {
        crate::spectral::fft::inverse(spec)
    }

    /// `scale · P(f g)` for physical `f`, `g`.
    fn product(&self, f: &[Complex64], g: &[Complex64], scale: f64) -> Vec<Complex64> {
        let values: Vec<Complex64> = f.iter().zip(g).map(|(a, b)| a * b * scale).collect();
        let mut spec = crate::spectral::fft::forward(&values);
        dealias_spectrum(&self.grid, &mut spec);
        spec
    }

    fn abs_pow(&self, spec: &[Complex64], p: usize) -> Vec<Complex64> {
        spec.iter()
            .zip(&self.xi)
            .map(|(c, xi)| c * xi.abs().powi(p as i32))
            .collect()
    }

    fn derivative(&self, spec: &[Complex64]) -> Vec<Complex64> {
        spec.iter()
            .zip(&self.xi)
            .map(|(c, xi)| c * Complex64::new(0.0, *xi))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn grid() -> PeriodicGrid {
        PeriodicGrid::new(64, 2.0 * PI).unwrap()
    }

    #[test]
    fn order_zero_is_abs_gradient() {
        let g = grid();
        let h = Field::from_real_fn(g, |x| 0.1 * x.cos());
        let psi = Field::from_real_fn(g, |x| (3.0 * x).sin());
        let r = dtn_apply(&h, &psi, 0).unwrap();
        assert!(r.sub(&psi.abs_grad()).unwrap().sup_norm() < 1e-13);
    }

    #[test]
    fn first_order_matches_closed_form() {
        // G₁ψ = −|D|(h|D|ψ) − (hψ')'
        let g = grid();
        let h = Field::from_real_fn(g, |x| 0.1 * (2.0 * x).cos());
        let psi = Field::from_real_fn(g, |x| (3.0 * x).sin() + 0.2 * x.cos());
        let g1 = dtn_apply(&h, &psi, 1).unwrap().sub(&psi.abs_grad()).unwrap();
        let expect = h
            .mul_dealiased(&psi.abs_grad())
            .unwrap()
            .abs_grad()
            .add(&h.mul_dealiased(&psi.ddx()).unwrap().ddx())
            .unwrap()
            .scale(-1.0);
        assert!(g1.sub(&expect).unwrap().sup_norm() < 1e-13);
    }

    #[test]
    fn constants_are_annihilated() {
        let g = grid();
        let h = Field::from_real_fn(g, |x| 0.05 * x.sin() + 0.02 * (4.0 * x).cos());
        let one = Field::from_real_fn(g, |_| 1.0);
        for m in 0..=MAX_ORDER {
            assert!(dtn_apply(&h, &one, m).unwrap().sup_norm() < 1e-15);
        }
    }

    #[test]
    fn order_above_maximum_rejected() {
        let g = grid();
        let z = Field::zeros(g);
        assert!(dtn_apply(&z, &z, MAX_ORDER + 1).is_err());
    }
}
