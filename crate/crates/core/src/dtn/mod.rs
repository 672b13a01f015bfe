//! Dirichlet-to-Neumann operator `G(h)ψ` and the derived fields `B`, `V`,
//! `B₃`.
//!
//! The working evaluator is a truncated expansion in powers of `h`; an
//! independent elliptic solve in [`oracle`] certifies it.

mod bench;
mod oracle;
mod series;

pub use bench::{inequality_bench, BenchConfig, BenchReport, RatioStats};
pub use oracle::{dtn_elliptic_oracle, OracleConfig};
pub use series::{dtn_apply, dtn_excess, MAX_ORDER};

use crate::error::{LabError, Result};
use crate::spectral::{Field, PeriodicGrid};

/// Series-regime guard on `‖h'‖_∞`.
pub const STEEPNESS_GUARD: f64 = 0.5;

/// Default truncation order for evolution.
pub const DEFAULT_ORDER: usize = 3;

/// Surface elevation `h` and boundary potential `ψ` at time `t`.
///
/// Both fields are real and are projected onto the dealiased band on
/// construction; the mean of `ψ` is pinned to zero since `ψ` only matters
/// modulo constants.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    h: Field,
    psi: Field,
    pub t: f64,
}

impl WaveState {
    pub fn new(h: Field, psi: Field, t: f64) -> Result<Self> {
        h.grid().check_same(psi.grid())?;
        if !h.is_real() || !psi.is_real() {
            return Err(LabError::rejected("h and ψ must be real fields"));
        }
        let psi = pin_mean(&psi.dealias());
        Ok(Self { h: h.dealias(), psi, t })
    }

    pub fn zero(grid: PeriodicGrid) -> Self {
        Self {
            h: Field::zeros(grid),
            psi: Field::zeros(grid),
            t: 0.0,
        }
    }

    #[inline]
    pub fn grid(&self) -> &PeriodicGrid {
        self.h.grid()
    }

    #[inline]
    pub fn h(&self) -> &Field {
        &self.h
    }

    #[inline]
    pub fn psi(&self) -> &Field {
        &self.psi
    }

    /// `‖h'‖_∞`.
    pub fn steepness(&self) -> f64 {
        self.h.ddx().sup_norm()
    }

    pub fn check_steepness(&self) -> Result<()> {
        let s = self.steepness();
        if s.is_nan() || s > STEEPNESS_GUARD {
            Err(LabError::Steepness {
                steepness: s,
                guard: STEEPNESS_GUARD,
            })
        } else {
            Ok(())
        }
    }

    /// `(λh, λψ)`.
    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            h: self.h.scale(lambda),
            psi: self.psi.scale(lambda),
            t: self.t,
        }
    }

    pub fn translated(&self, shift: f64) -> Self {
        Self {
            h: self.h.translate(shift),
            psi: self.psi.translate(shift),
            t: self.t,
        }
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.t = t;
        self
    }
}

fn pin_mean(psi: &Field) -> Field {
    if psi.mean().re == 0.0 {
        return psi.clone();
    }
    let mut spectrum = psi.spectrum().to_vec();
    spectrum[0] = num_complex::Complex64::new(0.0, 0.0);
    Field::from_spectrum(*psi.grid(), spectrum, true).expect("length matches grid")
}

/// `G(h)ψ` together with `B = (Gψ + h'ψ')/(1+h'²)` and `V = ψ' − h'B`.
///
/// `B` and `V` are formed pointwise, so `Gψ = B(1+h'²) − h'ψ'` holds to
/// round-off. The departures from the flat-interface values are kept
/// separately since they are much smaller than the fields themselves.
#[derive(Debug, Clone, PartialEq)]
pub struct DtnResult {
    pub g: Field,
    pub b: Field,
    pub v: Field,
    /// `Gψ − |∇|ψ`.
    pub g_excess: Field,
    /// `B − |∇|ψ`.
    pub b_excess: Field,
    /// `V − ψ'`.
    pub v_excess: Field,
    pub order: usize,
}

impl DtnResult {
    pub(crate) fn assemble(h: &Field, psi: &Field, g_excess: Field, order: usize) -> Self {
        let grid = *h.grid();
        let real = |v: Vec<f64>| Field::from_real_values(grid, v).expect("length matches grid");
        let abs = psi.abs_grad();
        let g = abs.add(&g_excess).expect("same grid");
        let hx = h.ddx().real_values();
        let dpsi = psi.ddx();
        let px = dpsi.real_values();
        let gv = g.real_values();
        // B − G = h'(ψ' − h'G)/(1+h'²)
        let b_minus_g = real(
            (0..gv.len())
                .map(|i| hx[i] * (px[i] - hx[i] * gv[i]) / (1.0 + hx[i] * hx[i]))
                .collect(),
        );
        let b_excess = g_excess.add(&b_minus_g).expect("same grid");
        let b = g.add(&b_minus_g).expect("same grid");
        let bv = b.real_values();
        let v_excess = real((0..gv.len()).map(|i| -hx[i] * bv[i]).collect());
        let v = dpsi.add(&v_excess).expect("same grid");
        Self {
            g,
            b,
            v,
            g_excess,
            b_excess,
            v_excess,
            order,
        }
    }
}

/// Truncated expansion `Σ_{j≤M} G_j(h)ψ` plus `B` and `V`.
pub fn dtn_series(state: &WaveState, order: usize) -> Result<DtnResult> {
    state.check_steepness()?;
    let excess = dtn_excess(state.h(), state.psi(), order)?;
    Ok(DtnResult::assemble(state.h(), state.psi(), excess, order))
}

/// `B₃ = B − |∇|ψ + |∇|(h|∇|ψ) + hψ''`, every product dealiased.
///
/// `B − |∇|ψ` enters through its dealiased part so the quadratic terms
/// cancel exactly and `B₃` is cubic in the state amplitude.
pub fn b3_remainder(state: &WaveState, dtn: &DtnResult) -> Field {
    let h = state.h();
    let psi = state.psi();
    let abs_psi = psi.abs_grad();
    let h_abs = h.mul_dealiased(&abs_psi).expect("same grid").abs_grad();
    let h_psi_xx = h.mul_dealiased(&psi.ddx().ddx()).expect("same grid");
    dtn.b_excess
        .dealias()
        .add(&h_abs)
        .and_then(|f| f.add(&h_psi_xx))
        .expect("same grid")
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn grid() -> PeriodicGrid {
        PeriodicGrid::new(64, 2.0 * PI).unwrap()
    }

    fn state(eps: f64) -> WaveState {
        let g = grid();
        let h = Field::from_real_fn(g, |x| eps * (x.cos() + 0.4 * (2.0 * x + 0.3).sin()));
        let psi = Field::from_real_fn(g, |x| eps * (x.sin() - 0.5 * (3.0 * x).cos()));
        WaveState::new(h, psi, 0.0).unwrap()
    }

    #[test]
    fn flat_interface() {
        let g = grid();
        let s = WaveState::new(
            Field::zeros(g),
            Field::from_real_fn(g, |x| (2.0 * x).sin() + 0.3 * (5.0 * x).cos()),
            0.0,
        )
        .unwrap();
        let psi = s.psi().clone();
        let r = dtn_series(&s, 3).unwrap();
        let abs = psi.abs_grad();
        assert_eq!(r.g, abs);
        assert_eq!(r.b, abs);
        assert_eq!(r.v, psi.ddx());
        assert_eq!(b3_remainder(&s, &r).sup_norm(), 0.0);
    }

    #[test]
    fn b_identity_holds_pointwise() {
        let s = state(0.05);
        let r = dtn_series(&s, 3).unwrap();
        let hx = s.h().ddx();
        let recon =
            r.b.mul(
                &hx.mul(&hx)
                    .unwrap()
                    .add(&Field::from_real_fn(*s.grid(), |_| 1.0))
                    .unwrap(),
            )
            .unwrap()
            .sub(&hx.mul(&s.psi().ddx()).unwrap())
            .unwrap();
        assert!(recon.sub(&r.g).unwrap().sup_norm() < 1e-14);
    }

    #[test]
    fn steep_state_rejected() {
        let g = grid();
        let h = Field::from_real_fn(g, |x| 0.3 * (3.0 * x).cos());
        let s = WaveState::new(h, Field::zeros(g), 0.0).unwrap();
        assert!(matches!(dtn_series(&s, 3), Err(LabError::Steepness { .. })));
    }

    #[test]
    fn b3_is_cubic() {
        let norms: Vec<f64> = [1.0, 0.5, 0.25, 0.125]
            .iter()
            .map(|&l| {
                let s = state(0.02 * l);
                let r = dtn_series(&s, 3).unwrap();
                crate::spectral::sobolev_norm(&b3_remainder(&s, &r), 0.0)
            })
            .collect();
        let lambdas = [1.0f64, 0.5, 0.25, 0.125];
        let slope = crate::fit::log_log_fit(&lambdas, &norms).unwrap().slope;
        assert!((slope - 3.0).abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn psi_mean_is_pinned() {
        let g = grid();
        let s = WaveState::new(Field::zeros(g), Field::from_real_fn(g, |x| 2.0 + x.sin()), 0.0).unwrap();
        assert_eq!(s.psi().mean().re, 0.0);
    }
}
