//! Quadratic/cubic split of the nonlinearity, the bilinear symbols of the
//! quadratic part in the variables `u₊ = u`, `u₋ = ū`, and the
//! integration-by-parts identity that trades `N₂` for boundary and cubic
//! terms.

use std::sync::atomic::{AtomicBool, Ordering};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diagnostics::complex_variable;
use crate::dtn::{b3_remainder, dtn_series, DtnResult, WaveState};
use crate::error::{LabError, Result};
use crate::evolution::{nonlinearity_from, Trajectory};
use crate::spectral::{bilinear_sum, l2_quadrature, Field};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    #[inline]
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    /// `u` for `+`, `ū` for `−`.
    pub fn select(self, f: &Field) -> Field {
        match self {
            Sign::Plus => f.clone(),
            Sign::Minus => f.conj(),
        }
    }
}

/// The four `(μ, ν)` pairs.
pub const PAIRS: [(Sign, Sign); 4] = [
    (Sign::Plus, Sign::Plus),
    (Sign::Plus, Sign::Minus),
    (Sign::Minus, Sign::Plus),
    (Sign::Minus, Sign::Minus),
];

/// `Φ_{μν} = √|ξ1+ξ2| − μ√|ξ1| − ν√|ξ2|`.
pub fn phase(mu: Sign, nu: Sign, xi1: f64, xi2: f64) -> f64 {
    (xi1 + xi2).abs().sqrt() - mu.value() * xi1.abs().sqrt() - nu.value() * xi2.abs().sqrt()
}

/// `(|ξ||ξ2| − ξξ2)/√|ξ2|`, the symbol of `h, Λψ ↦ −|∇|(h|∇|ψ) − (hψ')'`
/// up to sign.
fn generator_one(xi1: f64, xi2: f64) -> f64 {
    if xi2 == 0.0 {
        return 0.0;
    }
    let xi = xi1 + xi2;
    (xi.abs() * xi2.abs() - xi * xi2) / xi2.abs().sqrt()
}

/// `√|ξ|(|ξ1||ξ2| + ξ1ξ2)/√|ξ1ξ2|`, from `Λψ, Λψ ↦ Λ((|∇|ψ)² − ψ'²)`.
fn generator_two(xi1: f64, xi2: f64) -> f64 {
    if xi1 == 0.0 || xi2 == 0.0 {
        return 0.0;
    }
    (xi1 + xi2).abs().sqrt() * (xi1.abs() * xi2.abs() + xi1 * xi2) / (xi1 * xi2).abs().sqrt()
}

fn raw_symbol(mu: Sign, nu: Sign, xi1: f64, xi2: f64) -> Complex64 {
    let im = 0.25 * nu.value() * generator_one(xi1, xi2) - 0.125 * mu.value() * nu.value() * generator_two(xi1, xi2);
    Complex64::new(0.0, im)
}

/// Coefficient of `û_μ(ξ1) û_ν(ξ2)` in `N̂₂(ξ1+ξ2)`.
///
/// Substituting `h = (u₊+u₋)/2` and `Λψ = (u₊−u₋)/(2i)` gives
/// `m_{μν} = (i/4) ν g₁ − (i/8) μν g₂` with `g₁, g₂` the two generators;
/// the like-sign pairs are symmetrized in `(ξ1, ξ2)`.
pub fn quadratic_symbol(mu: Sign, nu: Sign, xi1: f64, xi2: f64) -> Complex64 {
    if mu == nu {
        0.5 * (raw_symbol(mu, nu, xi1, xi2) + raw_symbol(mu, nu, xi2, xi1))
    } else {
        raw_symbol(mu, nu, xi1, xi2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelKind {
    /// `m_{μν}`.
    Symbol,
    /// `m_{μν}/(iΦ_{μν})`, zero where `m` vanishes.
    Divided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BilinearKernel {
    pub mu: Sign,
    pub nu: Sign,
    pub kind: KernelKind,
    /// Small-divisor guard; the divided kernel requires it to be zero.
    pub guard: f64,
}

impl BilinearKernel {
    pub fn symbol(mu: Sign, nu: Sign) -> Self {
        Self {
            mu,
            nu,
            kind: KernelKind::Symbol,
            guard: 0.0,
        }
    }

    pub fn divided(mu: Sign, nu: Sign) -> Self {
        Self {
            mu,
            nu,
            kind: KernelKind::Divided,
            guard: 0.0,
        }
    }

    /// The kernel value, or `None` when `m ≠ 0` on a zero of `Φ`.
    pub fn eval(&self, xi1: f64, xi2: f64) -> Option<Complex64> {
        let m = quadratic_symbol(self.mu, self.nu, xi1, xi2);
        match self.kind {
            KernelKind::Symbol => Some(m),
            KernelKind::Divided => {
                if m == Complex64::new(0.0, 0.0) {
                    return Some(m);
                }
                let phi = phase(self.mu, self.nu, xi1, xi2);
                if phi == 0.0 {
                    None
                } else {
                    Some(m / Complex64::new(0.0, phi))
                }
            }
        }
    }
}

/// `Σ_{ξ1+ξ2=ξ} k(ξ1, ξ2) f̂(ξ1) ĝ(ξ2)` by direct summation.
pub fn bilinear_apply(kernel: &BilinearKernel, f: &Field, g: &Field) -> Result<Field> {
    f.grid().check_same(g.grid())?;
    if kernel.kind == KernelKind::Divided && kernel.guard != 0.0 {
        return Err(LabError::rejected("divided kernels take no small-divisor guard"));
    }
    let fault = AtomicBool::new(false);
    let spectrum = bilinear_sum(f.grid(), f.spectrum(), g.spectrum(), |a, b| {
        kernel.eval(a, b).unwrap_or_else(|| {
            fault.store(true, Ordering::Relaxed);
            Complex64::new(0.0, 0.0)
        })
    });
    if fault.load(Ordering::Relaxed) {
        return Err(LabError::Fault(format!(
            "nonzero m_{{{:?}{:?}}} on a zero of the phase",
            kernel.mu, kernel.nu
        )));
    }
    Field::from_spectrum(*f.grid(), spectrum, false)
}

/// `N`, its quadratic part `N₂` and its cubic-and-higher remainder `N₃`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearitySplit {
    pub n: Field,
    pub n2: Field,
    pub n3: Field,
}

fn complex_from(re: &Field, im: &Field) -> Field {
    let spectrum = re
        .spectrum()
        .iter()
        .zip(im.spectrum())
        .map(|(a, b)| a + Complex64::i() * b)
        .collect();
    Field::from_spectrum(*re.grid(), spectrum, false).expect("same grid")
}

fn real_pointwise(grid_of: &Field, values: Vec<f64>) -> Field {
    Field::from_real_values(*grid_of.grid(), values).expect("length matches grid")
}

/// `N₂ = −|∇|(h|∇|ψ) − (hψ')' + (i/2)Λ((|∇|ψ)² − ψ'²)`, every product
/// dealiased.
pub fn quadratic_part(state: &WaveState) -> Field {
    let h = state.h();
    let psi = state.psi();
    let abs_psi = psi.abs_grad();
    let dpsi = psi.ddx();
    let re = h
        .mul_dealiased(&abs_psi)
        .expect("same grid")
        .abs_grad()
        .add(&h.mul_dealiased(&dpsi).expect("same grid").ddx())
        .expect("same grid")
        .scale(-1.0);
    let im = abs_psi
        .mul(&abs_psi)
        .and_then(|a| a.sub(&dpsi.mul(&dpsi)?))
        .expect("same grid")
        .dealias()
        .half_grad()
        .scale(0.5);
    complex_from(&re, &im)
}

/// `N₃ = B₃ + h'²B + (i/2)Λ(B² − (|∇|ψ)² + h'²B²)`.
pub fn cubic_part(state: &WaveState, dtn: &DtnResult) -> Field {
    let hx = state.h().ddx().real_values();
    let abs_psi = state.psi().abs_grad().real_values();
    let b = dtn.b.real_values();
    let db = dtn.b_excess.real_values();
    let slope_b = real_pointwise(state.h(), (0..b.len()).map(|i| hx[i] * hx[i] * b[i]).collect()).dealias();
    let re = b3_remainder(state, dtn).add(&slope_b).expect("same grid");
    // B² − (|∇|ψ)² = (B − |∇|ψ)(B + |∇|ψ) avoids the cancellation.
    let q = real_pointwise(
        state.h(),
        (0..b.len())
            .map(|i| db[i] * (b[i] + abs_psi[i]) + hx[i] * hx[i] * b[i] * b[i])
            .collect(),
    );
    let im = q.dealias().half_grad().scale(0.5);
    complex_from(&re, &im)
}

pub fn split_nonlinearity(state: &WaveState, order: usize) -> Result<NonlinearitySplit> {
    let dtn = dtn_series(state, order)?;
    Ok(NonlinearitySplit {
        n: nonlinearity_from(state, &dtn),
        n2: quadratic_part(state),
        n3: cubic_part(state, &dtn),
    })
}

/// `P N_{μν}[u_μ, u_ν]` for the four pairs in [`PAIRS`] order.
pub fn quadratic_pairs(state: &WaveState) -> Result<[Field; 4]> {
    let u = complex_variable(state);
    let mut out: [Field; 4] = std::array::from_fn(|_| Field::zeros(*state.grid()));
    for (slot, (mu, nu)) in out.iter_mut().zip(PAIRS) {
        *slot = bilinear_apply(&BilinearKernel::symbol(mu, nu), &mu.select(&u), &nu.select(&u))?.dealias();
    }
    Ok(out)
}

/// `Σ_{μν} Q_{μν}` with `Q̂_{μν} = Σ m_{μν}/(iΦ_{μν}) û_μ û_ν`.
pub fn boundary_term(state: &WaveState) -> Result<Field> {
    let u = complex_variable(state);
    let mut acc = Field::zeros(*state.grid());
    for (mu, nu) in PAIRS {
        let q = bilinear_apply(&BilinearKernel::divided(mu, nu), &mu.select(&u), &nu.select(&u))?;
        acc = acc.add(&q).expect("same grid");
    }
    Ok(acc.dealias())
}

/// `Σ_{μν} C_{μν}`: the divided kernels applied to `(u_μ, N_ν) + (N_μ, u_ν)`,
/// with `N₋ = N̄`.
pub fn cubic_term(state: &WaveState, order: usize) -> Result<Field> {
    let u = complex_variable(state);
    let n = nonlinearity_from(state, &dtn_series(state, order)?);
    let mut acc = Field::zeros(*state.grid());
    for (mu, nu) in PAIRS {
        let k = BilinearKernel::divided(mu, nu);
        let a = bilinear_apply(&k, &mu.select(&u), &nu.select(&n))?;
        let b = bilinear_apply(&k, &mu.select(&n), &nu.select(&u))?;
        acc = acc.add(&a).and_then(|f| f.add(&b)).expect("same grid");
    }
    Ok(acc.dealias())
}

/// `e^{−iτΛ} f`.
fn propagate(f: &Field, tau: f64) -> Field {
    f.apply_multiplier(|xi| Complex64::from_polar(1.0, -tau * xi.abs().sqrt()))
        .expect("finite symbol")
}

/// Both sides of the integration-by-parts identity at the final time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IbpCheck {
    pub time: f64,
    /// `‖u₂(t)‖_{L²}`.
    pub duhamel_norm: f64,
    /// `‖u₂ − (Q(t) − e^{−itΛ}Q(0) − ∫e^{−i(t−τ)Λ}C)‖_{L²} / ‖u₂‖_{L²}`.
    pub residual: f64,
}

/// Evaluates `u₂(t) = ∫₀ᵗ e^{−i(t−τ)Λ}N₂(τ)dτ` and the boundary/cubic
/// decomposition by trapezoid quadrature over the snapshots, which must
/// be uniformly spaced.
pub fn ibp_identity_residual(trajectory: &Trajectory, order: usize) -> Result<IbpCheck> {
    let states = &trajectory.states;
    let first = &states[0];
    let t_end = states.last().expect("nonempty").t;
    let span = t_end - first.t;
    if states.len() == 1 || span == 0.0 {
        return Ok(IbpCheck {
            time: t_end,
            duhamel_norm: 0.0,
            residual: 0.0,
        });
    }
    let step = span / (states.len() - 1) as f64;
    for (j, s) in states.iter().enumerate() {
        if (s.t - first.t - j as f64 * step).abs() > 1e-9 * span {
            return Err(LabError::rejected("identity check needs uniformly spaced snapshots"));
        }
    }
    let grid = *first.grid();
    let mut u2 = Field::zeros(grid);
    let mut cubic = Field::zeros(grid);
    let last = states.len() - 1;
    for (j, s) in states.iter().enumerate() {
        let w = if j == 0 || j == last { 0.5 * step } else { step };
        let lag = t_end - s.t;
        let n2 = quadratic_part(s);
        let c = cubic_term(s, order)?;
        u2 = u2.add(&propagate(&n2, lag).scale(w)).expect("same grid");
        cubic = cubic.add(&propagate(&c, lag).scale(w)).expect("same grid");
    }
    let q_end = boundary_term(states.last().expect("nonempty"))?;
    let q_start = propagate(&boundary_term(first)?, span);
    let rhs = q_end.sub(&q_start).and_then(|f| f.sub(&cubic)).expect("same grid");
    let duhamel_norm = l2_quadrature(&u2);
    let diff = l2_quadrature(&u2.sub(&rhs).expect("same grid"));
    let residual = if duhamel_norm == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        diff / duhamel_norm
    };
    Ok(IbpCheck {
        time: t_end,
        duhamel_norm,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::spectral::PeriodicGrid;

    #[test]
    fn like_sign_phase_at_equal_frequencies() {
        let v = phase(Sign::Plus, Sign::Plus, 1.0, 1.0);
        assert!((v - (2f64.sqrt() - 2.0)).abs() < 1e-15);
        assert!((v + 0.585786).abs() < 1e-6);
        assert_eq!(phase(Sign::Plus, Sign::Plus, 0.0, 3.0), 0.0);
    }

    #[test]
    fn symbols_vanish_on_the_resonant_set() {
        for (mu, nu) in PAIRS {
            for &x in &[0.3, 1.0, 2.5, -4.0] {
                assert_eq!(quadratic_symbol(mu, nu, x, -x), Complex64::new(0.0, 0.0));
                assert_eq!(quadratic_symbol(mu, nu, 0.0, x), Complex64::new(0.0, 0.0));
                assert_eq!(quadratic_symbol(mu, nu, x, 0.0), Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn mixed_phase_has_no_interior_zeros() {
        // ξ1 > 0 > ξ2 with ξ1 + ξ2 > 0.
        let mut min = f64::INFINITY;
        for i in 1..=200 {
            for j in 1..=200 {
                let xi1 = i as f64 * 0.05;
                let xi2 = -(j as f64) * 0.05;
                if xi1 + xi2 > 0.0 {
                    min = min.min(phase(Sign::Plus, Sign::Minus, xi1, xi2).abs());
                }
            }
        }
        assert!(min > 0.0);
    }

    #[test]
    fn unit_kernel_is_pointwise_product() {
        let g = PeriodicGrid::new(32, 2.0 * PI).unwrap();
        let f = Field::from_complex_fn(g, |x| Complex64::new(x.cos(), (2.0 * x).sin()));
        let h = Field::from_complex_fn(g, |x| Complex64::new((3.0 * x).sin(), 0.5));
        let out = Field::from_spectrum(
            g,
            bilinear_sum(&g, f.spectrum(), h.spectrum(), |_, _| Complex64::new(1.0, 0.0)),
            false,
        )
        .unwrap();
        assert!(out.sub(&f.mul(&h).unwrap()).unwrap().sup_norm() < 1e-12);
    }

    #[test]
    fn zero_input_gives_zero() {
        let g = PeriodicGrid::new(32, 2.0 * PI).unwrap();
        let f = Field::from_real_fn(g, f64::cos);
        let k = BilinearKernel::divided(Sign::Plus, Sign::Minus);
        let out = bilinear_apply(&k, &f, &Field::zeros(g)).unwrap();
        assert_eq!(out.sup_norm(), 0.0);
    }

    #[test]
    fn divided_kernel_rejects_a_guard() {
        let g = PeriodicGrid::new(16, 2.0 * PI).unwrap();
        let f = Field::zeros(g);
        let mut k = BilinearKernel::divided(Sign::Plus, Sign::Minus);
        k.guard = 1e-3;
        assert!(bilinear_apply(&k, &f, &f).is_err());
    }

    #[test]
    fn zero_state_splits_to_zero() {
        let g = PeriodicGrid::new(32, 2.0 * PI).unwrap();
        let z = WaveState::zero(g);
        let s = split_nonlinearity(&z, 3).unwrap();
        assert_eq!(s.n.sup_norm() + s.n2.sup_norm() + s.n3.sup_norm(), 0.0);
        assert_eq!(boundary_term(&z).unwrap().sup_norm(), 0.0);
    }

    #[test]
    fn homogeneity_degrees() {
        for (mu, nu) in PAIRS {
            for &(a, b) in &[(0.7, 1.3), (-2.0, 0.4), (1.1, -3.5)] {
                for lam in [2.0, 4.0] {
                    let m1 = quadratic_symbol(mu, nu, lam * a, lam * b);
                    let m0 = quadratic_symbol(mu, nu, a, b) * lam.powf(1.5);
                    assert!((m1 - m0).norm() <= 1e-12 * (1.0 + m0.norm()));
                    let p1 = phase(mu, nu, lam * a, lam * b);
                    assert!((p1 - lam.sqrt() * phase(mu, nu, a, b)).abs() <= 1e-12);
                }
            }
        }
    }
}
