//! Fourier grid, fields, multipliers, Littlewood–Paley blocks, norms and
//! paraproducts.

mod convolution;
pub(crate) mod fft;
mod field;
mod grid;
mod lp;
mod norms;
mod paraproduct;

pub use convolution::bilinear_sum;
pub use field::Field;
pub use grid::PeriodicGrid;
pub use lp::{block_symbol, bump, smooth_step, Block, LpDecomposition};
pub use norms::{besov_norm, besov_norm_with, l2_quadrature, sobolev_norm, sup_norm, SupSampling};
pub use paraproduct::{paraproduct, paraproduct_with, ParaproductCutoff};

pub(crate) use field::dealias_spectrum;

use num_complex::Complex64;

/// `|ξ|^p` with the value at `ξ = 0` pinned to 0.
pub fn abs_pow(p: f64) -> impl Fn(f64) -> f64 {
    move |xi: f64| if xi == 0.0 { 0.0 } else { xi.abs().powf(p) }
}

/// `iξ`.
pub fn derivative(xi: f64) -> Complex64 {
    Complex64::new(0.0, xi)
}

impl Field {
    /// `|∇| f`.
    pub fn abs_grad(&self) -> Field {
        self.apply_real_multiplier(f64::abs).expect("finite symbol")
    }

    /// `Λ f = |∇|^{1/2} f`.
    pub fn half_grad(&self) -> Field {
        self.apply_real_multiplier(|xi| xi.abs().sqrt()).expect("finite symbol")
    }

    /// `f'`.
    pub fn ddx(&self) -> Field {
        self.apply_multiplier(derivative).expect("finite symbol")
    }
}
