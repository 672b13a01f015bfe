use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::convolution::bilinear_sum;
use super::field::Field;
use super::lp::{bump, smooth_step};
use crate::error::{LabError, Result};

/// Low–high cutoff `φ(ξ1, ξ2) = χ(|ξ1|/|ξ2|) · (1 − θ(2ξ2))`.
///
/// `χ` is 1 below `ratio_low` and 0 above `ratio_high`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParaproductCutoff {
    pub ratio_low: f64,
    pub ratio_high: f64,
}

impl Default for ParaproductCutoff {
    fn default() -> Self {
        Self {
            ratio_low: 1.0 / 20.0,
            ratio_high: 1.0 / 10.0,
        }
    }
}

impl ParaproductCutoff {
    pub fn validate(&self) -> Result<()> {
        if !(self.ratio_low > 0.0 && self.ratio_low < self.ratio_high && self.ratio_high < 1.0) {
            return Err(LabError::rejected(format!(
                "paraproduct cutoff needs 0 < low < high < 1, got {} and {}",
                self.ratio_low, self.ratio_high
            )));
        }
        Ok(())
    }

    pub fn weight(&self, xi1: f64, xi2: f64) -> f64 {
        let high = 1.0 - bump(2.0 * xi2);
        if high == 0.0 {
            return 0.0;
        }
        let ratio = xi1.abs() / xi2.abs();
        let chi = smooth_step((self.ratio_high - ratio) / (self.ratio_high - self.ratio_low));
        chi * high
    }
}

/// `T_f g`: the part of `f g` where `f` is at much lower frequency than `g`.
pub fn paraproduct(f: &Field, g: &Field) -> Result<Field> {
    paraproduct_with(f, g, &ParaproductCutoff::default())
}

pub fn paraproduct_with(f: &Field, g: &Field, cutoff: &ParaproductCutoff) -> Result<Field> {
    f.grid().check_same(g.grid())?;
    let spectrum = bilinear_sum(f.grid(), f.spectrum(), g.spectrum(), |xi1, xi2| {
        Complex64::new(cutoff.weight(xi1, xi2), 0.0)
    });
    Field::from_spectrum(*f.grid(), spectrum, f.is_real() && g.is_real())
}
