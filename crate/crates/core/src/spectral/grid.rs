use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Uniform periodic grid of `modes` samples on a circle of circumference `R`.
///
/// Spectral slots are stored in FFT order: slot `i` holds mode number
/// `i` for `i < N/2` and `i - N` otherwise, so the represented modes are
/// `-N/2 ..= N/2 - 1` with wavenumber `2π m / R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicGrid {
    modes: usize,
    circumference: f64,
}

impl PeriodicGrid {
    pub fn new(modes: usize, circumference: f64) -> Result<Self> {
        if modes < 2 || modes % 2 != 0 {
            return Err(LabError::rejected(format!(
                "grid size must be a positive even integer, got {modes}"
            )));
        }
        if !(circumference.is_finite() && circumference > 0.0) {
            return Err(LabError::rejected(format!(
                "circumference must be positive, got {circumference}"
            )));
        }
        Ok(Self { modes, circumference })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.modes
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn circumference(&self) -> f64 {
        self.circumference
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.circumference / self.modes as f64
    }

    /// Signed mode number held by spectral slot `slot`.
    #[inline]
    pub fn mode(&self, slot: usize) -> i64 {
        let n = self.modes as i64;
        let s = slot as i64;
        if s < n / 2 {
            s
        } else {
            s - n
        }
    }

    /// Spectral slot holding mode number `m`, if representable.
    #[inline]
    pub fn slot(&self, m: i64) -> Option<usize> {
        let half = (self.modes / 2) as i64;
        if m < -half || m >= half {
            None
        } else if m >= 0 {
            Some(m as usize)
        } else {
            Some((m + self.modes as i64) as usize)
        }
    }

    #[inline]
    pub fn wavenumber(&self, slot: usize) -> f64 {
        2.0 * PI * self.mode(slot) as f64 / self.circumference
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.modes).map(|i| self.wavenumber(i)).collect()
    }

    /// Largest `|ξ|` on the grid (the Nyquist wavenumber).
    pub fn max_wavenumber(&self) -> f64 {
        PI * self.modes as f64 / self.circumference
    }

    pub fn points(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.modes).map(|i| i as f64 * dx).collect()
    }

    /// Highest retained `|m|` under the 2/3 rule: `3 * K < N`.
    pub fn dealias_cutoff(&self) -> i64 {
        ((self.modes as i64) - 1) / 3
    }

    pub(crate) fn check_same(&self, other: &PeriodicGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(LabError::GridMismatch {
                left: format!("N={} R={}", self.modes, self.circumference),
                right: format!("N={} R={}", other.modes, other.circumference),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_and_nonpositive() {
        assert!(PeriodicGrid::new(7, 1.0).is_err());
        assert!(PeriodicGrid::new(0, 1.0).is_err());
        assert!(PeriodicGrid::new(8, 0.0).is_err());
        assert!(PeriodicGrid::new(8, f64::NAN).is_err());
    }

    #[test]
    fn zero_wavenumber_appears_once() {
        let g = PeriodicGrid::new(16, 3.0).unwrap();
        let zeros = g.wavenumbers().iter().filter(|&&k| k == 0.0).count();
        assert_eq!(zeros, 1);
        assert_eq!(g.mode(8), -8);
        assert_eq!(g.slot(-8), Some(8));
        assert_eq!(g.slot(8), None);
        for i in 0..16 {
            assert_eq!(g.slot(g.mode(i)), Some(i));
        }
    }

    #[test]
    fn dealias_cutoff_satisfies_two_thirds_rule() {
        for n in [6usize, 8, 64, 256, 1024] {
            let g = PeriodicGrid::new(n, 1.0).unwrap();
            let k = g.dealias_cutoff();
            assert!(3 * k < n as i64);
            assert!(3 * (k + 1) >= n as i64);
        }
    }
}
