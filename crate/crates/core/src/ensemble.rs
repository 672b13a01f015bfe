//! Random-phase fields with a smooth spectral envelope.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::spectral::{Field, PeriodicGrid};

/// Gaussian envelope `exp(−(|ξ| − peak)²/(2 width²))` on the spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralEnvelope {
    pub peak: f64,
    pub width: f64,
}

impl SpectralEnvelope {
    /// Rejects envelopes that do not fit below the dealiasing cutoff with
    /// three widths of margin or that resolve fewer than four grid modes.
    pub fn validate(&self, grid: &PeriodicGrid) -> Result<()> {
        if !(self.peak > 0.0 && self.width > 0.0 && self.peak.is_finite() && self.width.is_finite()) {
            return Err(LabError::rejected(format!(
                "envelope peak and width must be positive, got {} and {}",
                self.peak, self.width
            )));
        }
        let unit = 2.0 * PI / grid.circumference();
        let cutoff = grid.dealias_cutoff() as f64 * unit;
        if self.peak + 3.0 * self.width > cutoff {
            return Err(LabError::rejected(format!(
                "envelope peak + 3·width = {} exceeds dealiasing cutoff {cutoff}",
                self.peak + 3.0 * self.width
            )));
        }
        if self.width < 2.0 * unit {
            return Err(LabError::rejected(format!(
                "envelope width {} is narrower than two grid modes ({})",
                self.width,
                2.0 * unit
            )));
        }
        Ok(())
    }

    pub fn weight(&self, xi: f64) -> f64 {
        let d = (xi.abs() - self.peak) / self.width;
        (-0.5 * d * d).exp()
    }
}

/// Deterministic stream for `(master seed, index)`.
pub fn stream(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Seed of run `index` in an ensemble drawn from `master`.
pub fn run_seed(master: u64, index: u64) -> u64 {
    stream(master, index).gen()
}

/// Real field whose coefficient at `ξ > 0` is `weight(ξ) e^{iθ}` with
/// uniform phases; negative modes are conjugates. Only modes strictly
/// inside the dealiasing cutoff are populated.
pub fn random_real_field(grid: &PeriodicGrid, envelope: &SpectralEnvelope, rng: &mut impl Rng) -> Field {
    let spectrum = one_sided(grid, envelope, rng);
    Field::from_spectrum(*grid, spectrum, true).expect("length matches grid")
}

/// Complex field supported on `ξ > 0`, so that it travels in one
/// direction under `e^{−itΛ}`.
pub fn random_unidirectional(grid: &PeriodicGrid, envelope: &SpectralEnvelope, rng: &mut impl Rng) -> Field {
    let spectrum = one_sided(grid, envelope, rng);
    Field::from_spectrum(*grid, spectrum, false).expect("length matches grid")
}

fn one_sided(grid: &PeriodicGrid, envelope: &SpectralEnvelope, rng: &mut impl Rng) -> Vec<Complex64> {
    let mut spectrum = vec![Complex64::new(0.0, 0.0); grid.len()];
    for m in 1..=grid.dealias_cutoff() {
        let slot = grid.slot(m).expect("cutoff lies inside the grid");
        let phase = rng.gen::<f64>() * 2.0 * PI;
        spectrum[slot] = Complex64::from_polar(envelope.weight(grid.wavenumber(slot)), phase);
    }
    spectrum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_stream_same_field() {
        let grid = PeriodicGrid::new(64, 20.0).unwrap();
        let env = SpectralEnvelope { peak: 3.0, width: 1.0 };
        let a = random_real_field(&grid, &env, &mut stream(5, 2));
        let b = random_real_field(&grid, &env, &mut stream(5, 2));
        let c = random_real_field(&grid, &env, &mut stream(5, 3));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn unidirectional_has_no_negative_modes() {
        let grid = PeriodicGrid::new(64, 20.0).unwrap();
        let env = SpectralEnvelope { peak: 3.0, width: 1.0 };
        let u = random_unidirectional(&grid, &env, &mut stream(1, 0));
        for (i, c) in u.spectrum().iter().enumerate() {
            if grid.mode(i) <= 0 {
                assert_eq!(c.norm(), 0.0);
            }
        }
    }

    #[test]
    fn envelope_must_fit_under_cutoff() {
        let grid = PeriodicGrid::new(32, 2.0 * PI).unwrap();
        assert!(SpectralEnvelope { peak: 9.0, width: 1.0 }.validate(&grid).is_err());
        assert!(SpectralEnvelope { peak: 4.0, width: 0.5 }.validate(&grid).is_err());
        assert!(SpectralEnvelope { peak: 4.0, width: 2.0 }.validate(&grid).is_ok());
    }
}
