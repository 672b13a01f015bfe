use num_complex::Complex64;

use super::fft;
use super::grid::PeriodicGrid;
use crate::error::{LabError, Result};

/// A function on a [`PeriodicGrid`], held simultaneously as physical
/// samples and as Fourier coefficients.
///
/// Real fields keep exactly zero imaginary parts in physical space and a
/// Hermitian spectrum; the Nyquist slot of a real field is real.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: PeriodicGrid,
    values: Vec<Complex64>,
    spectrum: Vec<Complex64>,
    real: bool,
}

impl Field {
    pub fn zeros(grid: PeriodicGrid) -> Self {
        let zero = vec![Complex64::new(0.0, 0.0); grid.len()];
        Self {
            grid,
            values: zero.clone(),
            spectrum: zero,
            real: true,
        }
    }

    pub fn from_real_values(grid: PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        check_len(&grid, values.len())?;
        let values: Vec<Complex64> = values.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
        let mut spectrum = fft::forward(&values);
        hermitize(&grid, &mut spectrum);
        Ok(Self {
            grid,
            values,
            spectrum,
            real: true,
        })
    }

    pub fn from_values(grid: PeriodicGrid, values: Vec<Complex64>) -> Result<Self> {
        check_len(&grid, values.len())?;
        let spectrum = fft::forward(&values);
        Ok(Self {
            grid,
            values,
            spectrum,
            real: false,
        })
    }

    /// Builds a field from Fourier coefficients. With `real` set the
    /// spectrum is projected onto its Hermitian part first.
    pub fn from_spectrum(grid: PeriodicGrid, mut spectrum: Vec<Complex64>, real: bool) -> Result<Self> {
        check_len(&grid, spectrum.len())?;
        if real {
            hermitize(&grid, &mut spectrum);
        }
        let mut values = fft::inverse(&spectrum);
        if real {
            for v in &mut values {
                v.im = 0.0;
            }
        }
        Ok(Self {
            grid,
            values,
            spectrum,
            real,
        })
    }

    pub fn from_real_fn(grid: PeriodicGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.points().into_iter().map(f).collect();
        Self::from_real_values(grid, values).expect("length matches grid")
    }

    pub fn from_complex_fn(grid: PeriodicGrid, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.points().into_iter().map(f).collect();
        Self::from_values(grid, values).expect("length matches grid")
    }

    #[inline]
    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    #[inline]
    pub fn spectrum(&self) -> &[Complex64] {
        &self.spectrum
    }

    #[inline]
    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn real_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    /// Spatial mean, i.e. the zero-mode coefficient.
    pub fn mean(&self) -> Complex64 {
        self.spectrum[0]
    }

    /// Applies the Fourier multiplier `symbol(ξ)`.
    ///
    /// The result stays real when the input is real and the symbol is
    /// Hermitian (`symbol(-ξ) = conj(symbol(ξ))`) on the grid; in that case
    /// the Nyquist slot keeps only the real part of its symbol.
    pub fn apply_multiplier(&self, symbol: impl Fn(f64) -> Complex64) -> Result<Field> {
        let n = self.grid.len();
        let mut sym = Vec::with_capacity(n);
        for slot in 0..n {
            let xi = self.grid.wavenumber(slot);
            let s = symbol(xi);
            if !(s.re.is_finite() && s.im.is_finite()) {
                return Err(LabError::rejected(format!(
                    "multiplier is not finite at wavenumber {xi}"
                )));
            }
            sym.push(s);
        }
        let real = self.real && symbol_is_hermitian(&self.grid, &sym);
        if real {
            let nyq = n / 2;
            sym[nyq] = Complex64::new(sym[nyq].re, 0.0);
        }
        let spectrum = self.spectrum.iter().zip(&sym).map(|(c, s)| c * s).collect();
        Field::from_spectrum(self.grid, spectrum, real)
    }

    pub fn apply_real_multiplier(&self, symbol: impl Fn(f64) -> f64) -> Result<Field> {
        self.apply_multiplier(|xi| Complex64::new(symbol(xi), 0.0))
    }

    /// Zeroes every mode with `|m| > K`, `K` the 2/3-rule cutoff.
    pub fn dealias(&self) -> Field {
        let mut spectrum = self.spectrum.clone();
        dealias_spectrum(&self.grid, &mut spectrum);
        Field::from_spectrum(self.grid, spectrum, self.real).expect("length matches grid")
    }

    /// True when every mode above the 2/3-rule cutoff is exactly zero.
    pub fn is_dealiased(&self) -> bool {
        let k = self.grid.dealias_cutoff();
        self.spectrum
            .iter()
            .enumerate()
            .all(|(i, c)| self.grid.mode(i).abs() <= k || *c == Complex64::new(0.0, 0.0))
    }

    /// Pointwise product of physical samples.
    pub fn mul(&self, other: &Field) -> Result<Field> {
        self.grid.check_same(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        self.rebuild(values, self.real && other.real)
    }

    /// Pointwise product followed by 2/3-rule truncation.
    pub fn mul_dealiased(&self, other: &Field) -> Result<Field> {
        Ok(self.mul(other)?.dealias())
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.grid.check_same(&other.grid)?;
        Ok(self.combine(other, |a, b| a + b, self.real && other.real))
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.grid.check_same(&other.grid)?;
        Ok(self.combine(other, |a, b| a - b, self.real && other.real))
    }

    pub fn scale(&self, factor: f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|v| v * factor).collect(),
            spectrum: self.spectrum.iter().map(|c| c * factor).collect(),
            real: self.real,
        }
    }

    pub fn scale_complex(&self, factor: Complex64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|v| v * factor).collect(),
            spectrum: self.spectrum.iter().map(|c| c * factor).collect(),
            real: self.real && factor.im == 0.0,
        }
    }

    pub fn conj(&self) -> Field {
        let values = self.values.iter().map(|v| v.conj()).collect();
        self.rebuild(values, self.real).expect("length matches grid")
    }

    /// Real part as a real field.
    pub fn re(&self) -> Field {
        let values = self.values.iter().map(|v| Complex64::new(v.re, 0.0)).collect();
        self.rebuild(values, true).expect("length matches grid")
    }

    /// Imaginary part as a real field.
    pub fn im(&self) -> Field {
        let values = self.values.iter().map(|v| Complex64::new(v.im, 0.0)).collect();
        self.rebuild(values, true).expect("length matches grid")
    }

    /// `f(x - shift)`, exact for band-limited fields.
    pub fn translate(&self, shift: f64) -> Field {
        let grid = self.grid;
        let spectrum = self
            .spectrum
            .iter()
            .enumerate()
            .map(|(i, c)| c * Complex64::from_polar(1.0, -grid.wavenumber(i) * shift))
            .collect();
        Field::from_spectrum(grid, spectrum, self.real).expect("length matches grid")
    }

    /// Largest `|f|` over the grid samples.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `∫ f dx` by the (spectrally exact) rectangle rule.
    pub fn integral(&self) -> Complex64 {
        self.spectrum[0] * self.grid.circumference()
    }

    fn rebuild(&self, values: Vec<Complex64>, real: bool) -> Result<Field> {
        if real {
            Field::from_real_values(self.grid, values.into_iter().map(|v| v.re).collect())
        } else {
            Field::from_values(self.grid, values)
        }
    }

    fn combine(&self, other: &Field, op: impl Fn(Complex64, Complex64) -> Complex64, real: bool) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| op(*a, *b)).collect(),
            spectrum: self
                .spectrum
                .iter()
                .zip(&other.spectrum)
                .map(|(a, b)| op(*a, *b))
                .collect(),
            real,
        }
    }
}

fn check_len(grid: &PeriodicGrid, len: usize) -> Result<()> {
    if len == grid.len() {
        Ok(())
    } else {
        Err(LabError::rejected(format!(
            "expected {} samples, got {len}",
            grid.len()
        )))
    }
}

pub(crate) fn dealias_spectrum(grid: &PeriodicGrid, spectrum: &mut [Complex64]) {
    let k = grid.dealias_cutoff();
    for (i, c) in spectrum.iter_mut().enumerate() {
        if grid.mode(i).abs() > k {
            *c = Complex64::new(0.0, 0.0);
        }
    }
}

/// Projects onto the Hermitian part: `c(-m) = conj(c(m))`, real zero and
/// Nyquist slots.
pub(crate) fn hermitize(grid: &PeriodicGrid, spectrum: &mut [Complex64]) {
    let n = grid.len();
    spectrum[0].im = 0.0;
    spectrum[n / 2].im = 0.0;
    for i in 1..n / 2 {
        let j = n - i;
        let avg = 0.5 * (spectrum[i] + spectrum[j].conj());
        spectrum[i] = avg;
        spectrum[j] = avg.conj();
    }
}

fn symbol_is_hermitian(grid: &PeriodicGrid, sym: &[Complex64]) -> bool {
    let n = grid.len();
    let scale = sym.iter().map(|s| s.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let tol = 1e-14 * scale;
    if sym[0].im.abs() > tol {
        return false;
    }
    (1..n / 2).all(|i| (sym[i] - sym[n - i].conj()).norm() <= tol)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn grid(n: usize, r: f64) -> PeriodicGrid {
        PeriodicGrid::new(n, r).unwrap()
    }

    #[test]
    fn abs_derivative_of_cosine() {
        let r = 10.0;
        let g = grid(32, r);
        let k = 2.0 * PI / r;
        let f = Field::from_real_fn(g, |x| (k * x).cos());
        let out = f.apply_real_multiplier(|xi| xi.abs()).unwrap();
        assert!(out.is_real());
        for (x, v) in g.points().iter().zip(out.values()) {
            assert!((v.re - k * (k * x).cos()).abs() < 1e-13);
        }
    }

    #[test]
    fn derivative_of_sine() {
        let g = grid(16, 2.0 * PI);
        let f = Field::from_real_fn(g, f64::sin);
        let d = f.apply_multiplier(|xi| Complex64::new(0.0, xi)).unwrap();
        assert!(d.is_real());
        for (x, v) in g.points().iter().zip(d.values()) {
            assert!((v.re - x.cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn half_derivative_twice_is_abs_derivative() {
        let g = grid(64, 7.0);
        let f = Field::from_real_fn(g, |x| (0.9 * x).sin().exp());
        let twice = f
            .apply_real_multiplier(|xi| xi.abs().sqrt())
            .unwrap()
            .apply_real_multiplier(|xi| xi.abs().sqrt())
            .unwrap();
        let once = f.apply_real_multiplier(|xi| xi.abs()).unwrap();
        let diff = twice.sub(&once).unwrap().sup_norm();
        assert!(diff < 1e-12 * once.sup_norm());
    }

    #[test]
    fn non_finite_symbol_rejected() {
        let g = grid(8, 1.0);
        let f = Field::from_real_fn(g, |x| x.cos());
        let err = f.apply_real_multiplier(|xi| 1.0 / xi.abs()).unwrap_err();
        assert!(matches!(err, LabError::RejectedInput(_)));
    }

    #[test]
    fn mixed_grids_rejected() {
        let a = Field::zeros(grid(8, 1.0));
        let b = Field::zeros(grid(8, 2.0));
        assert!(matches!(a.mul(&b), Err(LabError::GridMismatch { .. })));
    }

    #[test]
    fn odd_imaginary_symbol_breaks_realness_when_not_hermitian() {
        let g = grid(8, 1.0);
        let f = Field::from_real_fn(g, |x| x.cos());
        let out = f.apply_multiplier(|xi| Complex64::new(xi, 0.0)).unwrap();
        assert!(!out.is_real());
    }
}
