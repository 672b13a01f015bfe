use num_complex::Complex64;
use rayon::prelude::*;

use super::grid::PeriodicGrid;

/// Direct bilinear Fourier sum
/// `out(ξ) = Σ_{ξ1+ξ2=ξ} kernel(ξ1, ξ2) a(ξ1) b(ξ2)`.
///
/// The sum does not wrap: output modes are restricted to `|m| < N/2` and
/// interactions landing outside that range are dropped. The Nyquist slot
/// of the output is always zero.
pub fn bilinear_sum<K>(grid: &PeriodicGrid, a: &[Complex64], b: &[Complex64], kernel: K) -> Vec<Complex64>
where
    K: Fn(f64, f64) -> Complex64 + Sync,
{
    let n = grid.len();
    let half = (n / 2) as i64;
    let support = |s: &[Complex64]| -> Vec<(i64, Complex64)> {
        s.iter()
            .enumerate()
            .filter(|(_, c)| c.re != 0.0 || c.im != 0.0)
            .map(|(i, c)| (grid.mode(i), *c))
            .collect()
    };
    let a_nz = support(a);
    let b_dense: Vec<Complex64> = b.to_vec();
    let unit = 2.0 * std::f64::consts::PI / grid.circumference();

    let compute = |slot: usize| -> Complex64 {
        let m = grid.mode(slot);
        if m == -half {
            return Complex64::new(0.0, 0.0);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for &(m1, c1) in &a_nz {
            let m2 = m - m1;
            let Some(s2) = grid.slot(m2) else { continue };
            let c2 = b_dense[s2];
            if c2.re == 0.0 && c2.im == 0.0 {
                continue;
            }
            acc += kernel(unit * m1 as f64, unit * m2 as f64) * c1 * c2;
        }
        acc
    };

    if n * a_nz.len() > 1 << 16 {
        (0..n).into_par_iter().map(compute).collect()
    } else {
        (0..n).map(compute).collect()
    }
}
