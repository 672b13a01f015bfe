//! Dispersive measurements for the free flow `e^{−itΛ}`, `Λ = |∇|^{1/2}`:
//! pointwise decay, the `L⁴_t L^∞_x` size of dyadic blocks, the loss on
//! the torus at long times, and the wrap-around time of a packet.
//!
//! Block data is one-sided (`ξ > 0`) so it travels in one direction. It is
//! stored as a band of consecutive modes, which lets the sup norm be
//! sampled with an FFT over the band width rather than the full grid.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fit::{log_log_fit, LineFit};
use crate::spectral::{block_symbol, fft, Field};

/// `e^{−itΛ} u₀`.
pub fn free_evolve(u0: &Field, t: f64) -> Field {
    u0.apply_multiplier(|xi| Complex64::from_polar(1.0, -t * xi.abs().sqrt()))
        .expect("unimodular symbol")
}

/// Fourier coefficients on the consecutive modes `first, first+1, …` of a
/// circle of circumference `circumference`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandPacket {
    pub circumference: f64,
    pub first: i64,
    pub coeffs: Vec<Complex64>,
}

impl BandPacket {
    /// `ψ_k(ξ)` on `ξ > 0`, scaled to unit `L²`.
    pub fn block(k: i32, circumference: f64) -> Result<Self> {
        if !(circumference > 0.0 && circumference.is_finite()) {
            return Err(LabError::rejected(format!(
                "circumference must be positive, got {circumference}"
            )));
        }
        let unit = 2.0 * PI / circumference;
        let lo = (2f64.powi(k - 1) / unit).ceil() as i64;
        let hi = (2f64.powi(k + 1) / unit).floor() as i64;
        let coeffs: Vec<Complex64> = (lo.max(1)..=hi)
            .map(|m| Complex64::new(block_symbol(k, m as f64 * unit), 0.0))
            .collect();
        let mut packet = Self {
            circumference,
            first: lo.max(1),
            coeffs,
        };
        let mass = packet.l2_norm();
        if !(mass > 0.0) {
            return Err(LabError::rejected(format!(
                "block {k} holds no modes on a circle of circumference {circumference}"
            )));
        }
        for c in &mut packet.coeffs {
            *c /= mass;
        }
        Ok(packet)
    }

    fn wavenumber(&self, i: usize) -> f64 {
        2.0 * PI * (self.first + i as i64) as f64 / self.circumference
    }

    /// `(R Σ|c|²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        (self.circumference * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn evolved(&self, t: f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * Complex64::from_polar(1.0, -t * self.wavenumber(i).sqrt()))
            .collect();
        Self {
            circumference: self.circumference,
            first: self.first,
            coeffs,
        }
    }

    pub fn translated(&self, shift: f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * Complex64::from_polar(1.0, -self.wavenumber(i) * shift))
            .collect();
        Self {
            circumference: self.circumference,
            first: self.first,
            coeffs,
        }
    }

    /// `|u|` at `M` equispaced points, `M` the power of two at least
    /// `oversample` times the band length. The carrier `e^{i·first·2πx/R}`
    /// drops out of the modulus.
    pub fn modulus_samples(&self, oversample: usize) -> Vec<f64> {
        let m = (self.coeffs.len() * oversample.max(2)).next_power_of_two();
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        buf[..self.coeffs.len()].copy_from_slice(&self.coeffs);
        fft::inverse_in_place(&mut buf);
        buf.iter().map(|v| v.norm()).collect()
    }

    /// `‖u‖_∞` from oversampled values, refined by a parabola through the
    /// largest sample and its neighbours.
    pub fn sup_norm(&self, oversample: usize) -> f64 {
        let s = self.modulus_samples(oversample);
        let (i, &f0) = s
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("band is nonempty");
        let n = s.len();
        let (fl, fr) = (s[(i + n - 1) % n], s[(i + 1) % n]);
        let curv = fl - 2.0 * f0 + fr;
        if curv >= 0.0 {
            return f0;
        }
        let d = 0.5 * (fl - fr) / curv;
        f0 - 0.25 * (fl - fr) * d
    }

    /// `∫|u|² e^{2πix/R} dx = R Σ c_j c̄_{j+1}`.
    fn first_moment(&self) -> Complex64 {
        self.circumference * self.coeffs.windows(2).map(|w| w[0] * w[1].conj()).sum::<Complex64>()
    }

    /// Circular centroid of `|u|²` in `[0, R)` and its concentration
    /// `|z|/‖u‖²` in `[0, 1]`.
    pub fn centroid(&self) -> (f64, f64) {
        let z = self.first_moment();
        let mass = self.l2_norm().powi(2);
        let angle = z.arg().rem_euclid(2.0 * PI);
        (angle * self.circumference / (2.0 * PI), z.norm() / mass)
    }

    /// Circular standard deviation of `|u|²`.
    pub fn width(&self) -> f64 {
        let (_, conc) = self.centroid();
        self.circumference / (2.0 * PI) * (-2.0 * conc.ln()).sqrt()
    }
}

/// Samples of `‖e^{−itΛ}u‖_∞` and the fitted decay exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub times: Vec<f64>,
    pub sup: Vec<f64>,
    pub fit: LineFit,
}

impl DecayFit {
    pub fn slope(&self) -> f64 {
        self.fit.slope
    }
}

/// Relative regrowth of the sup norm that marks wrap-around contamination.
pub const REGROWTH_TOLERANCE: f64 = 0.1;

/// Fits `log ‖e^{−itΛ}u‖_∞` against `log t` for unit block-`k` data at
/// `samples` geometrically spaced times in `[t0, t1]`. The wrap time must
/// be at least four times `t1`.
pub fn measure_decay(
    k: i32,
    circumference: f64,
    t0: f64,
    t1: f64,
    samples: usize,
    oversample: usize,
) -> Result<DecayFit> {
    if !(t0 > 0.0 && t1 > t0) || samples < 2 {
        return Err(LabError::rejected("decay window needs 0 < t0 < t1 and two samples"));
    }
    // Group speed on block k is about 2^{−k/2}, so the wrap time is 2^{k/2}R.
    let needed = 4.0 * 2f64.powf(-k as f64 / 2.0) * t1;
    if circumference < needed {
        return Err(LabError::rejected(format!(
            "circumference {circumference} is below 4·2^(−k/2)·t1 = {needed}; the packet would wrap"
        )));
    }
    measure_decay_unchecked(&BandPacket::block(k, circumference)?, t0, t1, samples, oversample)
}

/// As [`measure_decay`] for arbitrary band data, without the wrap
/// precondition; regrowth of the sup norm still rejects the window.
pub fn measure_decay_unchecked(
    packet: &BandPacket,
    t0: f64,
    t1: f64,
    samples: usize,
    oversample: usize,
) -> Result<DecayFit> {
    let ratio = (t1 / t0).powf(1.0 / (samples - 1) as f64);
    let times: Vec<f64> = (0..samples).map(|i| t0 * ratio.powi(i as i32)).collect();
    let sup: Vec<f64> = times.iter().map(|&t| packet.evolved(t).sup_norm(oversample)).collect();
    let mut low = f64::INFINITY;
    for (t, s) in times.iter().zip(&sup) {
        if *s > low * (1.0 + REGROWTH_TOLERANCE) {
            return Err(LabError::rejected(format!(
                "sup norm regrows at t = {t}; window is wrap-contaminated"
            )));
        }
        low = low.min(*s);
    }
    let fit = log_log_fit(&times, &sup)?;
    Ok(DecayFit { times, sup, fit })
}

/// Placement of quadrature nodes on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TimeGrid {
    /// `points` intervals, geometric in `t + τ` with `τ = 0.05·2^{−k/2}`,
    /// fine near `t = 0` where block-`k` data is concentrated.
    Graded { points: usize },
    /// Fixed spacing, for long horizons where the sup norm oscillates.
    Uniform { dt: f64 },
}

impl TimeGrid {
    fn nodes(&self, k: i32, horizon: f64) -> Result<Vec<f64>> {
        match *self {
            TimeGrid::Graded { points } => {
                if points < 2 {
                    return Err(LabError::rejected("graded time grid needs at least two intervals"));
                }
                let tau = 0.05 * 2f64.powf(-k as f64 / 2.0);
                let a = (horizon / tau).ln_1p();
                Ok((0..=points)
                    .map(|i| tau * (a * i as f64 / points as f64).exp_m1())
                    .map(|t| t.min(horizon))
                    .collect())
            }
            TimeGrid::Uniform { dt } => {
                if !(dt > 0.0) {
                    return Err(LabError::rejected("uniform time grid needs a positive spacing"));
                }
                let n = (horizon / dt - 1e-9).ceil().max(1.0) as usize;
                Ok((0..=n).map(|i| horizon * i as f64 / n as f64).collect())
            }
        }
    }
}

/// `(∫₀^T ‖e^{−itΛ}u‖_∞⁴ dt)^{1/4}` with a self-convergence check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrichartzValue {
    pub horizon: f64,
    pub value: f64,
    /// Relative change against every other node of the same grid.
    pub quadrature_change: f64,
    pub inconclusive: bool,
}

/// Quadrature change above which a Strichartz value is flagged.
pub const QUADRATURE_TOLERANCE: f64 = 1e-2;

/// Cumulative trapezoid of `f` over the nodes.
fn cumulative_trapezoid(nodes: &[f64], f: &[f64]) -> Vec<f64> {
    let mut acc = vec![0.0; nodes.len()];
    for i in 1..nodes.len() {
        acc[i] = acc[i - 1] + 0.5 * (nodes[i] - nodes[i - 1]) * (f[i] + f[i - 1]);
    }
    acc
}

/// Every other node, keeping the last.
fn halve<T: Copy>(v: &[T]) -> Vec<T> {
    let mut out: Vec<T> = v.iter().step_by(2).copied().collect();
    if v.len() % 2 == 0 {
        out.push(v[v.len() - 1]);
    }
    out
}

pub fn measure_strichartz(
    k: i32,
    horizon: f64,
    circumference: f64,
    grid: TimeGrid,
    oversample: usize,
) -> Result<StrichartzValue> {
    let packet = BandPacket::block(k, circumference)?;
    Ok(strichartz_curve(&packet, k, &[horizon], grid, oversample)?[0])
}

/// Strichartz values at several horizons from one pass to the largest.
/// With a uniform grid each horizon should be a multiple of the spacing.
pub fn strichartz_curve(
    packet: &BandPacket,
    k: i32,
    horizons: &[f64],
    grid: TimeGrid,
    oversample: usize,
) -> Result<Vec<StrichartzValue>> {
    let t_max = horizons.iter().copied().fold(0.0, f64::max);
    if horizons.iter().any(|&h| !(h >= 0.0 && h.is_finite())) {
        return Err(LabError::rejected("horizons must be finite and ≥ 0"));
    }
    if t_max == 0.0 {
        return Ok(horizons
            .iter()
            .map(|&h| StrichartzValue {
                horizon: h,
                value: 0.0,
                quadrature_change: 0.0,
                inconclusive: false,
            })
            .collect());
    }
    let nodes = grid.nodes(k, t_max)?;
    let f: Vec<f64> = nodes
        .iter()
        .map(|&t| packet.evolved(t).sup_norm(oversample).powi(4))
        .collect();
    let read = |nodes: &[f64], f: &[f64]| -> Vec<f64> {
        let acc = cumulative_trapezoid(nodes, f);
        horizons
            .iter()
            .map(|&h| interpolate(nodes, &acc, h).powf(0.25))
            .collect()
    };
    let fine = read(&nodes, &f);
    let coarse = read(&halve(&nodes), &halve(&f));
    Ok(horizons
        .iter()
        .zip(fine.iter().zip(&coarse))
        .map(|(&h, (&f, &c))| {
            let change = if f == 0.0 { 0.0 } else { (f - c).abs() / f };
            StrichartzValue {
                horizon: h,
                value: f,
                quadrature_change: change,
                inconclusive: change > QUADRATURE_TOLERANCE,
            }
        })
        .collect())
}

fn interpolate(x: &[f64], y: &[f64], at: f64) -> f64 {
    match x.iter().position(|&v| v >= at) {
        Some(0) => y[0],
        Some(i) => {
            let w = (at - x[i - 1]) / (x[i] - x[i - 1]);
            y[i - 1] + w * (y[i] - y[i - 1])
        }
        None => *y.last().expect("nonempty"),
    }
}

/// Exponent `p` in `value ∝ 2^{pk}` across blocks at a fixed horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyScaling {
    pub blocks: Vec<i32>,
    pub values: Vec<StrichartzValue>,
    pub fit: LineFit,
}

pub fn frequency_scaling(
    blocks: &[i32],
    horizon: f64,
    circumference: f64,
    grid: TimeGrid,
    oversample: usize,
) -> Result<FrequencyScaling> {
    let values = blocks
        .iter()
        .map(|&k| measure_strichartz(k, horizon, circumference, grid, oversample))
        .collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = blocks.iter().map(|&k| 2f64.powi(k)).collect();
    let y: Vec<f64> = values.iter().map(|v| v.value).collect();
    Ok(FrequencyScaling {
        blocks: blocks.to_vec(),
        values,
        fit: log_log_fit(&x, &y)?,
    })
}

/// Exponent `q` in `value ∝ (1 + T/R)^q` at a fixed block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodScaling {
    pub block: i32,
    pub circumference: f64,
    pub values: Vec<StrichartzValue>,
    pub fit: LineFit,
}

pub fn period_scaling(
    k: i32,
    circumference: f64,
    horizons: &[f64],
    dt: f64,
    oversample: usize,
) -> Result<PeriodScaling> {
    let packet = BandPacket::block(k, circumference)?;
    let values = strichartz_curve(&packet, k, horizons, TimeGrid::Uniform { dt }, oversample)?;
    let x: Vec<f64> = horizons.iter().map(|t| 1.0 + t / circumference).collect();
    let y: Vec<f64> = values.iter().map(|v| v.value).collect();
    Ok(PeriodScaling {
        block: k,
        circumference,
        values,
        fit: log_log_fit(&x, &y)?,
    })
}

/// Predicted and measured time for block-`k` data to travel once around.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WrapTime {
    /// `2^{k/2} R`.
    pub predicted: f64,
    /// First time the unwrapped centroid has advanced by `R − width`.
    pub measured: Option<f64>,
    /// Mean centroid speed over the measured transit.
    pub speed: Option<f64>,
    /// Smallest concentration of `|u|²` seen while tracking.
    pub concentration: f64,
    pub inconclusive: bool,
}

impl WrapTime {
    pub fn relative_error(&self) -> Option<f64> {
        self.measured.map(|m| (m - self.predicted).abs() / self.predicted)
    }
}

/// Concentration below which the centroid is not trusted.
pub const MIN_CONCENTRATION: f64 = 0.1;

/// Tracks the circular centroid in steps of `dt` up to four predicted
/// wrap times.
pub fn wrap_time(k: i32, circumference: f64, dt: f64) -> Result<WrapTime> {
    if !(dt > 0.0) {
        return Err(LabError::rejected("tracking step must be positive"));
    }
    let packet = BandPacket::block(k, circumference)?;
    let predicted = 2f64.powf(k as f64 / 2.0) * circumference;
    let width = packet.width();
    let target = circumference - width;
    let (start, mut conc_min) = packet.centroid();
    let mut prev = start;
    let mut travelled = 0.0;
    let mut t = 0.0;
    let mut measured = None;
    while t < 4.0 * predicted {
        let t_next = t + dt;
        let (pos, conc) = packet.evolved(t_next).centroid();
        conc_min = conc_min.min(conc);
        let step = (pos - prev + 0.5 * circumference).rem_euclid(circumference) - 0.5 * circumference;
        let before = travelled;
        travelled += step;
        prev = pos;
        if travelled >= target {
            let w = (target - before) / (travelled - before);
            measured = Some(t + w * dt);
            break;
        }
        t = t_next;
    }
    Ok(WrapTime {
        predicted,
        measured,
        speed: measured.map(|m| target / m),
        concentration: conc_min,
        inconclusive: measured.is_none() || conc_min < MIN_CONCENTRATION,
    })
}

/// One row of dispersive measurements; a row carries whichever of the
/// Strichartz value, decay slope and measured wrap time its experiment
/// produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionReport {
    pub block: i32,
    pub horizon: f64,
    pub circumference: f64,
    pub strichartz: Option<f64>,
    pub decay_slope: Option<f64>,
    pub wrap_predicted: f64,
    pub wrap_measured: Option<f64>,
}

impl DispersionReport {
    pub const FIELDS: [&'static str; 7] = [
        "block",
        "horizon",
        "circumference",
        "strichartz",
        "decay_slope",
        "wrap_predicted",
        "wrap_measured",
    ];

    /// Row with only the predicted wrap time filled in.
    pub fn new(block: i32, horizon: f64, circumference: f64) -> Self {
        Self {
            block,
            horizon,
            circumference,
            strichartz: None,
            decay_slope: None,
            wrap_predicted: 2f64.powf(block as f64 / 2.0) * circumference,
            wrap_measured: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{sobolev_norm, PeriodicGrid};

    #[test]
    fn free_flow_is_unitary_group() {
        let g = PeriodicGrid::new(64, 30.0).unwrap();
        let u = Field::from_complex_fn(g, |x| Complex64::new((0.4 * x).cos(), (1.3 * x).sin() * 0.3));
        assert!(free_evolve(&u, 0.0).sub(&u).unwrap().sup_norm() <= 1e-14);
        let a = free_evolve(&u, 1.7);
        for s in [0.0, 3.0, 18.0] {
            let (n0, n1) = (sobolev_norm(&u, s), sobolev_norm(&a, s));
            assert!((n0 - n1).abs() <= 1e-12 * n0);
        }
        let b = free_evolve(&free_evolve(&u, 0.6), 1.1);
        assert!(b.sub(&a).unwrap().sup_norm() <= 1e-12);
    }

    #[test]
    fn block_packet_is_unit_and_matches_full_grid() {
        let p = BandPacket::block(2, 50.0).unwrap();
        assert!((p.l2_norm() - 1.0).abs() < 1e-14);
        let g = PeriodicGrid::new(1024, 50.0).unwrap();
        let mut spec = vec![Complex64::new(0.0, 0.0); 1024];
        for (i, c) in p.coeffs.iter().enumerate() {
            spec[g.slot(p.first + i as i64).unwrap()] = *c;
        }
        let full = free_evolve(&Field::from_spectrum(g, spec, false).unwrap(), 3.0);
        let band = p.evolved(3.0).sup_norm(8);
        assert!((full.sup_norm() - band).abs() <= 1e-3 * band);
    }

    #[test]
    fn zero_horizon_norm_vanishes() {
        let v = measure_strichartz(1, 0.0, 100.0, TimeGrid::Graded { points: 50 }, 4).unwrap();
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn decay_requires_room_to_disperse() {
        assert!(measure_decay(0, 100.0, 50.0, 800.0, 20, 4).is_err());
        assert!(measure_decay(4, 1000.0, 50.0, 800.0, 20, 4).is_ok());
    }
}
