//! Norms and functionals along trajectories: `u`, `w`, `E`, `E_s`, the
//! Besov size and the accumulated space-time norm.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dtn::{dtn_series, DtnResult, WaveState};
use crate::error::{LabError, Result};
use crate::fit::{log_log_fit, LineFit};
use crate::spectral::{
    besov_norm_with, paraproduct_with, sobolev_norm, Field, LpDecomposition, ParaproductCutoff, SupSampling,
};

/// `u = h + i|∇|^{1/2}ψ`.
pub fn complex_variable(state: &WaveState) -> Field {
    let lam = state.psi().half_grad();
    let spectrum: Vec<Complex64> = state
        .h()
        .spectrum()
        .iter()
        .zip(lam.spectrum())
        .map(|(a, b)| a + Complex64::i() * b)
        .collect();
    Field::from_spectrum(*state.grid(), spectrum, false).expect("length matches grid")
}

/// Inverse of [`complex_variable`]: `h = Re u`, `ψ = |∇|^{−1/2} Im u` on the
/// mean-zero branch.
pub fn from_complex_variable(u: &Field, t: f64) -> Result<WaveState> {
    let h = u.re();
    let psi = u
        .im()
        .apply_real_multiplier(|xi| if xi == 0.0 { 0.0 } else { xi.abs().powf(-0.5) })?;
    WaveState::new(h, psi, t)
}

/// `w = ψ − T_B h` with the dealiased `B`; the result is dealiased too.
pub fn good_unknown(state: &WaveState, dtn: &DtnResult) -> Field {
    good_unknown_with(state, dtn, &ParaproductCutoff::default())
}

pub fn good_unknown_with(state: &WaveState, dtn: &DtnResult, cutoff: &ParaproductCutoff) -> Field {
    let tb = paraproduct_with(&dtn.b.dealias(), state.h(), cutoff).expect("same grid");
    state.psi().sub(&tb.dealias()).expect("same grid")
}

/// `∫ ½(ψ G(h)ψ + h²) dx`.
pub fn energy(state: &WaveState, dtn: &DtnResult) -> f64 {
    let kinetic = state.psi().mul(&dtn.g).expect("same grid").integral().re;
    let potential = state.h().mul(state.h()).expect("same grid").integral().re;
    0.5 * (kinetic + potential)
}

/// `E_s = ‖h‖_{H^s} + ‖|∇|^{1/2} w‖_{H^s}`.
pub fn sobolev_energy(state: &WaveState, dtn: &DtnResult, s: f64) -> f64 {
    let w = good_unknown(state, dtn);
    sobolev_norm(state.h(), s) + sobolev_norm(&w.half_grad(), s)
}

/// `‖h‖_{C_*^ρ} + ‖|∇|^{1/2}ψ‖_{C_*^ρ}`.
pub fn besov_rho(state: &WaveState, rho: f64, sampling: SupSampling) -> f64 {
    let lp = LpDecomposition::for_grid(state.grid());
    besov_norm_with(state.h(), rho, &lp, sampling) + besov_norm_with(&state.psi().half_grad(), rho, &lp, sampling)
}

/// `(∫ a(t)⁴ dt)^{1/4}` by the trapezoid rule on a uniform trace.
pub fn spacetime_accumulate(trace: &[f64], dt: f64) -> Result<f64> {
    if trace.len() < 2 {
        return Err(LabError::rejected("space-time accumulation needs at least two samples"));
    }
    if !(dt > 0.0) {
        return Err(LabError::rejected(format!("sample spacing must be positive, got {dt}")));
    }
    let q: Vec<f64> = trace.iter().map(|a| a.powi(4)).collect();
    let n = q.len();
    let sum = q[1..n - 1].iter().sum::<f64>() + 0.5 * (q[0] + q[n - 1]);
    Ok((sum * dt).powf(0.25))
}

/// Exponents and sampling used for the diagnostics of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticParams {
    pub s: f64,
    pub rho: f64,
    pub sampling: SupSampling,
}

impl Default for DiagnosticParams {
    fn default() -> Self {
        Self {
            s: 18.0,
            rho: 14.25,
            sampling: SupSampling::Grid,
        }
    }
}

/// One row of a run's diagnostics table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub time: f64,
    pub energy: f64,
    pub sobolev_energy: f64,
    pub besov_rho: f64,
    pub u_sobolev: f64,
    /// `(∫₀ᵗ ‖u‖_{C_*^ρ}⁴)^{1/4}` accumulated over the recorded samples.
    pub g_partial: f64,
}

impl DiagnosticsRecord {
    pub const FIELDS: [&'static str; 6] = [
        "time",
        "energy",
        "sobolev_energy",
        "besov_rho",
        "u_sobolev",
        "g_partial",
    ];
}

/// Running diagnostics along a trajectory. The space-time accumulator
/// adds one trapezoid panel per recorded state.
#[derive(Debug, Clone)]
pub struct DiagnosticsTracker {
    params: DiagnosticParams,
    order: usize,
    last: Option<(f64, f64)>,
    quartic: f64,
    records: Vec<DiagnosticsRecord>,
}

impl DiagnosticsTracker {
    pub fn new(params: DiagnosticParams, order: usize) -> Self {
        Self {
            params,
            order,
            last: None,
            quartic: 0.0,
            records: Vec::new(),
        }
    }

    pub fn record(&mut self, state: &WaveState) -> Result<DiagnosticsRecord> {
        let dtn = dtn_series(state, self.order)?;
        let u = complex_variable(state);
        let lp = LpDecomposition::for_grid(state.grid());
        let u_besov = besov_norm_with(&u, self.params.rho, &lp, self.params.sampling);
        if let Some((t0, a0)) = self.last {
            self.quartic += 0.5 * (state.t - t0) * (a0.powi(4) + u_besov.powi(4));
        }
        self.last = Some((state.t, u_besov));
        let rec = DiagnosticsRecord {
            time: state.t,
            energy: energy(state, &dtn),
            sobolev_energy: sobolev_energy(state, &dtn, self.params.s),
            besov_rho: besov_rho(state, self.params.rho, self.params.sampling),
            u_sobolev: sobolev_norm(&u, self.params.s),
            g_partial: self.quartic.powf(0.25),
        };
        self.records.push(rec);
        Ok(rec)
    }

    pub fn records(&self) -> &[DiagnosticsRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<DiagnosticsRecord> {
        self.records
    }
}

/// One member of a drift ensemble: amplitude and its `(t, E_s)` trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftRun {
    pub epsilon: f64,
    pub times: Vec<f64>,
    pub sobolev_energy: Vec<f64>,
}

impl DriftRun {
    /// `max_t |E_s(t)² − E_s(0)²| / (E_s(0)² · T)`.
    pub fn rate(&self) -> f64 {
        let (Some(&e0), Some(&t_end)) = (self.sobolev_energy.first(), self.times.last()) else {
            return 0.0;
        };
        let t0 = self.times[0];
        if e0 == 0.0 || t_end <= t0 {
            return 0.0;
        }
        let dev = self
            .sobolev_energy
            .iter()
            .map(|e| (e * e - e0 * e0).abs())
            .fold(0.0, f64::max);
        dev / (e0 * e0 * (t_end - t0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub epsilons: Vec<f64>,
    /// Median rate per distinct ε, in increasing ε.
    pub rates: Vec<f64>,
    pub fit: Option<LineFit>,
    /// Some rate sat at round-off level, so no exponent is claimed.
    pub inconclusive: bool,
    /// Rates never decrease with ε.
    pub monotone: bool,
}

impl DriftReport {
    pub fn exponent(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }
}

/// Relative drift below this is indistinguishable from round-off.
pub const DRIFT_FLOOR: f64 = 1e-13;

/// Fits `rate ∝ ε^p` over an ensemble of runs at a common horizon.
pub fn quartic_drift_check(runs: &[DriftRun]) -> Result<DriftReport> {
    let mut eps: Vec<f64> = runs.iter().map(|r| r.epsilon).collect();
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    if eps.is_empty() {
        return Err(LabError::rejected("drift check needs at least one run"));
    }
    let rates: Vec<f64> = eps
        .iter()
        .map(|e| {
            let rs: Vec<f64> = runs.iter().filter(|r| r.epsilon == *e).map(DriftRun::rate).collect();
            crate::fit::median(&rs)
        })
        .collect();
    let inconclusive = rates.iter().any(|&r| r <= DRIFT_FLOOR);
    let monotone = rates.windows(2).all(|w| w[1] >= w[0]);
    let fit = if inconclusive || eps.len() < 2 {
        None
    } else {
        Some(log_log_fit(&eps, &rates)?)
    };
    Ok(DriftReport {
        epsilons: eps,
        rates,
        fit,
        inconclusive,
        monotone,
    })
}
