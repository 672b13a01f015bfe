//! Time stepping of the Zakharov system in the complex variable
//! `u = h + iΛψ`, with the linear phase `e^{−itΛ}` factored out exactly.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    complex_variable, from_complex_variable, sobolev_energy, DiagnosticParams, DiagnosticsRecord, DiagnosticsTracker,
};
use crate::dtn::{dtn_series, DtnResult, WaveState, DEFAULT_ORDER};
use crate::ensemble::{random_unidirectional, stream, SpectralEnvelope};
use crate::error::{LabError, Result};
use crate::spectral::{sobolev_norm, Field, PeriodicGrid};

/// `P(½((1+h'²)B² − ψ'²))`, which equals `ψ_t + h`.
pub(crate) fn bernoulli(state: &WaveState, dtn: &DtnResult) -> Field {
    let hx = state.h().ddx();
    let px = state.psi().ddx();
    let values: Vec<f64> = hx
        .values()
        .iter()
        .zip(px.values())
        .zip(dtn.b.values())
        .map(|((a, p), b)| 0.5 * ((1.0 + a.re * a.re) * b.re * b.re - p.re * p.re))
        .collect();
    Field::from_real_values(*state.grid(), values)
        .expect("length matches grid")
        .dealias()
}

/// `(h_t, ψ_t) = (G(h)ψ, −h − ½ψ'² + (Gψ + h'ψ')²/(2(1+h'²)))`.
pub fn rhs(state: &WaveState, order: usize) -> Result<(Field, Field)> {
    let dtn = dtn_series(state, order)?;
    let psi_t = bernoulli(state, &dtn).sub(state.h()).expect("same grid");
    Ok((dtn.g, psi_t))
}

/// `N = (G(h) − |∇|)ψ + iΛ(ψ_t + h)`, so that `u_t + iΛu = N`.
pub fn nonlinearity(state: &WaveState, order: usize) -> Result<Field> {
    let dtn = dtn_series(state, order)?;
    Ok(nonlinearity_from(state, &dtn))
}

pub(crate) fn nonlinearity_from(state: &WaveState, dtn: &DtnResult) -> Field {
    let lam_q = bernoulli(state, dtn).half_grad();
    let spectrum = dtn
        .g_excess
        .spectrum()
        .iter()
        .zip(lam_q.spectrum())
        .map(|(g, q)| g + Complex64::i() * q)
        .collect();
    Field::from_spectrum(*state.grid(), spectrum, false).expect("length matches grid")
}

/// `t → −t` symmetry: `(h, ψ) → (h, −ψ)`.
pub fn reverse(state: &WaveState) -> WaveState {
    WaveState::new(state.h().clone(), state.psi().scale(-1.0), state.t).expect("state fields are valid")
}

/// `0.1 · min(1, 2π/Λ(ξ_max))`.
pub fn default_dt(grid: &PeriodicGrid) -> f64 {
    0.1 * (2.0 * PI / grid.max_wavenumber().sqrt()).min(1.0)
}

/// Integrating-factor (Lawson) RK4 with a fixed step.
#[derive(Debug, Clone)]
pub struct Integrator {
    grid: PeriodicGrid,
    dt: f64,
    order: usize,
    nonlinear: bool,
    half: Vec<Complex64>,
    full: Vec<Complex64>,
}

impl Integrator {
    pub fn new(grid: PeriodicGrid, dt: f64, order: usize, nonlinear: bool) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(LabError::rejected(format!("time step must be positive, got {dt}")));
        }
        let phase = |tau: f64| -> Vec<Complex64> {
            grid.wavenumbers()
                .iter()
                .map(|xi| Complex64::from_polar(1.0, -tau * xi.abs().sqrt()))
                .collect()
        };
        Ok(Self {
            grid,
            dt,
            order,
            nonlinear,
            half: phase(0.5 * dt),
            full: phase(dt),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn forcing(&self, u: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
        if u.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(LabError::NonFinite { time: t });
        }
        let field = Field::from_spectrum(self.grid, u.to_vec(), false)?;
        let state = from_complex_variable(&field, t)?;
        Ok(nonlinearity(&state, self.order)?.spectrum().to_vec())
    }

    pub fn step(&self, state: &WaveState) -> Result<WaveState> {
        let (dt, t) = (self.dt, state.t);
        let u = complex_variable(state).spectrum().to_vec();
        let rot =
            |p: &[Complex64], v: &[Complex64]| -> Vec<Complex64> { p.iter().zip(v).map(|(a, b)| a * b).collect() };
        let next = if self.nonlinear {
            let eu_half = rot(&self.half, &u);
            let k1 = self.forcing(&u, t)?;
            let a: Vec<Complex64> = eu_half
                .iter()
                .zip(rot(&self.half, &k1))
                .map(|(x, k)| x + 0.5 * dt * k)
                .collect();
            let k2 = self.forcing(&a, t + 0.5 * dt)?;
            let b: Vec<Complex64> = eu_half.iter().zip(&k2).map(|(x, k)| x + 0.5 * dt * k).collect();
            let k3 = self.forcing(&b, t + 0.5 * dt)?;
            let c: Vec<Complex64> = rot(&self.full, &u)
                .iter()
                .zip(rot(&self.half, &k3))
                .map(|(x, k)| x + dt * k)
                .collect();
            let k4 = self.forcing(&c, t + dt)?;
            (0..u.len())
                .map(|i| {
                    self.full[i] * (u[i] + dt / 6.0 * k1[i]) + dt / 6.0 * (2.0 * self.half[i] * (k2[i] + k3[i]) + k4[i])
                })
                .collect()
        } else {
            rot(&self.full, &u)
        };
        if next.iter().any(|c: &Complex64| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(LabError::NonFinite { time: t + dt });
        }
        from_complex_variable(&Field::from_spectrum(self.grid, next, false)?, t + dt)
    }
}

/// One integrating-factor RK4 step with the nonlinearity switched on.
pub fn step(state: &WaveState, dt: f64, order: usize) -> Result<WaveState> {
    Integrator::new(*state.grid(), dt, order, true)?.step(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub horizon: f64,
    /// Requested step; shortened so that a whole number of steps hits the
    /// horizon.
    pub dt: f64,
    pub order: usize,
    pub nonlinear: bool,
    /// Number of diagnostic snapshots after the initial one.
    pub snapshots: usize,
    pub diagnostics: DiagnosticParams,
    /// Halt once `E_s(t) > growth_limit · E_s(0)`.
    pub growth_limit: f64,
}

impl SimulationConfig {
    pub fn new(grid: &PeriodicGrid, horizon: f64) -> Self {
        Self {
            horizon,
            dt: default_dt(grid),
            order: DEFAULT_ORDER,
            nonlinear: true,
            snapshots: 50,
            diagnostics: DiagnosticParams::default(),
            growth_limit: 10.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(LabError::rejected(format!(
                "horizon must be finite and ≥ 0, got {}",
                self.horizon
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(LabError::rejected(format!(
                "time step must be positive, got {}",
                self.dt
            )));
        }
        if self.snapshots == 0 {
            return Err(LabError::rejected("snapshot cadence must be at least one"));
        }
        if !(self.growth_limit > 1.0) {
            return Err(LabError::rejected(format!(
                "growth limit must exceed 1, got {}",
                self.growth_limit
            )));
        }
        Ok(())
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Halt {
    Horizon,
    Steepness { time: f64, steepness: f64 },
    NonFinite { time: f64 },
    Growth { time: f64, ratio: f64 },
}

impl Halt {
    pub fn is_blowup(&self) -> bool {
        !matches!(self, Halt::Horizon)
    }

    pub fn time(&self) -> Option<f64> {
        match *self {
            Halt::Horizon => None,
            Halt::Steepness { time, .. } | Halt::NonFinite { time } | Halt::Growth { time, .. } => Some(time),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeInfo {
    pub name: String,
    pub dt: f64,
    pub order: usize,
    pub nonlinear: bool,
}

/// Snapshots at diagnostic times.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<WaveState>,
    pub dt: f64,
    pub scheme: SchemeInfo,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> &WaveState {
        self.states
            .last()
            .expect("a trajectory holds at least the initial state")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub diagnostics: Vec<DiagnosticsRecord>,
    pub halt: Halt,
    pub steps: usize,
}

/// Advances `initial` to the horizon or the first halt signal, recording
/// diagnostics and calling `hook` at every snapshot.
pub fn simulate(
    initial: &WaveState,
    cfg: &SimulationConfig,
    mut hook: impl FnMut(&WaveState, &DiagnosticsRecord),
) -> Result<(Trajectory, RunRecord)> {
    cfg.validate()?;
    initial.check_steepness()?;
    let steps = if cfg.horizon == 0.0 {
        0
    } else {
        (cfg.horizon / cfg.dt - 1e-9).ceil().max(1.0) as usize
    };
    let dt = if steps == 0 { cfg.dt } else { cfg.horizon / steps as f64 };
    let integrator = Integrator::new(*initial.grid(), dt, cfg.order, cfg.nonlinear)?;
    let marks = cfg.snapshots.min(steps.max(1));
    let mark = |i: usize| (i * steps + marks / 2) / marks;

    let mut tracker = DiagnosticsTracker::new(cfg.diagnostics, cfg.order);
    let t0 = initial.t;
    let first = tracker.record(initial)?;
    hook(initial, &first);
    let e0 = first.sobolev_energy;
    let mut states = vec![initial.clone()];
    let mut halt = Halt::Horizon;
    let mut state = initial.clone();
    let mut next_mark = 1;
    let mut taken = 0;

    for n in 1..=steps {
        let stepped = integrator.step(&state).map(|s| s.with_time(t0 + n as f64 * dt));
        match stepped {
            Ok(s) => state = s,
            Err(LabError::Steepness { steepness, .. }) => {
                halt = Halt::Steepness {
                    time: state.t,
                    steepness,
                };
                break;
            }
            Err(LabError::NonFinite { time }) => {
                halt = Halt::NonFinite { time };
                break;
            }
            Err(e) => return Err(e),
        }
        taken = n;
        if next_mark <= marks && n == mark(next_mark) {
            next_mark += 1;
            let rec = match tracker.record(&state) {
                Ok(r) => r,
                Err(LabError::Steepness { steepness, .. }) => {
                    halt = Halt::Steepness {
                        time: state.t,
                        steepness,
                    };
                    break;
                }
                Err(e) => return Err(e),
            };
            hook(&state, &rec);
            states.push(state.clone());
            if !rec.sobolev_energy.is_finite() {
                halt = Halt::NonFinite { time: state.t };
                break;
            }
            if e0 > 0.0 && rec.sobolev_energy > cfg.growth_limit * e0 {
                halt = Halt::Growth {
                    time: state.t,
                    ratio: rec.sobolev_energy / e0,
                };
                break;
            }
        }
    }
    // Keep the last valid state when a step failed between snapshots.
    if halt.is_blowup() && states.last().map(|s| s.t) < Some(state.t) {
        if let Ok(rec) = tracker.record(&state) {
            hook(&state, &rec);
        }
        states.push(state);
    }

    Ok((
        Trajectory {
            states,
            dt,
            scheme: SchemeInfo {
                name: "integrating-factor RK4".to_string(),
                dt,
                order: cfg.order,
                nonlinear: cfg.nonlinear,
            },
        },
        RunRecord {
            diagnostics: tracker.into_records(),
            halt,
            steps: taken,
        },
    ))
}

/// Target relative residual of the initial-data normalization.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-10;

/// Random-phase data travelling in one direction, scaled so that
/// `E_s = ‖h‖_{H^s} + ‖Λw‖_{H^s} = ε`.
///
/// `u₀ = h₀ + iΛψ₀` is supported on `ξ > 0` with the given envelope, so
/// its physical extent is the whole period. The scale is found by the
/// fixed-point iteration `λ ← λ ε / E_s(λ)`.
pub fn make_initial_data(
    grid: &PeriodicGrid,
    envelope: &SpectralEnvelope,
    epsilon: f64,
    s: f64,
    seed: u64,
) -> Result<WaveState> {
    envelope.validate(grid)?;
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(LabError::rejected(format!("ε must be finite and ≥ 0, got {epsilon}")));
    }
    if epsilon == 0.0 {
        return Ok(WaveState::zero(*grid));
    }
    let u0 = random_unidirectional(grid, envelope, &mut stream(seed, 0));
    let base = from_complex_variable(&u0, 0.0)?;
    normalize_sobolev_energy(&base, epsilon, s, DEFAULT_ORDER)
}

/// Rescales `base` until `E_s` matches `epsilon` to
/// [`NORMALIZATION_TOLERANCE`].
pub fn normalize_sobolev_energy(base: &WaveState, epsilon: f64, s: f64, order: usize) -> Result<WaveState> {
    let energy = |st: &WaveState| -> Result<f64> { Ok(sobolev_energy(st, &dtn_series(st, order)?, s)) };
    // The linear size fixes the first guess; `base` itself may be far
    // outside the series regime.
    let e1 = sobolev_norm(base.h(), s) + sobolev_norm(&base.psi().half_grad(), s);
    if !(e1 > 0.0 && e1.is_finite()) {
        return Err(LabError::rejected("cannot normalize a state with zero or infinite E_s"));
    }
    let mut lambda = epsilon / e1;
    let mut residual = f64::INFINITY;
    for _ in 0..100 {
        let state = base.scaled(lambda);
        let e = energy(&state)?;
        let next = (e - epsilon).abs() / epsilon;
        if next <= 1e-14 || (next <= NORMALIZATION_TOLERANCE && next >= 0.5 * residual) {
            return Ok(state);
        }
        residual = next;
        lambda *= epsilon / e;
    }
    if residual <= NORMALIZATION_TOLERANCE {
        return Ok(base.scaled(lambda));
    }
    Err(LabError::NonConvergence {
        iterations: 100,
        residual,
    })
}
