//! Validation checks. Each one measures a single quantity and compares it
//! to a fixed tolerance. The dispersive checks read their parameters from
//! the configuration; the others use small fixed problems, reduced
//! further under `smoke`.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use wavelab::diagnostics::{quartic_drift_check, DiagnosticParams, DriftRun};
use wavelab::dtn::{dtn_apply, dtn_elliptic_oracle, inequality_bench, BenchConfig, OracleConfig, WaveState};
use wavelab::ensemble::{random_real_field, run_seed, stream, SpectralEnvelope};
use wavelab::evolution::{make_initial_data, rhs, simulate, SimulationConfig};
use wavelab::fit::log_log_fit;
use wavelab::normal_form::{ibp_identity_residual, quadratic_pairs, split_nonlinearity};
use wavelab::spectral::{l2_quadrature, sobolev_norm, Field, PeriodicGrid};

use crate::config::{CheckKind, ExperimentConfig};
use crate::dispersion::{self, within};
use crate::Verdict;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub check: CheckKind,
    pub verdict: Verdict,
    /// Headline measured value.
    pub measured: f64,
    /// Human-readable acceptance rule for `measured`.
    pub tolerance: String,
    /// Secondary values, as `name = value` pairs.
    pub details: Vec<(String, f64)>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckOutcome>,
    pub verdict: Verdict,
}

impl ValidationReport {
    pub fn failing(&self) -> Vec<&CheckOutcome> {
        self.checks.iter().filter(|c| c.verdict == Verdict::Fail).collect()
    }
}

pub fn run_validate(cfg: &ExperimentConfig) -> ValidationReport {
    let checks: Vec<CheckOutcome> = cfg.checks.iter().map(|&c| run_check(c, cfg)).collect();
    let verdict = Verdict::combine(checks.iter().map(|c| c.verdict));
    ValidationReport { checks, verdict }
}

struct Measured {
    verdict: Verdict,
    measured: f64,
    tolerance: String,
    details: Vec<(String, f64)>,
}

fn measured(verdict: Verdict, measured: f64, tolerance: impl Into<String>) -> Measured {
    Measured {
        verdict,
        measured,
        tolerance: tolerance.into(),
        details: Vec::new(),
    }
}

impl Measured {
    fn with(mut self, name: &str, value: f64) -> Self {
        self.details.push((name.to_string(), value));
        self
    }
}

fn at_most(value: f64, bound: f64) -> Verdict {
    if value <= bound {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// Runs one check; an error inside it is a failure with a NaN value.
pub fn run_check(check: CheckKind, cfg: &ExperimentConfig) -> CheckOutcome {
    let clock = Instant::now();
    let result = match check {
        CheckKind::Energy => energy(cfg),
        CheckKind::Split => split(),
        CheckKind::CrossForm => cross_form(),
        CheckKind::DtnOracle => dtn_oracle(),
        CheckKind::Bench => bench(cfg),
        CheckKind::Scaling => scaling(),
        CheckKind::Symbols => symbols(),
        CheckKind::Ibp => ibp(cfg),
        CheckKind::Decay => decay(cfg),
        CheckKind::Frequency => frequency(cfg),
        CheckKind::Period => period(cfg),
        CheckKind::Drift => drift(cfg),
    };
    let seconds = clock.elapsed().as_secs_f64();
    let m = result.unwrap_or_else(|e| measured(Verdict::Fail, f64::NAN, format!("error: {e}")));
    CheckOutcome {
        check,
        verdict: m.verdict,
        measured: m.measured,
        tolerance: m.tolerance,
        details: m.details,
        seconds,
    }
}

type CheckResult = wavelab::Result<Measured>;

/// Random state on `[0, 2π)` with `‖h'‖_∞ = slope`.
pub fn random_state(seed: u64, slope: f64) -> WaveState {
    let grid = PeriodicGrid::new(64, 2.0 * PI).expect("valid grid");
    let env = SpectralEnvelope { peak: 5.0, width: 2.0 };
    let mut rng = stream(seed, 0);
    let h = random_real_field(&grid, &env, &mut rng);
    let psi = random_real_field(&grid, &env, &mut rng);
    let k = slope / h.ddx().sup_norm();
    WaveState::new(h.scale(k), psi.scale(k), 0.0).expect("fields share a grid")
}

fn rel(a: &Field, b: &Field) -> f64 {
    l2_quadrature(&a.sub(b).expect("same grid")) / l2_quadrature(b)
}

/// Grid, envelope and horizon of the conservation and drift runs.
fn dynamics_problem(cfg: &ExperimentConfig) -> (PeriodicGrid, SpectralEnvelope, f64) {
    let (n, r, t, peak, width) = if cfg.smoke {
        (64, 100.0, 100.0, 0.5, 0.13)
    } else {
        (256, 200.0, 100.0, 1.0, 0.2)
    };
    (
        PeriodicGrid::new(n, r).expect("valid grid"),
        SpectralEnvelope { peak, width },
        t,
    )
}

fn dynamics_config(cfg: &ExperimentConfig, grid: &PeriodicGrid, horizon: f64) -> SimulationConfig {
    let mut sim = SimulationConfig::new(grid, horizon);
    sim.order = cfg.order;
    sim.diagnostics = DiagnosticParams {
        s: cfg.s,
        rho: cfg.rho,
        ..DiagnosticParams::default()
    };
    sim
}

pub const ENERGY_TOLERANCE: f64 = 1e-6;
pub const ENERGY_SECONDS: f64 = 60.0;

fn energy(cfg: &ExperimentConfig) -> CheckResult {
    let clock = Instant::now();
    let (grid, env, horizon) = dynamics_problem(cfg);
    let init = make_initial_data(&grid, &env, 0.01, cfg.s, run_seed(cfg.seed, 0))?;
    let (_, rec) = simulate(&init, &dynamics_config(cfg, &grid, horizon), |_, _| {})?;
    let e0 = rec.diagnostics[0].energy;
    let drift = rec
        .diagnostics
        .iter()
        .map(|d| (d.energy - e0).abs() / e0)
        .fold(0.0, f64::max);
    let seconds = clock.elapsed().as_secs_f64();
    let v = Verdict::combine([
        at_most(drift, ENERGY_TOLERANCE),
        at_most(seconds, ENERGY_SECONDS),
        if rec.halt.is_blowup() {
            Verdict::Fail
        } else {
            Verdict::Pass
        },
    ]);
    Ok(
        measured(v, drift, format!("≤ {ENERGY_TOLERANCE:e} within {ENERGY_SECONDS} s"))
            .with("horizon", horizon)
            .with("modes", grid.len() as f64),
    )
}

pub const SPLIT_TOLERANCE: f64 = 1e-12;
pub const CROSS_TOLERANCE: f64 = 1e-10;
pub const RANDOM_STATES: u64 = 50;

fn split() -> CheckResult {
    let mut worst: f64 = 0.0;
    for i in 0..RANDOM_STATES {
        let s = split_nonlinearity(&random_state(i, 0.05), 3)?;
        worst = worst.max(rel(&s.n2.add(&s.n3)?, &s.n));
    }
    Ok(measured(
        at_most(worst, SPLIT_TOLERANCE),
        worst,
        format!("≤ {SPLIT_TOLERANCE:e}"),
    ))
}

fn cross_form() -> CheckResult {
    let mut worst: f64 = 0.0;
    for i in 0..RANDOM_STATES {
        let st = random_state(100 + i, 0.05);
        let (ht, pt) = rhs(&st, 3)?;
        // u_t + iΛu = (h_t − |∇|ψ) + iΛ(ψ_t + h)
        let re = ht.sub(&st.psi().abs_grad())?;
        let im = pt.add(st.h())?.half_grad();
        let lhs = re.add(&im.scale_complex(Complex64::i()))?;
        worst = worst.max(rel(&lhs, &split_nonlinearity(&st, 3)?.n));
    }
    Ok(measured(
        at_most(worst, CROSS_TOLERANCE),
        worst,
        format!("≤ {CROSS_TOLERANCE:e}"),
    ))
}

pub const ORACLE_TOLERANCE: f64 = 1e-4;
pub const ORACLE_EXPONENT: f64 = 3.8;

fn dtn_oracle() -> CheckResult {
    let grid = PeriodicGrid::new(64, 2.0 * PI).expect("valid grid");
    let shape = Field::from_real_fn(grid, |x| x.cos() + 0.5 * (2.0 * x + 0.7).sin() - 0.25 * (3.0 * x).cos());
    let c1 = shape.sup_norm() + shape.ddx().sup_norm();
    let psi = Field::from_real_fn(grid, |x| x.sin() + 0.6 * (2.0 * x).cos() + 0.3 * (4.0 * x + 1.0).sin());
    let sizes = [0.01, 0.005, 0.0025];
    let mut errors = Vec::new();
    for &a in &sizes {
        let h = shape.scale(a / c1);
        let oracle = dtn_elliptic_oracle(&h, &psi, &OracleConfig::default())?;
        let series = dtn_apply(&h, &psi, 3)?;
        errors.push(sobolev_norm(&series.sub(&oracle)?, 0.0) / sobolev_norm(&oracle, 0.0));
    }
    let slope = log_log_fit(&sizes, &errors)?.slope;
    let v = Verdict::combine([
        at_most(errors[0], ORACLE_TOLERANCE),
        if slope >= ORACLE_EXPONENT {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
    ]);
    Ok(measured(
        v,
        errors[0],
        format!("≤ {ORACLE_TOLERANCE:e}, exponent ≥ {ORACLE_EXPONENT}"),
    )
    .with("exponent", slope))
}

fn bench(cfg: &ExperimentConfig) -> CheckResult {
    let grid = PeriodicGrid::new(64, 2.0 * PI).expect("valid grid");
    let mut b = BenchConfig::new(grid, SpectralEnvelope { peak: 5.0, width: 2.0 });
    b.samples = if cfg.smoke { 20 } else { 100 };
    b.seed = cfg.seed;
    let report = inequality_bench(&b)?;
    let worst = report
        .bounds
        .iter()
        .map(|l| if l.median > 0.0 { l.max / l.median } else { 0.0 })
        .fold(0.0, f64::max);
    let v = if report.all_stable() {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    let mut m = measured(v, worst, "max/median ratio ≤ 3 for every bound");
    for l in &report.bounds {
        m = m.with(&format!("{}_median", l.name), l.median);
    }
    Ok(m)
}

pub const SCALING_TOLERANCE: f64 = 0.1;

fn scaling() -> CheckResult {
    let base = random_state(7, 0.05);
    let lams = [1.0, 0.5, 0.25];
    let (mut n2, mut n3) = (vec![], vec![]);
    for &l in &lams {
        let s = split_nonlinearity(&base.scaled(l), 3)?;
        n2.push(l2_quadrature(&s.n2));
        n3.push(l2_quadrature(&s.n3));
    }
    let p2 = log_log_fit(&lams, &n2)?.slope;
    let p3 = log_log_fit(&lams, &n3)?.slope;
    let v = Verdict::combine([within(p2, 2.0, SCALING_TOLERANCE), within(p3, 3.0, SCALING_TOLERANCE)]);
    Ok(measured(
        v,
        p2,
        format!("N2 exponent 2 ± {SCALING_TOLERANCE}, N3 exponent 3 ± {SCALING_TOLERANCE}"),
    )
    .with("n3_exponent", p3))
}

pub const SYMBOL_TOLERANCE: f64 = 1e-10;

fn symbols() -> CheckResult {
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        let st = random_state(200 + i, 0.05);
        let pairs = quadratic_pairs(&st)?;
        let mut sum = pairs[0].clone();
        for p in &pairs[1..] {
            sum = sum.add(p)?;
        }
        worst = worst.max(rel(&sum, &split_nonlinearity(&st, 3)?.n2));
    }
    Ok(measured(
        at_most(worst, SYMBOL_TOLERANCE),
        worst,
        format!("≤ {SYMBOL_TOLERANCE:e}"),
    ))
}

/// Minimum convergence order of the IBP residual under cadence halving.
pub const IBP_ORDER: f64 = 2.0;

fn ibp(cfg: &ExperimentConfig) -> CheckResult {
    let grid = PeriodicGrid::new(64, 20.0 * PI).expect("valid grid");
    let env = SpectralEnvelope { peak: 1.0, width: 0.3 };
    let init = make_initial_data(&grid, &env, 0.05, cfg.s, 1)?;
    let mut residuals = Vec::new();
    for n in [8, 16, 32] {
        let mut sim = SimulationConfig::new(&grid, 8.0);
        sim.dt = 0.0625;
        sim.snapshots = n;
        let (traj, _) = simulate(&init, &sim, |_, _| {})?;
        residuals.push(ibp_identity_residual(&traj, 3)?.residual);
    }
    let order = residuals
        .windows(2)
        .map(|w| (w[0] / w[1]).log2())
        .fold(f64::INFINITY, f64::min);
    let v = if order >= IBP_ORDER {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(measured(v, order, format!("order ≥ {IBP_ORDER}"))
        .with("residual_8", residuals[0])
        .with("residual_16", residuals[1])
        .with("residual_32", residuals[2]))
}

pub const DECAY_SECONDS: f64 = 120.0;

fn decay(cfg: &ExperimentConfig) -> CheckResult {
    let clock = Instant::now();
    let (fit, v) = dispersion::decay(cfg)?;
    let seconds = clock.elapsed().as_secs_f64();
    Ok(measured(
        Verdict::combine([v, at_most(seconds, DECAY_SECONDS)]),
        fit.slope(),
        format!(
            "{} ± {} within {DECAY_SECONDS} s",
            dispersion::DECAY_TARGET,
            dispersion::EXPONENT_TOLERANCE
        ),
    )
    .with("ci_low", fit.fit.ci95.0)
    .with("ci_high", fit.fit.ci95.1))
}

fn frequency(cfg: &ExperimentConfig) -> CheckResult {
    let (f, v) = dispersion::frequency(cfg)?;
    let change = f.values.iter().map(|v| v.quadrature_change).fold(0.0, f64::max);
    Ok(measured(
        v,
        f.fit.slope,
        format!("{} ± {}", dispersion::FREQUENCY_TARGET, dispersion::EXPONENT_TOLERANCE),
    )
    .with("quadrature_change", change))
}

fn period(cfg: &ExperimentConfig) -> CheckResult {
    let (p, v) = dispersion::period(cfg)?;
    Ok(measured(
        v,
        p.fit.slope,
        format!("{} ± {}", dispersion::PERIOD_TARGET, dispersion::EXPONENT_TOLERANCE),
    )
    .with("ci_low", p.fit.ci95.0)
    .with("ci_high", p.fit.ci95.1))
}

pub const DRIFT_EPSILONS: [f64; 3] = [0.02, 0.04, 0.08];
pub const DRIFT_EXPONENT: f64 = 1.5;
pub const DRIFT_SEEDS: u64 = 2;

fn drift(cfg: &ExperimentConfig) -> CheckResult {
    let (grid, env, horizon) = dynamics_problem(cfg);
    let sim = dynamics_config(cfg, &grid, horizon);
    let mut runs = Vec::new();
    for &eps in &DRIFT_EPSILONS {
        for i in 0..DRIFT_SEEDS {
            let init = make_initial_data(&grid, &env, eps, cfg.s, run_seed(cfg.seed, i))?;
            let (_, rec) = simulate(&init, &sim, |_, _| {})?;
            runs.push(DriftRun {
                epsilon: eps,
                times: rec.diagnostics.iter().map(|d| d.time).collect(),
                sobolev_energy: rec.diagnostics.iter().map(|d| d.sobolev_energy).collect(),
            });
        }
    }
    let report = quartic_drift_check(&runs)?;
    let v = match report.exponent() {
        _ if report.inconclusive => Verdict::Inconclusive,
        Some(p) if p >= DRIFT_EXPONENT => Verdict::Pass,
        Some(_) => Verdict::Fail,
        None => Verdict::Inconclusive,
    };
    let mut m = measured(v, report.exponent().unwrap_or(f64::NAN), format!("≥ {DRIFT_EXPONENT}"));
    for (e, r) in report.epsilons.iter().zip(&report.rates) {
        m = m.with(&format!("rate_{e}"), *r);
    }
    Ok(m)
}
