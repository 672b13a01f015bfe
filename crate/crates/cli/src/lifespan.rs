//! Lifespan proxy runs and their sweeps in `ε` and `R`.
//!
//! `T_num` is the first time `E_s(t) ≥ lifespan_ratio · E_s(0)`, linearly
//! interpolated between samples taken every `sample_interval`. Runs continue to the ceiling
//! `ceiling_ratio · E_s(0)` so that crossing is recorded as well. A run
//! that reaches its horizon without crossing is censored: its `T_num` is
//! the horizon and only a lower bound.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use wavelab::diagnostics::{DiagnosticParams, DiagnosticsRecord};
use wavelab::ensemble::run_seed;
use wavelab::evolution::{make_initial_data, simulate, RunRecord, SimulationConfig};
use wavelab::fit::{bootstrap_log_log_slope, log_log_fit, median, LineFit};
use wavelab::spectral::PeriodicGrid;

use crate::config::{ExperimentConfig, Horizon};
use crate::Verdict;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lifespan {
    pub t_num: f64,
    pub censored: bool,
    /// First crossing of the ceiling ratio, if any.
    pub t_ceiling: Option<f64>,
}

fn first_crossing(records: &[DiagnosticsRecord], level: f64) -> Option<f64> {
    let i = records.iter().position(|r| r.sobolev_energy >= level)?;
    if i == 0 {
        return Some(records[0].time);
    }
    let (a, b) = (&records[i - 1], &records[i]);
    let w = (level - a.sobolev_energy) / (b.sobolev_energy - a.sobolev_energy);
    Some(a.time + w * (b.time - a.time))
}

/// Reads the proxy off a finished run. A halt that is not a threshold
/// crossing (steepness guard, non-finite state) counts as the lifespan.
pub fn lifespan(record: &RunRecord, ratio: f64, ceiling: f64, horizon: f64) -> Lifespan {
    let recs = &record.diagnostics;
    let e0 = recs.first().map_or(0.0, |r| r.sobolev_energy);
    let cross = |level: f64| {
        if e0 > 0.0 {
            first_crossing(recs, level * e0)
        } else {
            None
        }
    };
    let t_ceiling = cross(ceiling);
    match (cross(ratio), record.halt.is_blowup()) {
        (Some(t), _) => Lifespan {
            t_num: t,
            censored: false,
            t_ceiling,
        },
        (None, true) => Lifespan {
            t_num: record.halt.time().unwrap_or(horizon),
            censored: false,
            t_ceiling,
        },
        (None, false) => Lifespan {
            t_num: horizon,
            censored: true,
            t_ceiling,
        },
    }
}

/// One evolution with its proxy and timing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub epsilon: f64,
    pub circumference: f64,
    pub modes: usize,
    pub run_index: usize,
    pub seed: u64,
    pub horizon: f64,
    pub record: RunRecord,
    pub lifespan: Lifespan,
    pub wall_seconds: f64,
}

pub fn simulation_config(cfg: &ExperimentConfig, grid: &PeriodicGrid, horizon: f64) -> SimulationConfig {
    let mut sim = SimulationConfig::new(grid, horizon);
    sim.dt = cfg.dt;
    sim.order = cfg.order;
    sim.snapshots = ((horizon / cfg.sample_interval).ceil() as usize).max(1);
    sim.growth_limit = cfg.ceiling_ratio;
    sim.diagnostics = DiagnosticParams {
        s: cfg.s,
        rho: cfg.rho,
        ..DiagnosticParams::default()
    };
    sim
}

/// Runs ensemble member `run_index` at amplitude `epsilon`. The initial
/// data depends only on `(seed, run_index)`, so every sweep point sees
/// the same random shapes.
pub fn run_one(
    cfg: &ExperimentConfig,
    grid: &PeriodicGrid,
    epsilon: f64,
    run_index: usize,
    horizon: f64,
) -> wavelab::Result<RunOutcome> {
    let clock = Instant::now();
    let seed = run_seed(cfg.seed, run_index as u64);
    let initial = make_initial_data(grid, &cfg.envelope(), epsilon, cfg.s, seed)?;
    let (_, record) = simulate(&initial, &simulation_config(cfg, grid, horizon), |_, _| {})?;
    let lifespan = lifespan(&record, cfg.lifespan_ratio, cfg.ceiling_ratio, horizon);
    Ok(RunOutcome {
        epsilon,
        circumference: grid.circumference(),
        modes: grid.len(),
        run_index,
        seed,
        horizon,
        record,
        lifespan,
        wall_seconds: clock.elapsed().as_secs_f64(),
    })
}

fn run_ensemble(
    cfg: &ExperimentConfig,
    grid: &PeriodicGrid,
    epsilon: f64,
    horizon: f64,
) -> wavelab::Result<Vec<RunOutcome>> {
    (0..cfg.seeds)
        .into_par_iter()
        .map(|i| run_one(cfg, grid, epsilon, i, horizon))
        .collect()
}

/// Fixed horizon, or the cap for `auto`.
fn base_horizon(cfg: &ExperimentConfig) -> f64 {
    match cfg.horizon {
        Horizon::Fixed(t) => t,
        Horizon::Auto => cfg.horizon_cap,
    }
}

pub fn run_simulate(cfg: &ExperimentConfig) -> wavelab::Result<Vec<RunOutcome>> {
    let grid = cfg
        .grid()
        .map_err(|e| wavelab::LabError::RejectedInput(e.to_string()))?;
    run_ensemble(cfg, &grid, cfg.epsilon, base_horizon(cfg))
}

/// Replicates at one sweep value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// `ε` or `R`.
    pub value: f64,
    pub horizon: f64,
    pub t_num: Vec<f64>,
    pub censored: Vec<bool>,
    pub median: f64,
    /// At least half the replicates are censored, so the median is only a
    /// lower bound.
    pub median_censored: bool,
}

impl SweepPoint {
    fn from_runs(value: f64, horizon: f64, runs: &[RunOutcome]) -> Self {
        let t_num: Vec<f64> = runs.iter().map(|r| r.lifespan.t_num).collect();
        let censored: Vec<bool> = runs.iter().map(|r| r.lifespan.censored).collect();
        let n_cens = censored.iter().filter(|c| **c).count();
        Self {
            value,
            horizon,
            median: median(&t_num),
            median_censored: 2 * n_cens >= t_num.len(),
            t_num,
            censored,
        }
    }
}

/// `T_num(to) / T_num(from)` against the required factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioCheck {
    pub from: f64,
    pub to: f64,
    pub ratio: f64,
    pub required: f64,
    pub verdict: Verdict,
}

/// Compares medians. A censored numerator only bounds the ratio from
/// below, so it can pass but not fail; a censored denominator makes the
/// comparison inconclusive.
fn ratio_check(a: &SweepPoint, b: &SweepPoint, required: f64) -> RatioCheck {
    let ratio = if a.median > 0.0 { b.median / a.median } else { f64::NAN };
    let verdict = if a.median_censored || !ratio.is_finite() {
        Verdict::Inconclusive
    } else if ratio >= required {
        Verdict::Pass
    } else if b.median_censored {
        Verdict::Inconclusive
    } else {
        Verdict::Fail
    };
    RatioCheck {
        from: a.value,
        to: b.value,
        ratio,
        required,
        verdict,
    }
}

/// Log-log fit of medians and a bootstrap interval over replicates.
fn fit_points(points: &[SweepPoint], resamples: usize, seed: u64) -> (Option<LineFit>, Option<(f64, f64)>) {
    if points.len() < 2 || points.iter().any(|p| !(p.median > 0.0)) {
        return (None, None);
    }
    let x: Vec<f64> = points.iter().map(|p| p.value).collect();
    let y: Vec<f64> = points.iter().map(|p| p.median).collect();
    let groups: Vec<Vec<f64>> = points.iter().map(|p| p.t_num.clone()).collect();
    (
        log_log_fit(&x, &y).ok(),
        bootstrap_log_log_slope(&x, &groups, resamples, seed).ok(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSweep {
    /// In decreasing `ε`.
    pub points: Vec<SweepPoint>,
    /// `T_num(ε_next) ≥ (ε/ε_next)² T_num(ε)` for consecutive points.
    pub ratios: Vec<RatioCheck>,
    pub fit: Option<LineFit>,
    pub slope_ci95: Option<(f64, f64)>,
    /// Some median is a lower bound; a fitted slope is then an upper bound
    /// on the true one when only the small-`ε` end is censored.
    pub censored: bool,
    /// Slope `≤ −2` and every ratio check.
    pub verdict: Verdict,
    #[serde(skip)]
    pub runs: Vec<RunOutcome>,
}

/// Horizon for the next, smaller `ε`: four times what quadratic growth of
/// the previous median predicts, within the cap. Lifespans that grow
/// faster than `ε⁻²` then still cross instead of being censored.
pub fn auto_horizon(cfg: &ExperimentConfig, previous: Option<&SweepPoint>, epsilon: f64) -> f64 {
    match (cfg.horizon, previous) {
        (Horizon::Fixed(t), _) => t,
        (Horizon::Auto, None) => cfg.horizon_cap,
        (Horizon::Auto, Some(p)) if p.median_censored => cfg.horizon_cap,
        (Horizon::Auto, Some(p)) => {
            let need = 4.0 * (p.value / epsilon).powi(2) * p.median;
            need.max(10.0 * cfg.dt).min(cfg.horizon_cap)
        }
    }
}

pub fn sweep_epsilon(cfg: &ExperimentConfig) -> wavelab::Result<EpsilonSweep> {
    let grid = cfg
        .grid()
        .map_err(|e| wavelab::LabError::RejectedInput(e.to_string()))?;
    let mut eps = cfg.epsilons.clone();
    eps.sort_by(|a, b| b.total_cmp(a));
    let mut points: Vec<SweepPoint> = Vec::new();
    let mut runs = Vec::new();
    for &e in &eps {
        let horizon = auto_horizon(cfg, points.last(), e);
        let ens = run_ensemble(cfg, &grid, e, horizon)?;
        points.push(SweepPoint::from_runs(e, horizon, &ens));
        runs.extend(ens);
    }
    let ratios: Vec<RatioCheck> = points
        .windows(2)
        .map(|w| ratio_check(&w[0], &w[1], (w[0].value / w[1].value).powi(2)))
        .collect();
    let (fit, slope_ci95) = fit_points(&points, cfg.bootstrap, cfg.seed);
    let censored = points.iter().any(|p| p.median_censored);
    let slope_verdict = match fit {
        None => Verdict::Inconclusive,
        Some(f) if f.slope <= -2.0 => Verdict::Pass,
        // Censoring at small ε flattens the fit, so a shallow slope is
        // not evidence against quadratic growth.
        Some(_) if censored => Verdict::Inconclusive,
        Some(_) => Verdict::Fail,
    };
    let verdict = Verdict::combine(ratios.iter().map(|r| r.verdict).chain([slope_verdict]));
    Ok(EpsilonSweep {
        points,
        ratios,
        fit,
        slope_ci95,
        censored,
        verdict,
        runs,
    })
}

/// Position of `R` relative to the powers of `ε` that separate regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `R ≤ ε^{−2}`.
    Short,
    /// `ε^{−2} < R ≤ ε^{−4}`.
    Middle,
    /// `R > ε^{−4}`.
    Euclidean,
}

impl Regime {
    pub fn of(circumference: f64, epsilon: f64) -> Self {
        if circumference <= epsilon.powi(-2) {
            Regime::Short
        } else if circumference <= epsilon.powi(-4) {
            Regime::Middle
        } else {
            Regime::Euclidean
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodSweep {
    pub epsilon: f64,
    /// In increasing `R`.
    pub points: Vec<SweepPoint>,
    pub regimes: Vec<Regime>,
    /// `T_num(R₂) ≥ 0.9 T_num(R₁)` for consecutive points.
    pub monotone: Vec<RatioCheck>,
    pub fit: Option<LineFit>,
    pub exponent_ci95: Option<(f64, f64)>,
    /// Exponent the square-root law predicts.
    pub predicted_exponent: f64,
    /// Fitted exponent `≥ 0` and every monotonicity check.
    pub verdict: Verdict,
    #[serde(skip)]
    pub runs: Vec<RunOutcome>,
}

pub fn sweep_period(cfg: &ExperimentConfig) -> wavelab::Result<PeriodSweep> {
    let mut rs = cfg.circumferences.clone();
    rs.sort_by(f64::total_cmp);
    let horizon = base_horizon(cfg);
    let mut points = Vec::new();
    let mut runs = Vec::new();
    for &r in &rs {
        let grid = cfg
            .grid_for(r)
            .map_err(|e| wavelab::LabError::RejectedInput(e.to_string()))?;
        let ens = run_ensemble(cfg, &grid, cfg.epsilon, horizon)?;
        points.push(SweepPoint::from_runs(r, horizon, &ens));
        runs.extend(ens);
    }
    let monotone: Vec<RatioCheck> = points.windows(2).map(|w| ratio_check(&w[0], &w[1], 0.9)).collect();
    let (fit, exponent_ci95) = fit_points(&points, cfg.bootstrap, cfg.seed);
    let exponent_verdict = match fit {
        None if points.len() < 2 => Verdict::Pass,
        None => Verdict::Inconclusive,
        Some(f) if f.slope >= 0.0 => Verdict::Pass,
        Some(_) if points.iter().any(|p| p.median_censored) => Verdict::Inconclusive,
        Some(_) => Verdict::Fail,
    };
    Ok(PeriodSweep {
        epsilon: cfg.epsilon,
        regimes: rs.iter().map(|&r| Regime::of(r, cfg.epsilon)).collect(),
        verdict: Verdict::combine(monotone.iter().map(|m| m.verdict).chain([exponent_verdict])),
        points,
        monotone,
        fit,
        exponent_ci95,
        predicted_exponent: 0.5,
        runs,
    })
}

#[cfg(test)]
mod tests {
    use wavelab::evolution::Halt;

    use super::*;

    fn record(trace: &[(f64, f64)], halt: Halt) -> RunRecord {
        RunRecord {
            diagnostics: trace
                .iter()
                .map(|&(time, e)| DiagnosticsRecord {
                    time,
                    energy: 0.0,
                    sobolev_energy: e,
                    besov_rho: 0.0,
                    u_sobolev: 0.0,
                    g_partial: 0.0,
                })
                .collect(),
            halt,
            steps: trace.len(),
        }
    }

    #[test]
    fn crossing_is_interpolated() {
        let r = record(
            &[(0.0, 1.0), (1.0, 1.5), (2.0, 2.5), (3.0, 11.0)],
            Halt::Growth { time: 3.0, ratio: 11.0 },
        );
        let l = lifespan(&r, 2.0, 10.0, 5.0);
        assert!((l.t_num - 1.5).abs() < 1e-15);
        assert!(!l.censored);
        assert!((l.t_ceiling.unwrap() - (2.0 + 7.5 / 8.5)).abs() < 1e-14);
    }

    #[test]
    fn quiet_run_is_censored_at_horizon() {
        let r = record(&[(0.0, 1.0), (4.0, 1.2)], Halt::Horizon);
        assert_eq!(
            lifespan(&r, 2.0, 10.0, 4.0),
            Lifespan {
                t_num: 4.0,
                censored: true,
                t_ceiling: None
            }
        );
    }

    #[test]
    fn guard_halt_counts_as_lifespan() {
        let r = record(
            &[(0.0, 1.0), (4.0, 1.2)],
            Halt::Steepness {
                time: 4.5,
                steepness: 0.6,
            },
        );
        let l = lifespan(&r, 2.0, 10.0, 9.0);
        assert_eq!((l.t_num, l.censored), (4.5, false));
    }

    #[test]
    fn zero_data_never_crosses() {
        let r = record(&[(0.0, 0.0), (1.0, 0.0)], Halt::Horizon);
        assert!(lifespan(&r, 2.0, 10.0, 1.0).censored);
    }

    fn point(value: f64, t: &[f64], censored: &[bool]) -> SweepPoint {
        let n = censored.iter().filter(|c| **c).count();
        SweepPoint {
            value,
            horizon: 100.0,
            t_num: t.to_vec(),
            censored: censored.to_vec(),
            median: median(t),
            median_censored: 2 * n >= t.len(),
        }
    }

    #[test]
    fn censored_numerator_passes_but_never_fails() {
        let a = point(16.0, &[10.0, 12.0], &[false, false]);
        let hi = point(8.0, &[100.0, 100.0], &[true, true]);
        let lo = point(8.0, &[20.0, 20.0], &[true, true]);
        assert_eq!(ratio_check(&a, &hi, 4.0).verdict, Verdict::Pass);
        assert_eq!(ratio_check(&a, &lo, 4.0).verdict, Verdict::Inconclusive);
        let short = point(8.0, &[20.0, 20.0], &[false, false]);
        assert_eq!(ratio_check(&a, &short, 4.0).verdict, Verdict::Fail);
        assert_eq!(ratio_check(&lo, &a, 0.9).verdict, Verdict::Inconclusive);
    }

    #[test]
    fn auto_horizon_scales_quadratically() {
        let cfg = ExperimentConfig::default();
        assert_eq!(auto_horizon(&cfg, None, 32.0), cfg.horizon_cap);
        let p = point(16.0, &[80.0, 120.0], &[false, false]);
        assert!((auto_horizon(&cfg, Some(&p), 8.0) - 1600.0).abs() < 1e-9);
        let big = point(16.0, &[4000.0, 4000.0], &[false, false]);
        assert_eq!(auto_horizon(&cfg, Some(&big), 8.0), cfg.horizon_cap);
    }

    #[test]
    fn regimes_follow_powers_of_epsilon() {
        assert_eq!(Regime::of(50.0, 0.1), Regime::Short);
        assert_eq!(Regime::of(500.0, 0.1), Regime::Middle);
        assert_eq!(Regime::of(50_000.0, 0.1), Regime::Euclidean);
    }
}
