//! Measured constants for the DtN bounds over random small states.
//!
//! `B` and `V` enter the norms through their dealiased parts so that every
//! field measured shares the spectral support of the evolution.

use serde::{Deserialize, Serialize};

use super::{dtn_series, WaveState, DEFAULT_ORDER};
use crate::ensemble::{random_real_field, stream, SpectralEnvelope};
use crate::error::{LabError, Result};
use crate::fit::median;
use crate::spectral::{besov_norm, sobolev_norm, PeriodicGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub grid: PeriodicGrid,
    pub envelope: SpectralEnvelope,
    pub samples: usize,
    /// `‖h‖_{H^s}` of every sample.
    pub epsilon: f64,
    pub s: f64,
    pub gamma: f64,
    pub mu: f64,
    pub order: usize,
    pub seed: u64,
    /// Multiplies every `ψ`; ratios do not depend on it.
    pub psi_scale: f64,
}

impl BenchConfig {
    pub fn new(grid: PeriodicGrid, envelope: SpectralEnvelope) -> Self {
        Self {
            grid,
            envelope,
            samples: 100,
            epsilon: 0.01,
            s: 18.0,
            gamma: 3.5,
            mu: 18.0,
            order: DEFAULT_ORDER,
            seed: 0,
            psi_scale: 1.0,
        }
    }
}

/// Distribution of one ratio `LHS/RHS` over the ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioStats {
    pub name: String,
    pub min: f64,
    pub median: f64,
    pub max: f64,
    pub ratios: Vec<f64>,
    /// `max ≤ 3 · median` and every ratio finite.
    pub stable: bool,
}

impl RatioStats {
    fn from_ratios(name: &str, ratios: Vec<f64>) -> Self {
        let finite = ratios.iter().all(|r| r.is_finite());
        let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let max = ratios.iter().copied().fold(0.0, f64::max);
        let med = median(&ratios);
        Self {
            name: name.to_string(),
            min,
            median: med,
            max,
            stable: finite && max <= 3.0 * med,
            ratios,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub bounds: Vec<RatioStats>,
}

impl BenchReport {
    pub fn all_stable(&self) -> bool {
        self.bounds.iter().all(|l| l.stable)
    }

    pub fn bound(&self, name: &str) -> Option<&RatioStats> {
        self.bounds.iter().find(|l| l.name == name)
    }
}

/// `0/0 = 0`: the bound is trivially saturated-free when both sides vanish.
fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

/// Ratios for one state, in the order Hölder, Sobolev, Hölder remainder, Sobolev remainder.
pub(crate) fn state_ratios(state: &WaveState, cfg: &BenchConfig) -> Result<[f64; 4]> {
    let r = dtn_series(state, cfg.order)?;
    let (s, g, mu) = (cfg.s, cfg.gamma, cfg.mu);
    let h = state.h();
    let psi = state.psi();
    let b = r.b.dealias();
    let v = r.v.dealias();
    let lam = psi.half_grad();
    let db = r.b_excess.dealias();
    let dv = r.v_excess.dealias();

    let cr = ratio(
        besov_norm(&r.g, g - 1.0) + besov_norm(&b, g - 1.0) + besov_norm(&v, g - 1.0),
        besov_norm(&lam, g - 0.5),
    );
    let hs = ratio(
        sobolev_norm(&r.g, s - 1.0) + sobolev_norm(&b, s - 1.0) + sobolev_norm(&v, s - 1.0),
        sobolev_norm(&lam, s - 0.5),
    );
    let cr2 = ratio(
        besov_norm(&r.g_excess, g - 1.0) + besov_norm(&db, g - 1.0) + besov_norm(&dv, g - 1.0),
        besov_norm(h, g) * besov_norm(&lam, g + 0.5),
    );
    let h_s = sobolev_norm(h, s);
    let h_g = besov_norm(h, g);
    let lam_cr = besov_norm(&lam, g - 0.5);
    let hs2_g = ratio(
        sobolev_norm(&r.g_excess, mu - 1.0),
        lam_cr * h_s + h_g * sobolev_norm(&lam, mu - 1.5),
    );
    let hs2_b = ratio(
        sobolev_norm(&db, mu - 1.0),
        lam_cr * h_s + h_g * sobolev_norm(&lam, mu - 0.5),
    );
    Ok([cr, hs, cr2, hs2_g.max(hs2_b)])
}

/// Draws `samples` states with `‖h‖_{H^s} = ε` and
/// `‖Λψ‖_{H^{s−1/2}} = psi_scale`, independent random phases, and reports
/// the distribution of each bound's ratio.
pub fn inequality_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.envelope.validate(&cfg.grid)?;
    if cfg.samples == 0 {
        return Err(LabError::rejected("bench needs at least one sample"));
    }
    if !(cfg.epsilon >= 0.0 && cfg.psi_scale > 0.0) {
        return Err(LabError::rejected("bench needs ε ≥ 0 and a positive ψ scale"));
    }
    let mut columns: [Vec<f64>; 4] = Default::default();
    for i in 0..cfg.samples {
        let mut rng = stream(cfg.seed, i as u64);
        let h0 = random_real_field(&cfg.grid, &cfg.envelope, &mut rng);
        let p0 = random_real_field(&cfg.grid, &cfg.envelope, &mut rng);
        let h = h0.scale(cfg.epsilon / sobolev_norm(&h0, cfg.s));
        let psi = p0.scale(cfg.psi_scale / sobolev_norm(&p0.half_grad(), cfg.s - 0.5));
        let state = WaveState::new(h, psi, 0.0)?;
        for (col, r) in columns.iter_mut().zip(state_ratios(&state, cfg)?) {
            col.push(r);
        }
    }
    let names = ["holder", "sobolev", "holder_remainder", "sobolev_remainder"];
    Ok(BenchReport {
        config: *cfg,
        bounds: names
            .iter()
            .zip(columns)
            .map(|(n, c)| RatioStats::from_ratios(n, c))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn cfg() -> BenchConfig {
        let grid = PeriodicGrid::new(64, 2.0 * PI).unwrap();
        let mut c = BenchConfig::new(grid, SpectralEnvelope { peak: 5.0, width: 2.0 });
        c.samples = 12;
        c
    }

    #[test]
    fn flat_states_have_zero_second_order_ratios() {
        let mut c = cfg();
        c.epsilon = 0.0;
        let report = inequality_bench(&c).unwrap();
        assert_eq!(report.bound("holder_remainder").unwrap().max, 0.0);
        assert_eq!(report.bound("sobolev_remainder").unwrap().max, 0.0);
    }

    #[test]
    fn ratios_are_homogeneous_in_psi() {
        let a = inequality_bench(&cfg()).unwrap();
        let mut c = cfg();
        c.psi_scale = 10.0;
        let b = inequality_bench(&c).unwrap();
        for (la, lb) in a.bounds.iter().zip(&b.bounds) {
            for (x, y) in la.ratios.iter().zip(&lb.ratios) {
                assert!((x - y).abs() <= 1e-12 * x.abs(), "{}: {x} vs {y}", la.name);
            }
        }
    }

    #[test]
    fn small_ensemble_is_stable() {
        let report = inequality_bench(&cfg()).unwrap();
        assert!(report.all_stable(), "{report:?}");
    }
}
