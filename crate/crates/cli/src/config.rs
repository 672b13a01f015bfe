//! Flat `key = value` experiment configuration.
//!
//! One experiment per file. Blank lines and `#` comments are ignored, lists
//! are comma separated, and every key is optional. Unknown or repeated keys
//! are rejected so that typos do not silently fall back to defaults.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use wavelab::ensemble::SpectralEnvelope;
use wavelab::spectral::PeriodicGrid;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("unknown key `{0}`")]
    UnknownKey(String),

    #[error("key `{key}`: {message}")]
    Invalid { key: String, message: String },

    /// A parameter chain required by the estimates does not hold.
    #[error("constraint {constraint} violated: {detail}")]
    Constraint { constraint: &'static str, detail: String },
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Simulate,
    SweepEpsilon,
    SweepPeriod,
    Strichartz,
    Validate,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::SweepEpsilon => "sweep-epsilon",
            ExperimentKind::SweepPeriod => "sweep-period",
            ExperimentKind::Strichartz => "strichartz",
            ExperimentKind::Validate => "validate",
        }
    }

    fn is_lifespan(self) -> bool {
        matches!(
            self,
            ExperimentKind::Simulate | ExperimentKind::SweepEpsilon | ExperimentKind::SweepPeriod
        )
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        [
            ExperimentKind::Simulate,
            ExperimentKind::SweepEpsilon,
            ExperimentKind::SweepPeriod,
            ExperimentKind::Strichartz,
            ExperimentKind::Validate,
        ]
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    Fixed(f64),
    /// Chosen per sweep point from the previous point's lifespans; a
    /// single simulation runs to `horizon_cap`.
    Auto,
}

/// Validation checks, in the order they run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Energy,
    Split,
    CrossForm,
    DtnOracle,
    Bench,
    Scaling,
    Symbols,
    Ibp,
    Decay,
    Frequency,
    Period,
    Drift,
}

impl CheckKind {
    pub const ALL: [CheckKind; 12] = [
        CheckKind::Energy,
        CheckKind::Split,
        CheckKind::CrossForm,
        CheckKind::DtnOracle,
        CheckKind::Bench,
        CheckKind::Scaling,
        CheckKind::Symbols,
        CheckKind::Ibp,
        CheckKind::Decay,
        CheckKind::Frequency,
        CheckKind::Period,
        CheckKind::Drift,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Energy => "energy",
            CheckKind::Split => "split",
            CheckKind::CrossForm => "cross_form",
            CheckKind::DtnOracle => "dtn_oracle",
            CheckKind::Bench => "bench",
            CheckKind::Scaling => "scaling",
            CheckKind::Symbols => "symbols",
            CheckKind::Ibp => "ibp",
            CheckKind::Decay => "decay",
            CheckKind::Frequency => "frequency",
            CheckKind::Period => "period",
            CheckKind::Drift => "drift",
        }
    }
}

impl FromStr for CheckKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        CheckKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown check `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// When set, must agree with the subcommand.
    pub experiment: Option<ExperimentKind>,

    pub modes: usize,
    pub circumference: f64,

    pub s: f64,
    pub rho: f64,
    pub gamma: f64,

    /// Amplitude `E_s(0)` of a single simulation.
    pub epsilon: f64,
    pub epsilons: Vec<f64>,
    /// Circumferences of the period sweep; the mode count scales with `R`
    /// so the grid spacing stays that of `modes`/`circumference`.
    pub circumferences: Vec<f64>,
    pub seed: u64,
    /// Replicates per sweep point.
    pub seeds: usize,
    pub horizon: Horizon,
    /// Upper limit for automatic horizons.
    pub horizon_cap: f64,
    pub dt: f64,
    /// Time between diagnostic samples, independent of the horizon so
    /// that crossing times resolve the same way in every run.
    pub sample_interval: f64,
    pub order: usize,
    pub peak: f64,
    pub width: f64,
    /// `T_num` is the first time `E_s(t) ≥ lifespan_ratio · E_s(0)`.
    pub lifespan_ratio: f64,
    /// Runs halt once `E_s(t) > ceiling_ratio · E_s(0)`.
    pub ceiling_ratio: f64,
    pub bootstrap: usize,

    pub oversample: usize,
    pub blocks: Vec<i32>,
    pub strichartz_horizon: f64,
    pub strichartz_circumference: f64,
    pub strichartz_points: usize,
    pub decay_block: i32,
    pub decay_circumference: f64,
    pub decay_window: (f64, f64),
    pub decay_samples: usize,
    pub period_block: i32,
    pub period_circumference: f64,
    /// Horizons in units of the period circumference.
    pub period_horizons: Vec<f64>,
    pub period_dt: f64,
    pub wrap_block: i32,
    pub wrap_circumference: f64,
    pub wrap_dt: f64,

    pub checks: Vec<CheckKind>,
    /// Reduced validation problems sized for a quick end-to-end pass.
    pub smoke: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            modes: 512,
            circumference: 640.0,
            s: 18.0,
            rho: 14.25,
            gamma: 15.25,
            epsilon: 16.0,
            epsilons: vec![32.0, 16.0, 8.0],
            circumferences: vec![320.0, 640.0, 1280.0],
            seed: 0,
            seeds: 4,
            horizon: Horizon::Auto,
            horizon_cap: 8000.0,
            dt: 0.5,
            sample_interval: 2.0,
            order: 3,
            peak: 0.2,
            width: 0.04,
            lifespan_ratio: 2.0,
            ceiling_ratio: 10.0,
            bootstrap: 1000,
            oversample: 4,
            blocks: (0..=6).collect(),
            strichartz_horizon: 1000.0,
            strichartz_circumference: 4000.0,
            strichartz_points: 600,
            decay_block: 0,
            decay_circumference: 4000.0,
            decay_window: (50.0, 800.0),
            decay_samples: 24,
            period_block: 2,
            period_circumference: 10.0,
            period_horizons: vec![16.0, 64.0, 256.0],
            period_dt: 0.02,
            wrap_block: 4,
            wrap_circumference: 500.0,
            wrap_dt: 0.5,
            checks: CheckKind::ALL.to_vec(),
            smoke: false,
        }
    }
}

fn parse_scalar<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .parse()
        .map_err(|_| invalid(key, format!("cannot parse `{value}`")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| parse_scalar(key, v))
        .collect()
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
}

impl ExperimentConfig {
    /// Small grids and short horizons for plumbing checks.
    pub fn smoke() -> Self {
        Self {
            modes: 64,
            circumference: 80.0,
            // The H^s weight at peak 1 is far larger than at the desk-scale
            // peak, so much larger amplitudes are needed to cross in time.
            epsilon: 4096.0,
            epsilons: vec![8192.0, 4096.0, 2048.0],
            circumferences: vec![80.0, 160.0, 320.0],
            seeds: 2,
            horizon_cap: 400.0,
            dt: 0.25,
            sample_interval: 1.0,
            peak: 1.0,
            width: 0.2,
            bootstrap: 200,
            blocks: (0..=4).collect(),
            strichartz_horizon: 250.0,
            strichartz_circumference: 1000.0,
            strichartz_points: 300,
            smoke: true,
            ..Self::default()
        }
    }

    pub fn from_file(path: &Path, base: Self) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        base.with_text(&text)
    }

    /// Applies the assignments in `text` on top of `self`.
    pub fn with_text(mut self, text: &str) -> Result<Self, ConfigError> {
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    message: format!("key `{key}` repeated"),
                });
            }
            self.set(key, value)?;
        }
        Ok(self)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "experiment" => self.experiment = Some(value.parse().map_err(|e: String| invalid(key, e))?),
            "modes" => self.modes = parse_scalar(key, value)?,
            "circumference" => self.circumference = parse_scalar(key, value)?,
            "s" => self.s = parse_scalar(key, value)?,
            "rho" => self.rho = parse_scalar(key, value)?,
            "gamma" => self.gamma = parse_scalar(key, value)?,
            "epsilon" => self.epsilon = parse_scalar(key, value)?,
            "epsilons" => self.epsilons = parse_list(key, value)?,
            "circumferences" => self.circumferences = parse_list(key, value)?,
            "seed" => self.seed = parse_scalar(key, value)?,
            "seeds" => self.seeds = parse_scalar(key, value)?,
            "horizon" => {
                self.horizon = if value == "auto" {
                    Horizon::Auto
                } else {
                    Horizon::Fixed(parse_scalar(key, value)?)
                }
            }
            "horizon_cap" => self.horizon_cap = parse_scalar(key, value)?,
            "dt" => self.dt = parse_scalar(key, value)?,
            "sample_interval" => self.sample_interval = parse_scalar(key, value)?,
            "order" => self.order = parse_scalar(key, value)?,
            "peak" => self.peak = parse_scalar(key, value)?,
            "width" => self.width = parse_scalar(key, value)?,
            "lifespan_ratio" => self.lifespan_ratio = parse_scalar(key, value)?,
            "ceiling_ratio" => self.ceiling_ratio = parse_scalar(key, value)?,
            "bootstrap" => self.bootstrap = parse_scalar(key, value)?,
            "oversample" => self.oversample = parse_scalar(key, value)?,
            "blocks" => self.blocks = parse_list(key, value)?,
            "strichartz_horizon" => self.strichartz_horizon = parse_scalar(key, value)?,
            "strichartz_circumference" => self.strichartz_circumference = parse_scalar(key, value)?,
            "strichartz_points" => self.strichartz_points = parse_scalar(key, value)?,
            "decay_block" => self.decay_block = parse_scalar(key, value)?,
            "decay_circumference" => self.decay_circumference = parse_scalar(key, value)?,
            "decay_window" => {
                let w: Vec<f64> = parse_list(key, value)?;
                let [a, b] = w[..] else {
                    return Err(invalid(key, "expected two times `t0, t1`"));
                };
                self.decay_window = (a, b);
            }
            "decay_samples" => self.decay_samples = parse_scalar(key, value)?,
            "period_block" => self.period_block = parse_scalar(key, value)?,
            "period_circumference" => self.period_circumference = parse_scalar(key, value)?,
            "period_horizons" => self.period_horizons = parse_list(key, value)?,
            "period_dt" => self.period_dt = parse_scalar(key, value)?,
            "wrap_block" => self.wrap_block = parse_scalar(key, value)?,
            "wrap_circumference" => self.wrap_circumference = parse_scalar(key, value)?,
            "wrap_dt" => self.wrap_dt = parse_scalar(key, value)?,
            "checks" => {
                self.checks = if value == "all" {
                    CheckKind::ALL.to_vec()
                } else {
                    value
                        .split(',')
                        .map(str::trim)
                        .filter(|v| !v.is_empty())
                        .map(|v| v.parse().map_err(|e: String| invalid(key, e)))
                        .collect::<Result<_, _>>()?
                }
            }
            "smoke" => self.smoke = parse_scalar(key, value)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<PeriodicGrid, ConfigError> {
        PeriodicGrid::new(self.modes, self.circumference).map_err(|e| invalid("modes", e.to_string()))
    }

    pub fn envelope(&self) -> SpectralEnvelope {
        SpectralEnvelope {
            peak: self.peak,
            width: self.width,
        }
    }

    /// Grid of the period sweep at circumference `r`.
    pub fn grid_for(&self, r: f64) -> Result<PeriodicGrid, ConfigError> {
        let n = self.modes as f64 * r / self.circumference;
        if (n - n.round()).abs() > 1e-9 * n.max(1.0) {
            return Err(invalid(
                "circumferences",
                format!("R = {r} gives a non-integer mode count {n} at the base spacing"),
            ));
        }
        PeriodicGrid::new(n.round() as usize, r).map_err(|e| invalid("circumferences", e.to_string()))
    }

    /// Checks everything `kind` needs. Lifespan experiments additionally
    /// require `s > ρ + 3.5 > 17.5`; `2γ` must never be an integer.
    pub fn validate(&self, kind: ExperimentKind) -> Result<(), ConfigError> {
        if let Some(k) = self.experiment {
            if k != kind {
                return Err(invalid(
                    "experiment",
                    format!("file is for `{}` but `{}` was requested", k.name(), kind.name()),
                ));
            }
        }
        let two_gamma = 2.0 * self.gamma;
        if !self.gamma.is_finite() || (two_gamma - two_gamma.round()).abs() < 1e-12 {
            return Err(ConfigError::Constraint {
                constraint: "2γ ∉ ℤ",
                detail: format!("γ = {}", self.gamma),
            });
        }
        if kind.is_lifespan() {
            if !(self.s > self.rho + 3.5) {
                return Err(ConfigError::Constraint {
                    constraint: "s > ρ + 3.5",
                    detail: format!("s = {}, ρ + 3.5 = {}", self.s, self.rho + 3.5),
                });
            }
            if !(self.rho + 3.5 > 17.5) {
                return Err(ConfigError::Constraint {
                    constraint: "ρ + 3.5 > 17.5",
                    detail: format!("ρ = {}", self.rho),
                });
            }
            self.validate_dynamics(kind)?;
        }
        match kind {
            ExperimentKind::Strichartz => self.validate_dispersion(),
            _ => Ok(()),
        }
    }

    fn validate_dynamics(&self, kind: ExperimentKind) -> Result<(), ConfigError> {
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(key, format!("must be positive, got {v}")))
            }
        };
        positive("dt", self.dt)?;
        positive("horizon_cap", self.horizon_cap)?;
        positive("sample_interval", self.sample_interval)?;
        if !(self.lifespan_ratio > 1.0 && self.ceiling_ratio >= self.lifespan_ratio) {
            return Err(invalid(
                "ceiling_ratio",
                format!(
                    "need 1 < lifespan_ratio ≤ ceiling_ratio, got {} and {}",
                    self.lifespan_ratio, self.ceiling_ratio
                ),
            ));
        }
        if let Horizon::Fixed(t) = self.horizon {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(invalid("horizon", format!("must be finite and ≥ 0, got {t}")));
            }
        }
        let grid = self.grid()?;
        let check_env = |g: &PeriodicGrid| self.envelope().validate(g).map_err(|e| invalid("width", e.to_string()));
        check_env(&grid)?;
        match kind {
            ExperimentKind::Simulate => {
                if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
                    return Err(invalid(
                        "epsilon",
                        format!("must be finite and ≥ 0, got {}", self.epsilon),
                    ));
                }
                if self.seeds == 0 {
                    return Err(invalid("seeds", "need at least one run"));
                }
            }
            ExperimentKind::SweepEpsilon => {
                if self.epsilons.len() < 3 {
                    return Err(invalid("epsilons", "an ε sweep needs at least three values"));
                }
                if self.epsilons.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
                    return Err(invalid("epsilons", "values must be positive"));
                }
                if self.seeds < 2 {
                    return Err(invalid("seeds", "an ε sweep needs at least two seeds per value"));
                }
            }
            ExperimentKind::SweepPeriod => {
                if self.circumferences.is_empty() {
                    return Err(invalid("circumferences", "need at least one circumference"));
                }
                positive("epsilon", self.epsilon)?;
                if self.seeds == 0 {
                    return Err(invalid("seeds", "need at least one run"));
                }
                for &r in &self.circumferences {
                    check_env(&self.grid_for(r)?)?;
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn validate_dispersion(&self) -> Result<(), ConfigError> {
        if self.blocks.len() < 2 {
            return Err(invalid("blocks", "a frequency fit needs at least two blocks"));
        }
        if self.period_horizons.len() < 2 {
            return Err(invalid("period_horizons", "a period fit needs at least two horizons"));
        }
        let (t0, t1) = self.decay_window;
        if !(t0 > 0.0 && t1 > t0) {
            return Err(invalid("decay_window", "need 0 < t0 < t1"));
        }
        Ok(())
    }

    /// Every key with its effective value, in the file format.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        if let Some(k) = self.experiment {
            put("experiment", k.name().to_string());
        }
        put("modes", self.modes.to_string());
        put("circumference", self.circumference.to_string());
        put("s", self.s.to_string());
        put("rho", self.rho.to_string());
        put("gamma", self.gamma.to_string());
        put("epsilon", self.epsilon.to_string());
        put("epsilons", join(&self.epsilons));
        put("circumferences", join(&self.circumferences));
        put("seed", self.seed.to_string());
        put("seeds", self.seeds.to_string());
        put(
            "horizon",
            match self.horizon {
                Horizon::Auto => "auto".to_string(),
                Horizon::Fixed(t) => t.to_string(),
            },
        );
        put("horizon_cap", self.horizon_cap.to_string());
        put("dt", self.dt.to_string());
        put("sample_interval", self.sample_interval.to_string());
        put("order", self.order.to_string());
        put("peak", self.peak.to_string());
        put("width", self.width.to_string());
        put("lifespan_ratio", self.lifespan_ratio.to_string());
        put("ceiling_ratio", self.ceiling_ratio.to_string());
        put("bootstrap", self.bootstrap.to_string());
        put("oversample", self.oversample.to_string());
        put("blocks", join(&self.blocks));
        put("strichartz_horizon", self.strichartz_horizon.to_string());
        put("strichartz_circumference", self.strichartz_circumference.to_string());
        put("strichartz_points", self.strichartz_points.to_string());
        put("decay_block", self.decay_block.to_string());
        put("decay_circumference", self.decay_circumference.to_string());
        put("decay_window", join(&[self.decay_window.0, self.decay_window.1]));
        put("decay_samples", self.decay_samples.to_string());
        put("period_block", self.period_block.to_string());
        put("period_circumference", self.period_circumference.to_string());
        put("period_horizons", join(&self.period_horizons));
        put("period_dt", self.period_dt.to_string());
        put("wrap_block", self.wrap_block.to_string());
        put("wrap_circumference", self.wrap_circumference.to_string());
        put("wrap_dt", self.wrap_dt.to_string());
        put(
            "checks",
            self.checks.iter().map(|c| c.name()).collect::<Vec<_>>().join(", "),
        );
        put("smoke", self.smoke.to_string());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_satisfy_every_constraint() {
        let c = ExperimentConfig::default();
        for kind in [
            ExperimentKind::SweepEpsilon,
            ExperimentKind::SweepPeriod,
            ExperimentKind::Strichartz,
        ] {
            c.validate(kind).unwrap();
        }
        c.validate(ExperimentKind::Simulate).unwrap();
    }

    #[test]
    fn echo_round_trips() {
        let mut c = ExperimentConfig::smoke();
        c.horizon = Horizon::Fixed(12.5);
        c.checks = vec![CheckKind::Split, CheckKind::Ibp];
        c.experiment = Some(ExperimentKind::Validate);
        let back = ExperimentConfig::default().with_text(&c.echo()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn constraint_violations_are_named() {
        let check =
            |text: &str, kind, name: &str| match ExperimentConfig::default().with_text(text).unwrap().validate(kind) {
                Err(ConfigError::Constraint { constraint, .. }) => assert_eq!(constraint, name),
                other => panic!("{text}: {other:?}"),
            };
        check("s = 17.5", ExperimentKind::SweepEpsilon, "s > ρ + 3.5");
        check("rho = 13.5\ns = 20", ExperimentKind::SweepPeriod, "ρ + 3.5 > 17.5");
        check("gamma = 15.5", ExperimentKind::Strichartz, "2γ ∉ ℤ");
        check("gamma = 15", ExperimentKind::Validate, "2γ ∉ ℤ");
    }

    #[test]
    fn lifespan_chain_only_binds_lifespan_runs() {
        let c = ExperimentConfig::default().with_text("s = 10").unwrap();
        c.validate(ExperimentKind::Strichartz).unwrap();
        assert!(c.validate(ExperimentKind::SweepEpsilon).is_err());
    }

    #[test]
    fn malformed_files_are_rejected() {
        let base = ExperimentConfig::default;
        assert!(matches!(base().with_text("bogus = 1"), Err(ConfigError::UnknownKey(_))));
        assert!(matches!(
            base().with_text("modes = 8\nmodes = 16"),
            Err(ConfigError::Syntax { line: 2, .. })
        ));
        assert!(matches!(
            base().with_text("modes"),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            base().with_text("dt = fast"),
            Err(ConfigError::Invalid { .. })
        ));
        let c = base().with_text("# comment\n\nchecks =   # none\n").unwrap();
        assert!(c.checks.is_empty());
    }

    #[test]
    fn period_grids_keep_the_spacing() {
        let c = ExperimentConfig::default();
        let g = c.grid_for(1280.0).unwrap();
        assert_eq!(g.len(), 1024);
        assert!(c.grid_for(641.0).is_err());
    }
}
