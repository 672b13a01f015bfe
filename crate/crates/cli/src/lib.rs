//! Batch front end: configuration, experiment drivers and report files.

pub mod checks;
pub mod config;
pub mod dispersion;
pub mod lifespan;
pub mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig, ExperimentKind};
use crate::lifespan::RunOutcome;

/// Outcome of a check or a contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// The measurement could not decide, for example because it was
    /// censored or did not converge.
    Inconclusive,
}

impl Verdict {
    /// Any failure fails; otherwise any inconclusive part is inconclusive.
    pub fn combine(parts: impl IntoIterator<Item = Verdict>) -> Verdict {
        let mut out = Verdict::Pass;
        for v in parts {
            match v {
                Verdict::Fail => return Verdict::Fail,
                Verdict::Inconclusive => out = Verdict::Inconclusive,
                Verdict::Pass => {}
            }
        }
        out
    }

    pub fn label(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

#[derive(Debug, Error)]
pub enum AppError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Lab(#[from] wavelab::LabError),

    #[error("output: {0}")]
    Io(#[from] std::io::Error),
}

impl AppError {
    /// `2` for configuration problems, `1` for anything that went wrong
    /// while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => 2,
            _ => 1,
        }
    }
}

/// Where an experiment wrote its files and how its checks came out.
#[derive(Debug, Clone)]
pub struct Finished {
    pub directory: PathBuf,
    pub verdict: Verdict,
    /// One line per check or contract, for the terminal.
    pub lines: Vec<String>,
}

impl Finished {
    /// `0` unless a check failed outright.
    pub fn exit_code(&self) -> i32 {
        if self.verdict == Verdict::Fail {
            1
        } else {
            0
        }
    }
}

/// Validates `cfg` for `kind`, runs it and writes its directory under
/// `out`.
pub fn execute(kind: ExperimentKind, cfg: &ExperimentConfig, out: &Path) -> Result<Finished, AppError> {
    cfg.validate(kind)?;
    let clock = Instant::now();
    let dir = output::run_directory(out, kind.name())?;
    fs::write(dir.join("config.echo"), cfg.echo())?;
    let (verdict, lines) = match kind {
        ExperimentKind::Simulate => simulate(cfg, &dir, &clock)?,
        ExperimentKind::SweepEpsilon => sweep_epsilon(cfg, &dir, &clock)?,
        ExperimentKind::SweepPeriod => sweep_period(cfg, &dir, &clock)?,
        ExperimentKind::Strichartz => strichartz(cfg, &dir, &clock)?,
        ExperimentKind::Validate => validate(cfg, &dir, &clock)?,
    };
    Ok(Finished {
        directory: dir,
        verdict,
        lines,
    })
}

#[derive(Serialize)]
struct RunMeta<'a> {
    file: String,
    run_index: usize,
    seed: u64,
    epsilon: f64,
    circumference: f64,
    modes: usize,
    horizon: f64,
    steps: usize,
    halt: &'a wavelab::evolution::Halt,
    lifespan: &'a lifespan::Lifespan,
    wall_seconds: f64,
}

fn run_file(r: &RunOutcome, by: &str) -> String {
    match by {
        "epsilon" => format!("eps-{}-run-{}.csv", r.epsilon, r.run_index),
        "circumference" => format!("R-{}-run-{}.csv", r.circumference, r.run_index),
        _ => format!("run-{}.csv", r.run_index),
    }
}

/// Diagnostics CSV per run plus the shared run table.
fn write_runs<'a>(dir: &Path, runs: &'a [RunOutcome], by: &str) -> Result<Vec<RunMeta<'a>>, AppError> {
    let mut meta = Vec::new();
    let mut rows = Vec::new();
    for r in runs {
        let file = run_file(r, by);
        output::write_diagnostics(fs::File::create(dir.join("runs").join(&file))?, &r.record.diagnostics)?;
        rows.push(vec![
            output::number(r.epsilon),
            output::number(r.circumference),
            r.run_index.to_string(),
            r.seed.to_string(),
            output::number(r.horizon),
            output::number(r.lifespan.t_num),
            r.lifespan.censored.to_string(),
            r.lifespan.t_ceiling.map(output::number).unwrap_or_default(),
            serde_json::to_value(r.record.halt)
                .ok()
                .and_then(|v| v.get("reason").and_then(|s| s.as_str()).map(str::to_string))
                .unwrap_or_default(),
        ]);
        meta.push(RunMeta {
            file,
            run_index: r.run_index,
            seed: r.seed,
            epsilon: r.epsilon,
            circumference: r.circumference,
            modes: r.modes,
            horizon: r.horizon,
            steps: r.record.steps,
            halt: &r.record.halt,
            lifespan: &r.lifespan,
            wall_seconds: r.wall_seconds,
        });
    }
    output::write_table(
        fs::File::create(dir.join("lifespans.csv"))?,
        &[
            "epsilon",
            "circumference",
            "run_index",
            "seed",
            "horizon",
            "t_num",
            "censored",
            "t_ceiling",
            "halt",
        ],
        rows,
    )?;
    Ok(meta)
}

type Driven = Result<(Verdict, Vec<String>), AppError>;

fn simulate(cfg: &ExperimentConfig, dir: &Path, clock: &Instant) -> Driven {
    let runs = lifespan::run_simulate(cfg)?;
    let meta = write_runs(dir, &runs, "run")?;
    #[derive(Serialize)]
    struct Body<'a> {
        runs: Vec<RunMeta<'a>>,
    }
    output::write_summary(dir, "simulate", clock.elapsed().as_secs_f64(), &Body { runs: meta })?;
    let lines = runs
        .iter()
        .map(|r| {
            format!(
                "run {} (seed {}): T_num = {}{}, halt {:?}",
                r.run_index,
                r.seed,
                r.lifespan.t_num,
                if r.lifespan.censored { " (censored)" } else { "" },
                r.record.halt
            )
        })
        .collect();
    Ok((Verdict::Pass, lines))
}

fn sweep_epsilon(cfg: &ExperimentConfig, dir: &Path, clock: &Instant) -> Driven {
    let sweep = lifespan::sweep_epsilon(cfg)?;
    let meta = write_runs(dir, &sweep.runs, "epsilon")?;
    #[derive(Serialize)]
    struct Body<'a> {
        #[serde(flatten)]
        sweep: &'a lifespan::EpsilonSweep,
        runs: Vec<RunMeta<'a>>,
    }
    output::write_summary(
        dir,
        "sweep-epsilon",
        clock.elapsed().as_secs_f64(),
        &Body {
            sweep: &sweep,
            runs: meta,
        },
    )?;
    let mut lines: Vec<String> = sweep
        .points
        .iter()
        .map(|p| {
            format!(
                "ε = {}: median T_num = {}{} (horizon {})",
                p.value,
                p.median,
                if p.median_censored { " (censored)" } else { "" },
                p.horizon
            )
        })
        .collect();
    for r in &sweep.ratios {
        lines.push(format!(
            "{} ε {} → {}: ratio {:.3} vs required {:.3}",
            r.verdict.label(),
            r.from,
            r.to,
            r.ratio,
            r.required
        ));
    }
    lines.push(match (sweep.fit, sweep.slope_ci95) {
        (Some(f), ci) => format!("slope {:.3} (bootstrap 95% CI {:?}), contract ≤ −2", f.slope, ci),
        (None, _) => "no fit (censored or degenerate data)".to_string(),
    });
    Ok((sweep.verdict, lines))
}

fn sweep_period(cfg: &ExperimentConfig, dir: &Path, clock: &Instant) -> Driven {
    let sweep = lifespan::sweep_period(cfg)?;
    let meta = write_runs(dir, &sweep.runs, "circumference")?;
    #[derive(Serialize)]
    struct Body<'a> {
        #[serde(flatten)]
        sweep: &'a lifespan::PeriodSweep,
        runs: Vec<RunMeta<'a>>,
    }
    output::write_summary(
        dir,
        "sweep-period",
        clock.elapsed().as_secs_f64(),
        &Body {
            sweep: &sweep,
            runs: meta,
        },
    )?;
    let mut lines: Vec<String> = sweep
        .points
        .iter()
        .zip(&sweep.regimes)
        .map(|(p, g)| {
            format!(
                "R = {} ({g:?}): median T_num = {}{}",
                p.value,
                p.median,
                if p.median_censored { " (censored)" } else { "" }
            )
        })
        .collect();
    for m in &sweep.monotone {
        lines.push(format!(
            "{} R {} → {}: ratio {:.3} (√2 = {:.3}), monotone band {}",
            m.verdict.label(),
            m.from,
            m.to,
            m.ratio,
            std::f64::consts::SQRT_2,
            m.required
        ));
    }
    if let Some(f) = sweep.fit {
        lines.push(format!(
            "exponent {:.3} (bootstrap 95% CI {:?}) vs predicted {}",
            f.slope, sweep.exponent_ci95, sweep.predicted_exponent
        ));
    }
    Ok((sweep.verdict, lines))
}

fn strichartz(cfg: &ExperimentConfig, dir: &Path, clock: &Instant) -> Driven {
    let exp = dispersion::run_dispersion(cfg)?;
    output::write_dispersion(
        fs::File::create(dir.join("runs").join("dispersion.csv"))?,
        &exp.rows(cfg),
    )?;
    output::write_summary(dir, "strichartz", clock.elapsed().as_secs_f64(), &exp)?;
    let w = &exp.wrap;
    let lines = vec![
        format!("{} decay slope {:.4}", exp.decay_verdict.label(), exp.decay.slope()),
        format!(
            "{} frequency exponent {:.4}",
            exp.frequency_verdict.label(),
            exp.frequency.fit.slope
        ),
        format!(
            "{} period exponent {:.4}",
            exp.period_verdict.label(),
            exp.period.fit.slope
        ),
        format!(
            "{} wrap time {:?} vs predicted {}",
            w.prediction.label(),
            w.base.measured,
            w.base.predicted
        ),
        format!(
            "{} wrap time ratio on doubled R {:?}",
            w.linearity.label(),
            w.doubling_ratio
        ),
    ];
    Ok((exp.verdict, lines))
}

fn validate(cfg: &ExperimentConfig, dir: &Path, clock: &Instant) -> Driven {
    let report = checks::run_validate(cfg);
    let rows = report
        .checks
        .iter()
        .map(|c| {
            vec![
                c.check.name().to_string(),
                c.verdict.label().to_string(),
                output::number(c.measured),
                c.tolerance.clone(),
                output::number(c.seconds),
            ]
        })
        .collect();
    output::write_table(
        fs::File::create(dir.join("runs").join("checks.csv"))?,
        &["check", "verdict", "measured", "tolerance", "seconds"],
        rows,
    )?;
    output::write_summary(dir, "validate", clock.elapsed().as_secs_f64(), &report)?;
    let lines = report
        .checks
        .iter()
        .map(|c| {
            format!(
                "{} {}: {:.6e} ({}) in {:.1} s",
                c.verdict.label(),
                c.check.name(),
                c.measured,
                c.tolerance,
                c.seconds
            )
        })
        .collect();
    Ok((report.verdict, lines))
}
