//! Acceptance run: every criterion at its stated tolerance on the
//! desk-scale defaults, one verdict line each. Inconclusive counts as not
//! passed. Exits non-zero if any criterion does not pass.

use std::process::ExitCode;
use std::time::Instant;

use wavelab_cli::checks::{run_validate, CheckOutcome, ValidationReport};
use wavelab_cli::config::{CheckKind, ExperimentConfig};
use wavelab_cli::lifespan::{run_simulate, sweep_epsilon, sweep_period};
use wavelab_cli::{dispersion, Verdict};

/// Wall-clock limit of the whole validation suite.
const SUITE_SECONDS: f64 = 15.0 * 60.0;

struct Line {
    number: usize,
    name: &'static str,
    verdict: Verdict,
    note: String,
}

fn outcome(report: &ValidationReport, kind: CheckKind) -> &CheckOutcome {
    report.checks.iter().find(|c| c.check == kind).expect("check selected")
}

fn describe(c: &CheckOutcome) -> String {
    let mut s = format!(
        "{} = {:.6e} ({}), {:.1} s",
        c.check.name(),
        c.measured,
        c.tolerance,
        c.seconds
    );
    for (k, v) in &c.details {
        s.push_str(&format!(", {k} = {v:.4e}"));
    }
    s
}

fn from_checks(number: usize, name: &'static str, report: &ValidationReport, kinds: &[CheckKind]) -> Line {
    let parts: Vec<&CheckOutcome> = kinds.iter().map(|&k| outcome(report, k)).collect();
    Line {
        number,
        name,
        verdict: Verdict::combine(parts.iter().map(|c| c.verdict)),
        note: parts.iter().map(|c| describe(c)).collect::<Vec<_>>().join("; "),
    }
}

fn wrap_line(cfg: &ExperimentConfig, report: &ValidationReport) -> Line {
    let period = outcome(report, CheckKind::Period);
    let (verdict, note) = match dispersion::wrap(cfg) {
        Ok(w) => (
            Verdict::combine([period.verdict, w.prediction]),
            format!(
                "{}; wrap time {:?} vs 2^(k/2) R = {} (relative error {:?}, allowed {}), doubling ratio {:?}",
                describe(period),
                w.base.measured,
                w.base.predicted,
                w.base.relative_error(),
                dispersion::WRAP_TOLERANCE,
                w.doubling_ratio
            ),
        ),
        Err(e) => (Verdict::Fail, format!("wrap time: {e}")),
    };
    Line {
        number: 9,
        name: "periodic loss factor",
        verdict,
        note,
    }
}

fn lifespan_line(cfg: &ExperimentConfig) -> Line {
    let clock = Instant::now();
    let enough_seeds = if cfg.seeds >= 4 { Verdict::Pass } else { Verdict::Fail };
    let (eps, per) = match (sweep_epsilon(cfg), sweep_period(cfg)) {
        (Ok(e), Ok(p)) => (e, p),
        (Err(e), _) | (_, Err(e)) => {
            return Line {
                number: 11,
                name: "lifespan sweeps",
                verdict: Verdict::Fail,
                note: e.to_string(),
            }
        }
    };
    let mut note = format!("{} seeds; ε sweep:", cfg.seeds);
    for r in &eps.ratios {
        note.push_str(&format!(
            " {}→{} ratio {:.3} ({})",
            r.from,
            r.to,
            r.ratio,
            r.verdict.label()
        ));
    }
    if let Some(f) = eps.fit {
        note.push_str(&format!(", slope {:.3} CI {:?}", f.slope, eps.slope_ci95));
    }
    note.push_str("; R sweep:");
    for m in &per.monotone {
        note.push_str(&format!(
            " {}→{} ratio {:.3} ({})",
            m.from,
            m.to,
            m.ratio,
            m.verdict.label()
        ));
    }
    if let Some(f) = per.fit {
        note.push_str(&format!(
            ", exponent {:.3} CI {:?} vs {} (informational)",
            f.slope, per.exponent_ci95, per.predicted_exponent
        ));
    }
    note.push_str(&format!(", {:.1} s", clock.elapsed().as_secs_f64()));
    Line {
        number: 11,
        name: "lifespan sweeps",
        verdict: Verdict::combine([enough_seeds, eps.verdict, per.verdict]),
        note,
    }
}

fn numbers(report: &ValidationReport) -> Vec<u64> {
    report
        .checks
        .iter()
        .flat_map(|c| std::iter::once(c.measured).chain(c.details.iter().map(|d| d.1)))
        .map(f64::to_bits)
        .collect()
}

fn diagnostics_bytes(cfg: &ExperimentConfig) -> Result<Vec<Vec<u8>>, String> {
    let runs = run_simulate(cfg).map_err(|e| e.to_string())?;
    runs.iter()
        .map(|r| {
            let mut buf = Vec::new();
            wavelab_cli::output::write_diagnostics(&mut buf, &r.record.diagnostics).map_err(|e| e.to_string())?;
            Ok(buf)
        })
        .collect()
}

fn determinism_line(cfg: &ExperimentConfig, report: &ValidationReport, suite_seconds: f64) -> Line {
    let again = run_validate(cfg);
    let same_checks = numbers(report) == numbers(&again);
    let mut short = cfg.clone();
    short.seeds = 2;
    short.horizon = wavelab_cli::config::Horizon::Fixed(50.0);
    let same_runs = match (diagnostics_bytes(&short), diagnostics_bytes(&short)) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    };
    let in_time = suite_seconds <= SUITE_SECONDS;
    let ok = report.verdict == Verdict::Pass && in_time && same_checks && same_runs;
    Line {
        number: 12,
        name: "determinism and suite runtime",
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        note: format!(
            "suite {} in {:.1} s (limit {SUITE_SECONDS} s), rerun identical: checks {same_checks}, diagnostics {same_runs}",
            report.verdict.label(),
            suite_seconds
        ),
    }
}

fn main() -> ExitCode {
    let cfg = ExperimentConfig::default();
    let clock = Instant::now();
    let report = run_validate(&cfg);
    let suite_seconds = clock.elapsed().as_secs_f64();

    let lines = vec![
        from_checks(1, "energy conservation", &report, &[CheckKind::Energy]),
        from_checks(2, "exact split identity", &report, &[CheckKind::Split]),
        from_checks(3, "cross-formulation identity", &report, &[CheckKind::CrossForm]),
        from_checks(4, "DtN oracle agreement", &report, &[CheckKind::DtnOracle]),
        from_checks(
            5,
            "quadratic and cubic amplitude scaling",
            &report,
            &[CheckKind::Scaling],
        ),
        from_checks(
            6,
            "normal-form reconstruction",
            &report,
            &[CheckKind::Symbols, CheckKind::Ibp],
        ),
        from_checks(7, "dispersive decay", &report, &[CheckKind::Decay]),
        from_checks(8, "Strichartz frequency scaling", &report, &[CheckKind::Frequency]),
        wrap_line(&cfg, &report),
        from_checks(10, "quartic drift proxy", &report, &[CheckKind::Drift]),
        lifespan_line(&cfg),
        determinism_line(&cfg, &report, suite_seconds),
    ];

    let mut passed = 0;
    for l in &lines {
        let label = if l.verdict == Verdict::Pass { "PASS" } else { "FAIL" };
        let extra = if l.verdict == Verdict::Inconclusive {
            " (inconclusive)"
        } else {
            ""
        };
        println!("criterion {:>2} {label}{extra}: {}: {}", l.number, l.name, l.note);
        if l.verdict == Verdict::Pass {
            passed += 1;
        }
    }
    println!("acceptance: {passed}/{} criteria pass", lines.len());
    if passed == lines.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
