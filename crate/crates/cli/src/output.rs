//! Run directories, CSV tables and JSON summaries.
//!
//! Layout: `<out>/<experiment>/<timestamp>/{config.echo, runs/*.csv,
//! summary.json}`. Numbers are written with 17 significant digits so that
//! every `f64` round-trips; missing values are empty cells.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use wavelab::diagnostics::DiagnosticsRecord;
use wavelab::strichartz::DispersionReport;

/// Bumped whenever a summary field changes meaning or disappears.
pub const SCHEMA_VERSION: u32 = 1;

/// `f64` in scientific form with 17 significant digits.
pub fn number(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn optional(x: Option<f64>) -> String {
    x.map(number).unwrap_or_default()
}

fn table<W: io::Write>(out: W, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> io::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()
}

pub fn write_diagnostics<W: io::Write>(out: W, records: &[DiagnosticsRecord]) -> io::Result<()> {
    table(
        out,
        &DiagnosticsRecord::FIELDS,
        records.iter().map(|r| {
            [
                r.time,
                r.energy,
                r.sobolev_energy,
                r.besov_rho,
                r.u_sobolev,
                r.g_partial,
            ]
            .into_iter()
            .map(number)
            .collect()
        }),
    )
}

pub fn write_dispersion<W: io::Write>(out: W, rows: &[DispersionReport]) -> io::Result<()> {
    table(
        out,
        &DispersionReport::FIELDS,
        rows.iter().map(|r| {
            vec![
                r.block.to_string(),
                number(r.horizon),
                number(r.circumference),
                optional(r.strichartz),
                optional(r.decay_slope),
                number(r.wrap_predicted),
                optional(r.wrap_measured),
            ]
        }),
    )
}

/// Generic table of already formatted cells.
pub fn write_table<W: io::Write>(out: W, header: &[&str], rows: Vec<Vec<String>>) -> io::Result<()> {
    table(out, header, rows)
}

/// `<root>/<experiment>/<stamp>`, suffixed when a directory of that name
/// already exists.
pub fn run_directory(root: &Path, experiment: &str) -> io::Result<PathBuf> {
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ").to_string();
    let base = root.join(experiment);
    fs::create_dir_all(&base)?;
    for i in 0.. {
        let name = if i == 0 { stamp.clone() } else { format!("{stamp}-{i}") };
        let dir = base.join(name);
        match fs::create_dir(&dir) {
            Ok(()) => {
                fs::create_dir(dir.join("runs"))?;
                return Ok(dir);
            }
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e),
        }
    }
    unreachable!("unbounded search terminates on the first free name")
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    experiment: &'a str,
    wall_seconds: f64,
    #[serde(flatten)]
    body: &'a T,
}

pub fn write_summary<T: Serialize>(dir: &Path, experiment: &str, wall_seconds: f64, body: &T) -> io::Result<()> {
    let env = Envelope {
        schema_version: SCHEMA_VERSION,
        experiment,
        wall_seconds,
        body,
    };
    let text = serde_json::to_string_pretty(&env).map_err(io::Error::other)?;
    fs::write(dir.join("summary.json"), text + "\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, 0.0] {
            let s = number(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(number(f64::NAN), "NaN");
    }

    #[test]
    fn diagnostics_header_names_fields() {
        let mut buf = Vec::new();
        write_diagnostics(&mut buf, &[]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "time,energy,sobolev_energy,besov_rho,u_sobolev,g_partial\r\n"
        );
    }

    #[test]
    fn missing_values_are_empty_cells() {
        let mut buf = Vec::new();
        write_dispersion(&mut buf, &[DispersionReport::new(2, 1.0, 4.0)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let row = text.lines().nth(1).unwrap();
        assert_eq!(row.split(',').filter(|c| c.is_empty()).count(), 3, "{row}");
    }
}
