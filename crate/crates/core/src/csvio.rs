//! CSV tables written and read by the command-line tool.
//!
//! Numbers are written with 6 significant digits; infinities as `inf` and
//! undefined values as `nan`.

use std::fmt::Write as _;
use std::path::Path;

use crate::dynamics::Figure4Row;
use crate::error::{Error, Result};
use crate::inference::{BatchRow, SweepDataset};
use crate::montecarlo::{OccupationPoint, TrajectorySample};
use crate::spectra::Accumulation;

pub const FIGURE4_HEADER: &str = "gamma_inv_ns,contrast,alpha";
pub const SWEEP_HEADER: &str = "angle_deg,intensity";
pub const QWP_HEADER: &str = "qwp_deg,contrast";
pub const SPECTRUM_HEADER: &str = "freq_ghz,counts";
pub const ACCUMULATION_HEADER: &str = "angle_deg,freq_ghz,counts";
pub const SAMPLES_HEADER: &str = "emission_ns,branch,n_flips";
pub const OCCUPATION_HEADER: &str = "t_ns,p_x_hat,sigma";
pub const REPORT_HEADER: &str = "id,contrast,contrast_sigma,gamma_inv_ns,ci_low_ns,ci_high_ns,flag";

/// `x` rounded to 6 significant digits, printed in shortest form; magnitudes
/// outside `[1e-4, 1e9)` use exponent notation.
pub fn sig6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("formatted float parses");
    // Avoid "-0".
    if rounded == 0.0 {
        return "0".into();
    }
    let mag = rounded.abs();
    if (1e-4..1e9).contains(&mag) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

fn table(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    out
}

/// Two-column numeric table.
pub fn pairs_csv(header: &str, pairs: &[(f64, f64)]) -> String {
    table(header, pairs.iter().map(|(a, b)| format!("{},{}", sig6(*a), sig6(*b))))
}

pub fn figure4_csv(rows: &[Figure4Row]) -> String {
    table(
        FIGURE4_HEADER,
        rows.iter().map(|r| format!("{},{},{}", sig6(r.gamma_inv), sig6(r.contrast), sig6(r.alpha))),
    )
}

pub fn accumulation_csv(acc: &Accumulation) -> String {
    let mut out = String::from(ACCUMULATION_HEADER);
    out.push('\n');
    for (angle, row) in acc.angles.iter().zip(&acc.rows) {
        for (f, c) in acc.frequencies.iter().zip(row) {
            let _ = writeln!(out, "{},{},{}", sig6(*angle), sig6(*f), sig6(*c));
        }
    }
    out
}

pub fn samples_csv(samples: &[TrajectorySample]) -> String {
    table(
        SAMPLES_HEADER,
        samples
            .iter()
            .map(|s| format!("{},{},{}", sig6(s.emission_time), s.branch_at_emission.label(), s.n_flips)),
    )
}

pub fn occupation_csv(points: &[OccupationPoint]) -> String {
    table(
        OCCUPATION_HEADER,
        points.iter().map(|p| format!("{},{},{}", sig6(p.t), sig6(p.p_x_hat), sig6(p.sigma))),
    )
}

pub fn report_csv(rows: &[BatchRow]) -> String {
    table(
        REPORT_HEADER,
        rows.iter().map(|r| {
            format!(
                "{},{},{},{},{},{},{}",
                r.id.replace(',', ";"),
                sig6(r.contrast),
                sig6(r.contrast_sigma),
                sig6(r.gamma_inv),
                sig6(r.ci_low),
                sig6(r.ci_high),
                r.flag
            )
        }),
    )
}

/// Parses an `angle_deg,intensity` table. The header is required; errors
/// carry 1-based line numbers.
pub fn parse_sweep_csv(text: &str, source_name: &str) -> Result<Vec<(f64, f64)>> {
    let err = |line: usize, message: String| Error::Parse {
        source_name: source_name.to_string(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim().replace(' ', "") == SWEEP_HEADER => {}
        Some((i, h)) => return Err(err(i + 1, format!("expected header '{SWEEP_HEADER}', got '{}'", h.trim()))),
        None => return Err(err(1, format!("empty input, expected header '{SWEEP_HEADER}'"))),
    }
    lines
        .map(|(i, l)| {
            let fields: Vec<&str> = l.split(',').map(str::trim).collect();
            if fields.len() != 2 {
                return Err(err(i + 1, format!("expected 2 fields, got {}", fields.len())));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| err(i + 1, format!("'{s}': {e}")));
            Ok((num(fields[0])?, num(fields[1])?))
        })
        .collect()
}

pub fn read_sweep_dataset(path: &Path) -> Result<SweepDataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    Ok(SweepDataset {
        id,
        points: parse_sweep_csv(&text, &path.display().to_string())?,
    })
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}
