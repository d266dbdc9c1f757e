//! File formats: CSV tables and JSON documents.

use std::fs;
use std::path::{Path, PathBuf};

use ramsey_qa_core::{PeakReport, RamseySeries, Spectrum};
use serde::Serialize;

use crate::CliError;

/// Significant digits written to CSV files.
pub const CSV_DIGITS: usize = 12;

/// Formats `x` like C's `%.{digits}g`: the shorter of fixed and scientific
/// notation, trailing zeros removed.
pub fn format_g(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn csv_row(out: &mut String, values: &[f64]) {
    for (k, v) in values.iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        out.push_str(&format_g(*v, CSV_DIGITS));
    }
    out.push('\n');
}

pub fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        csv_row(&mut out, &row);
    }
    out
}

pub fn series_csv(series: &RamseySeries) -> String {
    csv_table(
        &["tau_ns", "probability"],
        series
            .records()
            .iter()
            .map(|r| vec![r.tau_ns, r.probability]),
    )
}

pub fn spectrum_csv(spectrum: &Spectrum) -> String {
    csv_table(
        &["nu_ghz", "re", "im", "abs"],
        spectrum
            .nu_grid()
            .iter()
            .zip(spectrum.values())
            .map(|(nu, f)| vec![*nu, f.re, f.im, f.norm()]),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PeakMatch {
    pub i: usize,
    pub j: usize,
    pub gap_ghz: f64,
    pub delta_ghz: f64,
}

/// One element of `peaks.json`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PeakEntry {
    pub nu_ghz: f64,
    pub refined_nu_ghz: f64,
    pub magnitude: f64,
    #[serde(rename = "match")]
    pub matched: Option<PeakMatch>,
}

pub fn peak_entries(report: &PeakReport) -> Vec<PeakEntry> {
    report
        .peaks
        .iter()
        .enumerate()
        .map(|(k, p)| PeakEntry {
            nu_ghz: p.nu,
            refined_nu_ghz: p.refined_nu,
            magnitude: p.magnitude,
            matched: report.match_for(k).map(|m| PeakMatch {
                i: m.i,
                j: m.j,
                gap_ghz: m.gap_ghz,
                delta_ghz: m.delta_ghz,
            }),
        })
        .collect()
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

/// Directory label for one anneal time, e.g. `T37.5ns`.
pub fn anneal_label(anneal_ns: f64) -> String {
    format!("T{anneal_ns}ns")
}

pub fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

pub fn write_file(path: &Path, contents: &str) -> Result<PathBuf, CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(path.to_path_buf())
}
