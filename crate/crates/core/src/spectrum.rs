//! Fourier analysis of a Ramsey series and peak extraction.
//!
//! The transform is the bare sum `f(ν) = Σ_n (P_n - 1/2)·e^{-i2πντ_n}`
//! evaluated on an arbitrary ascending frequency grid (GHz). No window is
//! applied, so a non-zero mean offset of `P` shows up as weight near `ν = 0`.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::C64;
use crate::oracle::GapTable;
use crate::protocol::{RamseySeries, SweepGrid};

/// `[nu_min, nu_max]` sampled every `step` GHz.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub nu_min: f64,
    pub nu_max: f64,
    pub step: f64,
}

impl FrequencyGrid {
    pub fn new(nu_min: f64, nu_max: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && nu_max > nu_min && (nu_max - nu_min).is_finite()) {
            return Err(Error::arg(format!(
                "frequency grid [{nu_min}, {nu_max}] with step {step} GHz is empty"
            )));
        }
        Ok(Self {
            nu_min,
            nu_max,
            step,
        })
    }

    pub fn points(&self) -> Vec<f64> {
        let n = ((self.nu_max - self.nu_min) / self.step * (1.0 + 1e-12)).floor() as usize;
        (0..=n)
            .map(|k| self.nu_min + k as f64 * self.step)
            .collect()
    }
}

/// `f(ν)` on an ascending grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    nu_grid: Vec<f64>,
    values: Vec<C64>,
    source_grid: Option<SweepGrid>,
}

impl Spectrum {
    pub fn nu_grid(&self) -> &[f64] {
        &self.nu_grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm()).collect()
    }

    /// Hold-time range and count of the transformed series.
    pub fn source_grid(&self) -> Option<&SweepGrid> {
        self.source_grid.as_ref()
    }

    pub fn len(&self) -> usize {
        self.nu_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu_grid.is_empty()
    }

    /// Largest `|f|` over `lo <= ν <= hi` with its frequency.
    pub fn max_in(&self, lo: f64, hi: f64) -> Option<(f64, f64)> {
        self.nu_grid
            .iter()
            .zip(&self.values)
            .filter(|(nu, _)| **nu >= lo && **nu <= hi)
            .map(|(nu, z)| (*nu, z.norm()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// Evaluates `Σ_n (P_n - 1/2)·e^{-i2πντ_n}` at every `ν` in `nu_grid`.
pub fn dft(series: &RamseySeries, nu_grid: &[f64]) -> Result<Spectrum> {
    if nu_grid.is_empty() {
        return Err(Error::arg("frequency grid is empty"));
    }
    if series.is_empty() {
        return Err(Error::arg("cannot transform an empty series"));
    }
    if nu_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::arg("frequency grid must be strictly ascending"));
    }
    let samples: Vec<(f64, f64)> = series
        .records()
        .iter()
        .map(|r| (r.tau_ns, r.probability - 0.5))
        .collect();
    let values = nu_grid
        .par_iter()
        .map(|&nu| {
            samples.iter().fold(C64::new(0.0, 0.0), |acc, &(tau, x)| {
                let (s, c) = (TAU * nu * tau).sin_cos();
                acc + C64::new(x * c, -x * s)
            })
        })
        .collect();
    let records = series.records();
    let source_grid = (records.len() >= 2).then(|| SweepGrid {
        t_min: records[0].tau_ns,
        t_max: records[records.len() - 1].tau_ns,
        n: records.len(),
    });
    Ok(Spectrum {
        nu_grid: nu_grid.to_vec(),
        values,
        source_grid,
    })
}

/// Outcome of sub-grid peak interpolation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RefineStatus {
    Interpolated,
    /// The maximum sits on the grid edge; the raw frequency is kept.
    Boundary,
    /// The three points are not strictly concave; the raw frequency is kept.
    Flat,
    /// Not refined yet.
    Raw,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Refinement {
    pub nu: f64,
    pub status: RefineStatus,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Peak {
    /// Index into the spectrum's frequency grid.
    pub index: usize,
    pub nu: f64,
    pub magnitude: f64,
    pub refined_nu: f64,
    pub refinement: RefineStatus,
}

/// The strongest point of the excluded low-frequency band.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DcRegion {
    pub exclusion_ghz: f64,
    pub nu: f64,
    pub magnitude: f64,
}

/// A peak assigned to an oracle gap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OracleMatch {
    pub peak: usize,
    pub i: usize,
    pub j: usize,
    pub gap_ghz: f64,
    pub delta_ghz: f64,
    /// Another peak matched the same gap.
    pub shared: bool,
}

/// Detected peaks, strongest first, with optional oracle assignments.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeakReport {
    pub peaks: Vec<Peak>,
    pub dc: Option<DcRegion>,
    pub matches: Vec<OracleMatch>,
}

impl PeakReport {
    pub fn match_for(&self, peak: usize) -> Option<&OracleMatch> {
        self.matches.iter().find(|m| m.peak == peak)
    }

    /// Indices of peaks with no oracle gap within tolerance.
    pub fn unmatched(&self) -> Vec<usize> {
        (0..self.peaks.len())
            .filter(|&k| self.match_for(k).is_none())
            .collect()
    }

    /// First (strongest) peak matched to gap `(i, j)`.
    pub fn peak_for_gap(&self, i: usize, j: usize) -> Option<(&Peak, &OracleMatch)> {
        self.matches
            .iter()
            .filter(|m| m.i == i && m.j == j)
            .min_by_key(|m| m.peak)
            .map(|m| (&self.peaks[m.peak], m))
    }
}

/// Local maxima of `|f|` above `dc_exclusion` whose magnitude is at least
/// `threshold_rel` times the largest `|f|` in that region. The excluded band
/// is summarized separately in [`PeakReport::dc`].
pub fn find_peaks(spec: &Spectrum, dc_exclusion: f64, threshold_rel: f64) -> Result<PeakReport> {
    if !(dc_exclusion >= 0.0) {
        return Err(Error::arg(format!(
            "dc_exclusion {dc_exclusion} must be >= 0"
        )));
    }
    if !(threshold_rel > 0.0 && threshold_rel <= 1.0) {
        return Err(Error::arg(format!(
            "threshold_rel {threshold_rel} must lie in (0, 1]"
        )));
    }
    let mags = spec.magnitudes();
    let nu = spec.nu_grid();

    let dc = spec
        .max_in(f64::NEG_INFINITY, dc_exclusion)
        .map(|(nu, magnitude)| DcRegion {
            exclusion_ghz: dc_exclusion,
            nu,
            magnitude,
        });
    let included_max = nu
        .iter()
        .zip(&mags)
        .filter(|(n, _)| **n > dc_exclusion)
        .map(|(_, m)| *m)
        .fold(0.0, f64::max);
    let floor = threshold_rel * included_max;

    let mut peaks: Vec<Peak> = (1..mags.len().saturating_sub(1))
        .filter(|&k| nu[k] > dc_exclusion)
        .filter(|&k| mags[k] > mags[k - 1] && mags[k] >= mags[k + 1])
        .filter(|&k| mags[k] >= floor && mags[k] > 0.0)
        .map(|k| Peak {
            index: k,
            nu: nu[k],
            magnitude: mags[k],
            refined_nu: nu[k],
            refinement: RefineStatus::Raw,
        })
        .collect();
    peaks.sort_by(|a, b| {
        b.magnitude
            .total_cmp(&a.magnitude)
            .then(a.index.cmp(&b.index))
    });
    Ok(PeakReport {
        peaks,
        dc,
        matches: Vec::new(),
    })
}

/// Vertex of the parabola through the three grid points around `index`.
pub fn refine_peak(spec: &Spectrum, index: usize) -> Result<Refinement> {
    let nu = spec.nu_grid();
    if index >= nu.len() {
        return Err(Error::arg(format!(
            "peak index {index} outside grid of {} points",
            nu.len()
        )));
    }
    if index == 0 || index + 1 == nu.len() {
        return Ok(Refinement {
            nu: nu[index],
            status: RefineStatus::Boundary,
        });
    }
    let y = |k: usize| spec.values()[k].norm();
    let (y0, y1, y2) = (y(index - 1), y(index), y(index + 1));
    // Local coordinates centred on the middle point.
    let u0 = nu[index - 1] - nu[index];
    let u2 = nu[index + 1] - nu[index];
    let s0 = (y0 - y1) / u0;
    let s2 = (y2 - y1) / u2;
    let curvature = (s2 - s0) / (u2 - u0);
    let slope = s0 - curvature * u0;
    if !(curvature < 0.0) || !curvature.is_finite() {
        return Ok(Refinement {
            nu: nu[index],
            status: RefineStatus::Flat,
        });
    }
    let offset = (-slope / (2.0 * curvature)).clamp(u0, u2);
    Ok(Refinement {
        nu: nu[index] + offset,
        status: RefineStatus::Interpolated,
    })
}

/// Refines every peak of `report` in place.
pub fn refine_all(spec: &Spectrum, mut report: PeakReport) -> Result<PeakReport> {
    for peak in &mut report.peaks {
        let r = refine_peak(spec, peak.index)?;
        peak.refined_nu = r.nu;
        peak.refinement = r.status;
    }
    Ok(report)
}

/// Assigns each peak to the nearest oracle gap within `tolerance` GHz.
/// Peaks farther than that stay unmatched; gaps claimed by several peaks are
/// flagged `shared`.
pub fn match_to_oracle(
    mut report: PeakReport,
    gaps: &GapTable,
    tolerance: f64,
) -> Result<PeakReport> {
    if !(tolerance > 0.0) {
        return Err(Error::arg(format!(
            "match tolerance {tolerance} must be positive"
        )));
    }
    let mut matches: Vec<OracleMatch> = report
        .peaks
        .iter()
        .enumerate()
        .filter_map(|(k, peak)| {
            gaps.entries()
                .iter()
                .map(|g| (g, (peak.refined_nu - g.gap_ghz).abs()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .filter(|(_, d)| *d <= tolerance)
                .map(|(g, d)| OracleMatch {
                    peak: k,
                    i: g.i,
                    j: g.j,
                    gap_ghz: g.gap_ghz,
                    delta_ghz: d,
                    shared: false,
                })
        })
        .collect();
    let claims: Vec<(usize, usize)> = matches.iter().map(|m| (m.i, m.j)).collect();
    for m in &mut matches {
        m.shared = claims.iter().filter(|&&c| c == (m.i, m.j)).count() > 1;
    }
    report.matches = matches;
    Ok(report)
}
