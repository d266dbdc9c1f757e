//! One anneal time, end to end: sweep, transform, peak extraction, oracle
//! matching and cosine fits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{evolve_interval, StepPolicy};
use crate::model::{build_problem, schedule_value, AnnealPath, ModelParams, Schedule};
use crate::operators::QuantumState;
use crate::oracle::{
    diagonalize, gaps, instantaneous_populations, EigenSystem, GapTable, Populations,
};
use crate::protocol::{
    cosine_fit, initial_state_for, sweep_with, CosineFit, RamseyPropagator, RamseySeries, SweepGrid,
};
use crate::spectrum::{
    dft, find_peaks, match_to_oracle, refine_all, FrequencyGrid, PeakReport, Spectrum,
};

pub const DEFAULT_NU_MAX_GHZ: f64 = 5.0;
pub const DEFAULT_NU_STEP_GHZ: f64 = 0.001;
pub const DEFAULT_THRESHOLD_REL: f64 = 0.1;

/// Frequency grid and peak-picking knobs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSettings {
    pub nu_max: f64,
    pub nu_step: f64,
    pub dc_exclusion: f64,
    pub threshold_rel: f64,
    pub match_tolerance: f64,
}

impl SpectrumSettings {
    /// Defaults tied to the sweep: DC exclusion of three resolution bins
    /// `3/(t_max - t_min)` and a matching tolerance of one bin.
    pub fn for_grid(grid: &SweepGrid) -> Self {
        let bin = 1.0 / grid.span();
        Self {
            nu_max: DEFAULT_NU_MAX_GHZ,
            nu_step: DEFAULT_NU_STEP_GHZ,
            dc_exclusion: 3.0 * bin,
            threshold_rel: DEFAULT_THRESHOLD_REL,
            match_tolerance: bin,
        }
    }

    pub fn frequency_grid(&self) -> Result<FrequencyGrid> {
        FrequencyGrid::new(0.0, self.nu_max, self.nu_step)
    }
}

/// Spectrum, peaks and fits derived from one series.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub spectrum: Spectrum,
    pub peaks: PeakReport,
    /// Fit at the gap matched by the strongest matched peak.
    pub dominant_fit: Option<CosineFit>,
    /// Fit at the oracle ground gap `E_1 - E_0`.
    pub ground_fit: Option<CosineFit>,
}

pub fn analyze(
    series: &RamseySeries,
    table: &GapTable,
    settings: &SpectrumSettings,
) -> Result<Analysis> {
    let spectrum = dft(series, &settings.frequency_grid()?.points())?;
    let report = find_peaks(&spectrum, settings.dc_exclusion, settings.threshold_rel)?;
    let report = refine_all(&spectrum, report)?;
    let peaks = match_to_oracle(report, table, settings.match_tolerance)?;
    let dominant_fit = peaks
        .matches
        .iter()
        .min_by_key(|m| m.peak)
        .filter(|m| m.gap_ghz > 0.0)
        .map(|m| cosine_fit(series, m.gap_ghz))
        .transpose()?;
    let ground_fit = table
        .ground_gap()
        .filter(|g| *g > 0.0)
        .map(|g| cosine_fit(series, g))
        .transpose()?;
    Ok(Analysis {
        spectrum,
        peaks,
        dominant_fit,
        ground_fit,
    })
}

/// Everything produced for one anneal time.
#[derive(Clone, Debug)]
pub struct AnnealOutcome {
    pub anneal_ns: f64,
    pub series: RamseySeries,
    pub problem: EigenSystem,
    pub gaps: GapTable,
    pub analysis: Analysis,
    /// Problem-eigenstate populations at `t = T`.
    pub populations_at_anneal_end: Vec<f64>,
    /// Largest norm drift over the propagated segments.
    pub norm_drift: f64,
}

pub fn run_anneal(
    params: &ModelParams,
    anneal_ns: f64,
    grid: &SweepGrid,
    policy: &StepPolicy,
    settings: &SpectrumSettings,
) -> Result<AnnealOutcome> {
    let problem = diagonalize(&build_problem(params)).map_err(Error::in_stage("oracle"))?;
    let table = gaps(&problem);
    let propagator = RamseyPropagator::new(&AnnealPath::from_params(params), anneal_ns, policy)
        .map_err(Error::in_stage("anneal"))?;
    let series = sweep_with(&propagator, params, anneal_ns, grid, policy)?;
    let analysis = analyze(&series, &table, settings).map_err(Error::in_stage("spectrum"))?;
    Ok(AnnealOutcome {
        anneal_ns,
        series,
        problem,
        gaps: table,
        analysis,
        populations_at_anneal_end: propagator.annealed_populations(),
        norm_drift: propagator.norm_drift(),
    })
}

/// Which state the protocol starts from when tracing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TraceStart {
    /// The protocol's equal superposition of the two lowest driver levels.
    #[default]
    Superposition,
    /// The driver ground state alone, for adiabaticity checks.
    DriverGround,
}

/// Instantaneous-eigenbasis populations at one time.
#[derive(Clone, Debug)]
pub struct TracePoint {
    pub t_ns: f64,
    pub schedule: f64,
    pub populations: Populations,
}

/// Sample times: multiples of `stride` plus the segment boundaries.
fn trace_times(sched: &Schedule, stride: f64) -> Vec<f64> {
    let total = sched.total_ns();
    let count = (total / stride * (1.0 + 1e-12)).floor() as usize;
    let boundaries = [sched.anneal_ns(), sched.reverse_start(), total];
    let near = |t: f64| {
        boundaries
            .iter()
            .any(|b| (t - b).abs() <= 1e-9 * total.max(1.0))
    };
    let mut times: Vec<f64> = (0..=count)
        .map(|k| k as f64 * stride)
        .filter(|&t| !near(t))
        .collect();
    times.extend(boundaries);
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
}

/// Runs one protocol and records populations over the eigenbasis of `H(t)`
/// every `stride` ns and at each segment boundary.
pub fn trace(
    path: &AnnealPath,
    anneal_ns: f64,
    tau_ns: f64,
    policy: &StepPolicy,
    stride: f64,
    start: TraceStart,
) -> Result<Vec<TracePoint>> {
    if !(stride > 0.0 && stride.is_finite()) {
        return Err(Error::arg(format!(
            "trace stride {stride} ns must be positive"
        )));
    }
    let sched = Schedule::new(anneal_ns, tau_ns)?;
    policy.check_against(&sched)?;
    let mut psi: QuantumState = match start {
        TraceStart::Superposition => initial_state_for(path.driver())?,
        TraceStart::DriverGround => diagonalize(path.driver())?.state(0),
    };
    let times = trace_times(&sched, stride);
    let mut points = Vec::with_capacity(times.len());
    for (k, &t) in times.iter().enumerate() {
        if k > 0 {
            psi = evolve_interval(&psi, times[k - 1], t, path, &sched, policy)?;
        }
        points.push(TracePoint {
            t_ns: t,
            schedule: schedule_value(t, &sched)?,
            populations: instantaneous_populations(&psi, t, path, &sched)?,
        });
    }
    Ok(points)
}
