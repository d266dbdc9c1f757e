//! The `run`, `oracle` and `trace` commands.

use std::path::{Path, PathBuf};
use std::time::Instant;

use ramsey_qa_core::oracle::Gap;
use ramsey_qa_core::spectrum::DcRegion;
use ramsey_qa_core::{
    build_problem, diagonalize, gaps, run_anneal, trace, AnnealOutcome, AnnealPath, CosineFit,
    ModelParams, TracePoint, TraceStart,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{self, ExperimentConfig, LoadedConfig};
use crate::output::{
    anneal_label, create_dir, csv_table, peak_entries, series_csv, spectrum_csv, to_json,
    write_file, PeakEntry,
};
use crate::CliError;

pub const SERIES_FILE: &str = "series.csv";
pub const SPECTRUM_FILE: &str = "spectrum.csv";
pub const PEAKS_FILE: &str = "peaks.json";
pub const REPORT_FILE: &str = "report.json";
pub const ORACLE_FILE: &str = "oracle.json";

fn model_params(config: &ExperimentConfig) -> Result<ModelParams, CliError> {
    config
        .model
        .params()
        .map_err(|e| CliError::Config(format!("model: {e}")))
}

/// Loads a configuration, letting `out` override its output directory.
pub fn load_config(path: &Path, out: Option<&Path>) -> Result<LoadedConfig, CliError> {
    let mut loaded = config::load(path)?;
    if let Some(dir) = out {
        loaded.config.output.dir = dir.to_path_buf();
        loaded
            .defaults_applied
            .retain(|d| !d.starts_with("output.dir"));
    }
    Ok(loaded)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Units {
    pub time: &'static str,
    pub frequency: &'static str,
    pub energy: &'static str,
}

pub const UNITS: Units = Units {
    time: "ns",
    frequency: "GHz",
    energy: "GHz (E/h)",
};

/// Eigenvalues and pairwise gaps of the problem Hamiltonian.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleReport {
    pub units: Units,
    pub energies: Vec<f64>,
    pub gaps: Vec<Gap>,
}

pub fn oracle_report(params: &ModelParams) -> Result<OracleReport, CliError> {
    let es = diagonalize(&build_problem(params)).map_err(|e| CliError::from_core("oracle", e))?;
    Ok(OracleReport {
        units: UNITS,
        energies: es.energies().to_vec(),
        gaps: gaps(&es).entries().to_vec(),
    })
}

/// The oracle as a plain-text table, 6 decimal places.
pub fn format_oracle(report: &OracleReport) -> String {
    let mut s = String::from("energies (GHz)\n");
    for (k, e) in report.energies.iter().enumerate() {
        s.push_str(&format!("  E{k:<3} {e:>12.6}\n"));
    }
    s.push_str("gaps (GHz)\n");
    for g in &report.gaps {
        s.push_str(&format!("  ({},{})  {:>12.6}\n", g.i, g.j, g.gap_ghz));
    }
    s
}

/// Prints nothing; writes `oracle.json` under the output directory.
pub fn oracle(loaded: &LoadedConfig) -> Result<(OracleReport, PathBuf), CliError> {
    let report = oracle_report(&model_params(&loaded.config)?)?;
    let dir = &loaded.config.output.dir;
    create_dir(dir)?;
    let path = write_file(&dir.join(ORACLE_FILE), &to_json(&report))?;
    Ok((report, path))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Timings {
    pub pipeline_s: f64,
    pub write_s: f64,
}

/// Results for one anneal time. Paths are relative to the report's directory.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnnealReport {
    pub anneal_ns: f64,
    pub series_csv: PathBuf,
    pub spectrum_csv: PathBuf,
    pub peaks_json: PathBuf,
    pub oracle_gaps: Vec<Gap>,
    pub dc: Option<DcRegion>,
    pub peaks: Vec<PeakEntry>,
    pub dominant_fit: Option<CosineFit>,
    pub ground_fit: Option<CosineFit>,
    pub populations_at_anneal_end: Vec<f64>,
    pub norm_drift: f64,
    pub timings: Timings,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub defaults_applied: Vec<String>,
    pub units: Units,
    pub energies: Vec<f64>,
    pub runs: Vec<AnnealReport>,
}

fn write_anneal(
    dir: &Path,
    outcome: &AnnealOutcome,
    pipeline_s: f64,
) -> Result<AnnealReport, CliError> {
    let start = Instant::now();
    let label = PathBuf::from(anneal_label(outcome.anneal_ns));
    create_dir(&dir.join(&label))?;
    let peaks = peak_entries(&outcome.analysis.peaks);
    let series = label.join(SERIES_FILE);
    let spectrum = label.join(SPECTRUM_FILE);
    let peaks_json = label.join(PEAKS_FILE);
    write_file(&dir.join(&series), &series_csv(&outcome.series))?;
    write_file(
        &dir.join(&spectrum),
        &spectrum_csv(&outcome.analysis.spectrum),
    )?;
    write_file(&dir.join(&peaks_json), &to_json(&peaks))?;
    Ok(AnnealReport {
        anneal_ns: outcome.anneal_ns,
        series_csv: series,
        spectrum_csv: spectrum,
        peaks_json,
        oracle_gaps: outcome.gaps.entries().to_vec(),
        dc: outcome.analysis.peaks.dc,
        peaks,
        dominant_fit: outcome.analysis.dominant_fit,
        ground_fit: outcome.analysis.ground_fit,
        populations_at_anneal_end: outcome.populations_at_anneal_end.clone(),
        norm_drift: outcome.norm_drift,
        timings: Timings {
            pipeline_s,
            write_s: start.elapsed().as_secs_f64(),
        },
    })
}

/// Runs the full pipeline for every anneal time in the configuration and
/// writes per-T files plus `report.json`. `jobs` bounds the worker threads.
pub fn run(loaded: &LoadedConfig, jobs: Option<usize>) -> Result<RunReport, CliError> {
    let config = &loaded.config;
    let params = model_params(config)?;
    let energies = oracle_report(&params)?.energies;
    let dir = &config.output.dir;
    create_dir(dir)?;

    let work = || {
        config
            .schedule
            .anneal_ns
            .par_iter()
            .map(|&anneal_ns| {
                let start = Instant::now();
                let outcome = run_anneal(
                    &params,
                    anneal_ns,
                    &config.grid,
                    &config.policy,
                    &config.spectrum,
                )
                .map_err(|e| CliError::from_core(format!("T = {anneal_ns} ns"), e))?;
                write_anneal(dir, &outcome, start.elapsed().as_secs_f64())
            })
            .collect::<Result<Vec<_>, CliError>>()
    };
    let runs = match jobs {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| CliError::Config(format!("--jobs {k}: {e}")))?
            .install(work)?,
        None => work()?,
    };

    let report = RunReport {
        config: config.clone(),
        defaults_applied: loaded.defaults_applied.clone(),
        units: UNITS,
        energies,
        runs,
    };
    write_file(&dir.join(REPORT_FILE), &to_json(&report))?;
    Ok(report)
}

/// One-line-per-T summary of a run.
pub fn format_run(report: &RunReport) -> String {
    let mut s = String::new();
    for r in &report.runs {
        s.push_str(&format!("T = {} ns\n", r.anneal_ns));
        for p in r.peaks.iter().take(5) {
            let m = match &p.matched {
                Some(m) => format!(
                    "gap ({},{}) {:.6} GHz, delta {:+.2e}",
                    m.i, m.j, m.gap_ghz, m.delta_ghz
                ),
                None => "unmatched".into(),
            };
            s.push_str(&format!(
                "  peak {:.6} GHz  |f| {:.4}  {m}\n",
                p.refined_nu_ghz, p.magnitude
            ));
        }
        if let Some(fit) = &r.dominant_fit {
            s.push_str(&format!(
                "  fit at {:.6} GHz: a {:.6}  b {:.6}  rms {:.2e}\n",
                fit.nu, fit.a, fit.b, fit.rms_residual
            ));
        }
        let pops: Vec<String> = r
            .populations_at_anneal_end
            .iter()
            .map(|p| format!("{p:.4}"))
            .collect();
        s.push_str(&format!("  populations at t = T: [{}]\n", pops.join(", ")));
    }
    s
}

#[derive(Clone, Debug)]
pub struct TraceOptions {
    pub tau_ns: f64,
    /// Restrict to one anneal time from the configuration.
    pub anneal_ns: Option<f64>,
    pub stride: Option<f64>,
    pub start: TraceStart,
}

#[derive(Clone, Debug)]
pub struct TraceResult {
    pub anneal_ns: f64,
    pub path: PathBuf,
    pub points: Vec<TracePoint>,
}

impl TraceResult {
    /// The sample at the end of the forward anneal.
    pub fn at_anneal_end(&self) -> Option<&TracePoint> {
        self.points.iter().find(|p| p.t_ns == self.anneal_ns)
    }
}

pub fn trace_file_name(anneal_ns: f64, tau_ns: f64) -> String {
    format!("trace_{}_tau{tau_ns}ns.csv", anneal_label(anneal_ns))
}

pub fn trace_csv(points: &[TracePoint]) -> String {
    let dim = points.first().map_or(0, |p| p.populations.values.len());
    let mut header = vec!["t_ns".to_string(), "schedule".to_string()];
    header.extend((0..dim).map(|k| format!("pop_{k}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    csv_table(
        &header,
        points.iter().map(|p| {
            let mut row = vec![p.t_ns, p.schedule];
            row.extend(&p.populations.values);
            row
        }),
    )
}

/// Records instantaneous eigen-populations for one protocol run per
/// selected anneal time and writes one CSV each.
pub fn trace_run(loaded: &LoadedConfig, opts: &TraceOptions) -> Result<Vec<TraceResult>, CliError> {
    let config = &loaded.config;
    let params = model_params(config)?;
    let path = AnnealPath::from_params(&params);
    let stride = opts.stride.unwrap_or(config.trace.stride);
    let times: Vec<f64> = match opts.anneal_ns {
        Some(t) => {
            if !config.schedule.anneal_ns.contains(&t) {
                return Err(CliError::Config(format!(
                    "--anneal {t} is not among schedule.T = {:?}",
                    config.schedule.anneal_ns
                )));
            }
            vec![t]
        }
        None => config.schedule.anneal_ns.clone(),
    };
    let dir = &config.output.dir;
    create_dir(dir)?;
    times
        .into_iter()
        .map(|anneal_ns| {
            let points = trace(
                &path,
                anneal_ns,
                opts.tau_ns,
                &config.policy,
                stride,
                opts.start,
            )
            .map_err(|e| {
                CliError::from_core(
                    format!("trace T = {anneal_ns} ns, tau = {} ns", opts.tau_ns),
                    e,
                )
            })?;
            let file = write_file(
                &dir.join(trace_file_name(anneal_ns, opts.tau_ns)),
                &trace_csv(&points),
            )?;
            Ok(TraceResult {
                anneal_ns,
                path: file,
                points,
            })
        })
        .collect()
}
