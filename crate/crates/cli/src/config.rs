//! Experiment configuration files.
//!
//! TOML with six sections. `model`, `schedule` and `grid` are mandatory and
//! have no defaults; `policy`, `spectrum`, `trace` and `output` fall back to
//! numerical defaults, each of which is recorded in
//! [`LoadedConfig::defaults_applied`]. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use ramsey_qa_core::evolution::{DEFAULT_DT_NS, DEFAULT_RENORM_TOLERANCE};
use ramsey_qa_core::{
    initial_state, ModelParams, Schedule, SpectrumSettings, StepPolicy, SweepGrid,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Environment variable naming the default output directory.
pub const OUTPUT_ENV: &str = "RAMSEY_QA_OUT";
pub const DEFAULT_OUTPUT_DIR: &str = "out";
pub const DEFAULT_TRACE_STRIDE_NS: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(rename = "L")]
    pub num_qubits: usize,
    pub lambda: Vec<f64>,
    pub omega: Vec<f64>,
    pub g: f64,
    pub g_prime: f64,
}

impl ModelSection {
    pub fn params(&self) -> Result<ModelParams, ramsey_qa_core::Error> {
        ModelParams::new(
            self.lambda.clone(),
            self.omega.clone(),
            self.g,
            self.g_prime,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    /// Anneal durations in ns, one pipeline run each.
    #[serde(rename = "T")]
    pub anneal_ns: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSettings {
    pub stride: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

/// A fully resolved configuration. This is what `report.json` echoes, and
/// the echo parses back into an identical value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    pub schedule: ScheduleSection,
    pub grid: SweepGrid,
    pub policy: StepPolicy,
    pub spectrum: SpectrumSettings,
    pub trace: TraceSettings,
    pub output: OutputSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchedule {
    #[serde(rename = "T")]
    anneal_ns: OneOrMany,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolicy {
    dt: Option<f64>,
    renorm_tolerance: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpectrum {
    nu_max: Option<f64>,
    nu_step: Option<f64>,
    dc_exclusion: Option<f64>,
    threshold_rel: Option<f64>,
    match_tolerance: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrace {
    stride: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: ModelSection,
    schedule: RawSchedule,
    grid: SweepGrid,
    #[serde(default)]
    policy: RawPolicy,
    #[serde(default)]
    spectrum: RawSpectrum,
    #[serde(default)]
    trace: RawTrace,
    #[serde(default)]
    output: RawOutput,
}

/// A parsed configuration plus the defaults that were filled in.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub defaults_applied: Vec<String>,
}

struct Defaults(Vec<String>);

impl Defaults {
    fn take<T: std::fmt::Debug>(&mut self, key: &str, given: Option<T>, default: T) -> T {
        given.unwrap_or_else(|| {
            self.0.push(format!("{key} = {default:?}"));
            default
        })
    }
}

fn invalid(origin: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{origin}: {msg}"))
}

/// Parses and validates configuration text. `origin` labels diagnostics.
pub fn parse(text: &str, origin: &str) -> Result<LoadedConfig, CliError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| invalid(origin, e))?;
    let mut d = Defaults(Vec::new());

    let anneal_ns = match raw.schedule.anneal_ns {
        OneOrMany::One(t) => vec![t],
        OneOrMany::Many(ts) => ts,
    };
    let bin = 1.0 / raw.grid.span();
    let config = ExperimentConfig {
        policy: StepPolicy {
            dt: d.take("policy.dt", raw.policy.dt, DEFAULT_DT_NS),
            renorm_tolerance: d.take(
                "policy.renorm_tolerance",
                raw.policy.renorm_tolerance,
                DEFAULT_RENORM_TOLERANCE,
            ),
        },
        spectrum: {
            let base = SpectrumSettings::for_grid(&raw.grid);
            let s = raw.spectrum;
            SpectrumSettings {
                nu_max: d.take("spectrum.nu_max", s.nu_max, base.nu_max),
                nu_step: d.take("spectrum.nu_step", s.nu_step, base.nu_step),
                dc_exclusion: d.take("spectrum.dc_exclusion", s.dc_exclusion, 3.0 * bin),
                threshold_rel: d.take(
                    "spectrum.threshold_rel",
                    s.threshold_rel,
                    base.threshold_rel,
                ),
                match_tolerance: d.take("spectrum.match_tolerance", s.match_tolerance, bin),
            }
        },
        trace: TraceSettings {
            stride: d.take("trace.stride", raw.trace.stride, DEFAULT_TRACE_STRIDE_NS),
        },
        output: OutputSection {
            dir: match raw.output.dir {
                Some(dir) => dir,
                None => {
                    let dir = std::env::var_os(OUTPUT_ENV)
                        .map(PathBuf::from)
                        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
                    d.0.push(format!("output.dir = {dir:?}"));
                    dir
                }
            },
        },
        model: raw.model,
        schedule: ScheduleSection { anneal_ns },
        grid: raw.grid,
    };
    validate(&config).map_err(|e| invalid(origin, e))?;
    Ok(LoadedConfig {
        config,
        defaults_applied: d.0,
    })
}

pub fn load(path: &Path) -> Result<LoadedConfig, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| invalid(&path.display().to_string(), e))?;
    parse(&text, &path.display().to_string())
}

/// Checks every invariant of the housed types, including that the driver
/// admits the protocol's initial state.
pub fn validate(config: &ExperimentConfig) -> Result<(), String> {
    let m = &config.model;
    if m.num_qubits != m.lambda.len() || m.num_qubits != m.omega.len() {
        return Err(format!(
            "model.L = {} but lambda has {} and omega has {} entries",
            m.num_qubits,
            m.lambda.len(),
            m.omega.len()
        ));
    }
    let params = m.params().map_err(|e| format!("model: {e}"))?;
    initial_state(&params).map_err(|e| format!("model: {e}"))?;

    if config.schedule.anneal_ns.is_empty() {
        return Err("schedule.T lists no anneal times".into());
    }
    let ts = &config.schedule.anneal_ns;
    if let Some(t) = ts
        .iter()
        .enumerate()
        .find_map(|(k, t)| ts[..k].contains(t).then_some(t))
    {
        return Err(format!("schedule.T lists {t} ns twice"));
    }
    config.grid.validate().map_err(|e| format!("grid: {e}"))?;
    for &t in &config.schedule.anneal_ns {
        let sched = Schedule::new(t, 0.0).map_err(|e| format!("schedule.T: {e}"))?;
        config
            .policy
            .check_against(&sched)
            .map_err(|e| format!("policy: {e}"))?;
    }
    let s = &config.spectrum;
    s.frequency_grid().map_err(|e| format!("spectrum: {e}"))?;
    if !(s.dc_exclusion >= 0.0) {
        return Err(format!(
            "spectrum.dc_exclusion = {} must be >= 0",
            s.dc_exclusion
        ));
    }
    if !(s.threshold_rel > 0.0 && s.threshold_rel <= 1.0) {
        return Err(format!(
            "spectrum.threshold_rel = {} must lie in (0, 1]",
            s.threshold_rel
        ));
    }
    if !(s.match_tolerance > 0.0) {
        return Err(format!(
            "spectrum.match_tolerance = {} must be positive",
            s.match_tolerance
        ));
    }
    if !(config.trace.stride > 0.0 && config.trace.stride.is_finite()) {
        return Err(format!(
            "trace.stride = {} must be positive",
            config.trace.stride
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[model]
L = 1
lambda = [1.0]
omega = [0.2]
g = 0.0
g_prime = 0.0

[schedule]
T = 150.0

[grid]
t_min = 0.0
t_max = 100.0
N = 2000

[output]
dir = "somewhere"
"#;

    #[test]
    fn minimal_config_gets_recorded_defaults() {
        let loaded = parse(MINIMAL, "minimal").unwrap();
        let c = &loaded.config;
        assert_eq!(c.schedule.anneal_ns, vec![150.0]);
        assert_eq!(c.policy, StepPolicy::default());
        assert!((c.spectrum.dc_exclusion - 0.03).abs() < 1e-15);
        assert_eq!(c.output.dir, PathBuf::from("somewhere"));
        assert_eq!(loaded.defaults_applied.len(), 8);
        assert!(loaded
            .defaults_applied
            .iter()
            .any(|d| d.starts_with("policy.dt")));
        assert!(!loaded
            .defaults_applied
            .iter()
            .any(|d| d.starts_with("output")));
    }

    #[test]
    fn resolved_config_round_trips_through_json() {
        let c = parse(MINIMAL, "minimal").unwrap().config;
        let json = serde_json::to_string(&c).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let text = MINIMAL.replace("g = 0.0", "g = 0.0\ng_primee = 1.0");
        let err = parse(&text, "typo.toml").unwrap_err().to_string();
        assert!(err.contains("typo.toml"), "{err}");
        assert!(err.contains("g_primee"), "{err}");
        assert!(err.contains("line"), "{err}");
        assert!(parse(&format!("{MINIMAL}\n[extra]\nx = 1\n"), "x").is_err());
    }

    #[test]
    fn physical_fields_are_mandatory() {
        let text = MINIMAL.replace("g_prime = 0.0\n", "");
        let err = parse(&text, "c").unwrap_err().to_string();
        assert!(err.contains("g_prime"), "{err}");
        assert!(parse(&MINIMAL.replace("[grid]", "[gridx]"), "c").is_err());
    }

    #[test]
    fn inconsistent_model_is_rejected() {
        let err = parse(&MINIMAL.replace("L = 1", "L = 2"), "c").unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
        assert!(err.to_string().contains("model.L"));
        assert!(parse(&MINIMAL.replace("lambda = [1.0]", "lambda = [0.0]"), "c").is_err());
    }

    #[test]
    fn degenerate_driver_is_a_config_error() {
        let text = MINIMAL
            .replace("L = 1", "L = 2")
            .replace("lambda = [1.0]", "lambda = [1.0, 1.0]")
            .replace("omega = [0.2]", "omega = [0.2, 0.24]");
        let err = parse(&text, "c").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("degenerate"));
    }

    #[test]
    fn list_of_anneal_times_and_policy_checks() {
        let text = MINIMAL.replace("T = 150.0", "T = [150.0, 75.0]");
        assert_eq!(
            parse(&text, "c").unwrap().config.schedule.anneal_ns,
            vec![150.0, 75.0]
        );
        let coarse = format!(
            "{}\n[policy]\ndt = 50.0\n",
            MINIMAL.replace("[output]\ndir = \"somewhere\"\n", "")
        );
        assert!(parse(&coarse, "c")
            .unwrap_err()
            .to_string()
            .contains("policy"));
        let bad_grid = MINIMAL.replace("N = 2000", "N = 1");
        assert!(parse(&bad_grid, "c").is_err());
    }
}
