//! Configuration-driven front end for the Ramsey anneal simulator.
//!
//! Three commands share one configuration file: `run` executes the full
//! sweep and spectral pipeline for every anneal time, `oracle` prints the
//! problem Hamiltonian's spectrum, and `trace` records eigen-populations
//! along a single protocol run.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

pub use config::{ExperimentConfig, LoadedConfig};

/// Exit status for a rejected configuration.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status for a numerical failure.
pub const EXIT_NUMERICAL: i32 = 3;
/// Exit status for an output file that could not be written.
pub const EXIT_IO: i32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numerical failure ({context}): {source}")]
    Numerical {
        context: String,
        #[source]
        source: ramsey_qa_core::Error,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numerical { .. } => EXIT_NUMERICAL,
            CliError::Io { .. } => EXIT_IO,
        }
    }

    /// Classifies a core error raised while working on `context`.
    pub(crate) fn from_core(context: impl Into<String>, source: ramsey_qa_core::Error) -> Self {
        use ramsey_qa_core::Error;
        let context = context.into();
        match source.root() {
            Error::Configuration(_) | Error::InvalidArgument(_) => {
                CliError::Config(format!("{context}: {source}"))
            }
            _ => CliError::Numerical { context, source },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ramsey_qa_core::Error;

    #[test]
    fn core_errors_map_to_exit_codes() {
        let sweep = Error::Sweep {
            tau_ns: 12.34,
            source: Box::new(Error::Numerical("norm drift 1e-3".into())),
        };
        let e = CliError::from_core("T = 150 ns", sweep);
        assert_eq!(e.exit_code(), EXIT_NUMERICAL);
        let msg = e.to_string();
        assert!(
            msg.contains("T = 150 ns") && msg.contains("tau = 12.34 ns"),
            "{msg}"
        );

        let stage = Error::Stage {
            stage: "spectrum",
            source: Box::new(Error::Numerical("singular fit".into())),
        };
        let msg = CliError::from_core("T = 75 ns", stage).to_string();
        assert!(msg.contains("spectrum stage"), "{msg}");

        let config = CliError::from_core("model", Error::Configuration("degenerate driver".into()));
        assert_eq!(config.exit_code(), EXIT_CONFIG);
        assert_eq!(
            CliError::from_core("x", Error::InvalidArgument("bad".into())).exit_code(),
            EXIT_CONFIG
        );
    }
}
