//! Simulation of Ramsey-interferometric quantum annealing for direct
//! estimation of spectral gaps.
//!
//! A superposition of the two lowest driver levels is annealed onto the
//! problem Hamiltonian, held for a variable time `τ`, annealed back and
//! projected onto the initial state. The readout oscillates in `τ` at the
//! problem Hamiltonian's level spacings; a Fourier transform of the sweep
//! recovers them, and exact diagonalization supplies the reference values.
//!
//! Units: frequencies and energies in GHz (linear, `E/h`), times in ns.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evolution;
pub mod model;
pub mod operators;
pub mod oracle;
pub mod pipeline;
pub mod protocol;
pub mod spectrum;

pub use error::{Error, Result};
pub use evolution::{evolve_interval, evolve_interval_adjoint, step, StepPolicy};
pub use model::{
    build_driver, build_problem, hamiltonian_at, schedule_value, AnnealPath, ModelParams, Schedule,
};
pub use operators::{apply, embed, inner, pauli, HermitianOperator, Pauli, QuantumState};
pub use oracle::{
    diagonalize, gaps, instantaneous_populations, EigenSystem, GapTable, Populations,
};
pub use pipeline::{
    analyze, run_anneal, trace, Analysis, AnnealOutcome, SpectrumSettings, TracePoint, TraceStart,
};
pub use protocol::{
    cosine_fit, initial_state, run_once, run_protocol, sweep, CosineFit, RamseyPropagator,
    RamseyRecord, RamseySeries, SweepGrid,
};
pub use spectrum::{
    dft, find_peaks, match_to_oracle, refine_peak, FrequencyGrid, PeakReport, Spectrum,
};
