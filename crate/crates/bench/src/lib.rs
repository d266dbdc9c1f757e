//! Shared fixtures for the criterion benchmarks under `benches/`.

use ramsey_qa_core::{ModelParams, RamseySeries, StepPolicy, SweepGrid};

/// The two-qubit reference chain.
pub fn reference_params() -> ModelParams {
    ModelParams::new(vec![1.0, 10.7], vec![0.2, 0.24], 0.5, 1.05).expect("valid parameters")
}

/// The full-resolution hold-time grid: 10 000 points over 100 ns.
pub fn reference_grid() -> SweepGrid {
    SweepGrid::new(0.0, 100.0, 10_000).expect("valid grid")
}

pub fn reference_policy() -> StepPolicy {
    StepPolicy::default()
}

/// A synthetic two-tone series on `grid`, cheap to build.
pub fn synthetic_series(grid: &SweepGrid) -> RamseySeries {
    RamseySeries::from_fn(grid, |t| {
        let phase = 2.0 * std::f64::consts::PI * t;
        0.5 + 0.3 * (1.83019 * phase).cos() + 0.15 * (0.27019 * phase).cos()
    })
    .expect("probabilities in range")
}
