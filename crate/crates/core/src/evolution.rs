//! Unitary propagation under the piecewise-linear anneal Hamiltonian.
//!
//! Each step applies `exp(-i·2π·H(t_mid)·h)` exactly through an
//! eigendecomposition of the midpoint Hamiltonian, which makes the scheme
//! unconditionally unitary and second-order accurate in `h`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{schedule_value, AnnealPath, Schedule};
use crate::operators::{CMatrix, CVector, HermitianOperator, QuantumState, C64};
use crate::oracle::eigh;

pub const DEFAULT_DT_NS: f64 = 1e-3;
pub const DEFAULT_RENORM_TOLERANCE: f64 = 1e-9;

/// Step size and allowed end-of-segment norm drift.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepPolicy {
    pub dt: f64,
    pub renorm_tolerance: f64,
}

impl Default for StepPolicy {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT_NS,
            renorm_tolerance: DEFAULT_RENORM_TOLERANCE,
        }
    }
}

impl StepPolicy {
    pub fn new(dt: f64, renorm_tolerance: f64) -> Result<Self> {
        let policy = Self {
            dt,
            renorm_tolerance,
        };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::arg(format!("dt = {} ns must be positive", self.dt)));
        }
        if !(self.renorm_tolerance > 0.0 && self.renorm_tolerance <= 1e-6) {
            return Err(Error::arg(format!(
                "renorm_tolerance = {} must lie in (0, 1e-6]",
                self.renorm_tolerance
            )));
        }
        Ok(())
    }

    /// `dt` must resolve the run: at most a tenth of `2T + τ`.
    pub fn check_against(&self, sched: &Schedule) -> Result<()> {
        self.validate()?;
        if self.dt > sched.total_ns() / 10.0 {
            return Err(Error::arg(format!(
                "dt = {} ns is coarser than a tenth of the {} ns protocol",
                self.dt,
                sched.total_ns()
            )));
        }
        Ok(())
    }
}

/// Direction of propagation through an interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// `U(t1, t0)ψ`.
    Forward,
    /// `U(t1, t0)†ψ`: the same steps, inverted and in reverse order.
    Adjoint,
}

/// Result of propagating over one interval.
#[derive(Clone, Debug)]
pub struct Propagated {
    pub state: QuantumState,
    /// `|‖ψ‖ - 1|` before the end-of-interval renormalization.
    pub norm_drift: f64,
    pub steps: usize,
}

/// `V·diag(e^{-i·sign·2π·E·h})·V†·ψ`.
fn apply_exponential(
    energies: &[f64],
    vectors: &CMatrix,
    h: f64,
    sign: f64,
    psi: &CVector,
) -> CVector {
    let mut coeffs = vectors.ad_mul(psi);
    for (c, &e) in coeffs.iter_mut().zip(energies) {
        *c *= C64::from_polar(1.0, -sign * TAU * e * h);
    }
    vectors * coeffs
}

/// One exact step `exp(-i·2π·H·dt)·ψ` for constant `H`.
pub fn step(state: &QuantumState, h_mid: &HermitianOperator, dt: f64) -> Result<QuantumState> {
    if h_mid.dim() != state.dim() {
        return Err(Error::arg(format!(
            "Hamiltonian of dimension {} applied to state of dimension {}",
            h_mid.dim(),
            state.dim()
        )));
    }
    let (energies, vectors) = eigh(h_mid.matrix())?;
    QuantumState::new(apply_exponential(
        &energies,
        &vectors,
        dt,
        1.0,
        state.amplitudes(),
    ))
}

/// Number of equal steps no longer than `dt` that cover `length`.
fn step_count(length: f64, dt: f64) -> usize {
    ((length / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

/// Propagates `state` over `[t0, t1]` in the given direction, renormalizing
/// once at the end if the drift is within the policy's tolerance.
pub fn propagate_interval(
    state: &QuantumState,
    t0: f64,
    t1: f64,
    path: &AnnealPath,
    sched: &Schedule,
    policy: &StepPolicy,
    direction: Direction,
) -> Result<Propagated> {
    policy.validate()?;
    if path.driver().dim() != state.dim() {
        return Err(Error::arg(format!(
            "path of dimension {} applied to state of dimension {}",
            path.driver().dim(),
            state.dim()
        )));
    }
    let t0 = sched.check_time(t0)?;
    let t1 = sched.check_time(t1)?;
    if t1 <= t0 {
        return Err(Error::arg(format!("empty interval [{t0}, {t1}] ns")));
    }

    let steps = step_count(t1 - t0, policy.dt);
    let h = (t1 - t0) / steps as f64;
    let (sign, order): (f64, Box<dyn Iterator<Item = usize>>) = match direction {
        Direction::Forward => (1.0, Box::new(0..steps)),
        Direction::Adjoint => (-1.0, Box::new((0..steps).rev())),
    };

    let mut psi = state.amplitudes().clone();
    // The hold segment repeats A = 0, so consecutive equal schedule values
    // reuse the previous decomposition.
    let mut cached: Option<(f64, Vec<f64>, CMatrix)> = None;
    for k in order {
        let t_mid = t0 + (k as f64 + 0.5) * h;
        let a = schedule_value(t_mid, sched)?;
        if cached.as_ref().map_or(true, |(prev, _, _)| *prev != a) {
            let (e, v) = eigh(path.mix(a).matrix())
                .map_err(|err| Error::numerical(format!("at t = {t_mid} ns: {err}")))?;
            cached = Some((a, e, v));
        }
        let (_, energies, vectors) = cached.as_ref().expect("filled above");
        psi = apply_exponential(energies, vectors, h, sign, &psi);
    }

    let norm = psi.norm();
    let norm_drift = (norm - 1.0).abs();
    if !(norm_drift <= policy.renorm_tolerance) {
        return Err(Error::numerical(format!(
            "norm drifted by {norm_drift:e} over [{t0}, {t1}] ns (tolerance {:e})",
            policy.renorm_tolerance
        )));
    }
    Ok(Propagated {
        state: QuantumState::new(psi.unscale(norm))?,
        norm_drift,
        steps,
    })
}

/// `U(t1, t0)·ψ` with the midpoint-exponential scheme.
pub fn evolve_interval(
    state: &QuantumState,
    t0: f64,
    t1: f64,
    path: &AnnealPath,
    sched: &Schedule,
    policy: &StepPolicy,
) -> Result<QuantumState> {
    propagate_interval(state, t0, t1, path, sched, policy, Direction::Forward).map(|p| p.state)
}

/// `U(t1, t0)†·ψ`, undoing [`evolve_interval`] over the same interval.
pub fn evolve_interval_adjoint(
    state: &QuantumState,
    t0: f64,
    t1: f64,
    path: &AnnealPath,
    sched: &Schedule,
    policy: &StepPolicy,
) -> Result<QuantumState> {
    propagate_interval(state, t0, t1, path, sched, policy, Direction::Adjoint).map(|p| p.state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;
    use crate::operators::{apply, inner, pauli, Pauli};
    use crate::oracle::{diagonalize, populations};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn reference_pair() -> ModelParams {
        ModelParams::new(vec![1.0, 10.7], vec![0.2, 0.24], 0.5, 1.05).unwrap()
    }

    fn plus_state() -> QuantumState {
        QuantumState::normalized(CVector::from_vec(vec![C64::new(1.0, 0.0); 2])).unwrap()
    }

    fn constant_path(h: HermitianOperator) -> AnnealPath {
        AnnealPath::new(h.clone(), h).unwrap()
    }

    #[test]
    fn zero_hamiltonian_is_identity() {
        let psi = plus_state();
        let out = step(&psi, &HermitianOperator::zeros(1), 0.37).unwrap();
        assert!((out.amplitudes() - psi.amplitudes()).norm() < 1e-15);
    }

    #[test]
    fn larmor_precession() {
        let nu = 0.8;
        let h = HermitianOperator::new(pauli(Pauli::Z).scale(nu / 2.0)).unwrap();
        let x = pauli(Pauli::X);
        let dt = 0.01;
        let mut psi = plus_state();
        for n in 1..=500 {
            psi = step(&psi, &h, dt).unwrap();
            let t = n as f64 * dt;
            let sx = psi.amplitudes().dotc(&apply(&x, &psi).unwrap()).re;
            assert_abs_diff_eq!(sx, (TAU * nu * t).cos(), epsilon = 1e-11);
        }
    }

    #[test]
    fn single_step_interval_matches_step() {
        let p = reference_pair();
        let path = AnnealPath::from_params(&p);
        let sched = Schedule::new(10.0, 4.0).unwrap();
        let policy = StepPolicy::new(0.5, 1e-9).unwrap();
        let psi = QuantumState::basis(2, 1).unwrap();
        let out = evolve_interval(&psi, 11.0, 11.5, &path, &sched, &policy).unwrap();
        let direct = step(&psi, path.problem(), 0.5).unwrap();
        assert!((out.amplitudes() - direct.amplitudes()).norm() < 1e-14);
    }

    #[test]
    fn hold_on_eigenstate_is_stationary() {
        let p = reference_pair();
        let path = AnnealPath::from_params(&p);
        let tau = 7.3;
        let sched = Schedule::new(5.0, tau).unwrap();
        let es = diagonalize(path.problem()).unwrap();
        for k in 0..4 {
            let psi = es.state(k);
            let out = evolve_interval(&psi, 5.0, 5.0 + tau, &path, &sched, &StepPolicy::default())
                .unwrap();
            let expected = psi.with_global_phase(-TAU * es.energies()[k] * tau);
            assert!((out.amplitudes() - expected.amplitudes()).norm() < 1e-9);
        }
    }

    #[test]
    fn interval_preconditions() {
        let path = AnnealPath::from_params(&reference_pair());
        let sched = Schedule::new(10.0, 0.0).unwrap();
        let psi = QuantumState::basis(2, 0).unwrap();
        let policy = StepPolicy::default();
        assert!(evolve_interval(&psi, 3.0, 3.0, &path, &sched, &policy).is_err());
        assert!(evolve_interval(&psi, 5.0, 3.0, &path, &sched, &policy).is_err());
        assert!(evolve_interval(&psi, 0.0, 25.0, &path, &sched, &policy).is_err());
        let wrong_dim = QuantumState::basis(1, 0).unwrap();
        assert!(evolve_interval(&wrong_dim, 0.0, 1.0, &path, &sched, &policy).is_err());
        assert!(StepPolicy::new(0.0, 1e-9).is_err());
        assert!(StepPolicy::new(1e-3, 1e-3).is_err());
        assert!(StepPolicy::new(3.0, 1e-9)
            .unwrap()
            .check_against(&sched)
            .is_err());
    }

    #[test]
    fn step_count_is_robust_to_roundoff() {
        assert_eq!(step_count(150.0, 1e-3), 150_000);
        assert_eq!(step_count(0.3, 0.1), 3);
        assert_eq!(step_count(0.31, 0.1), 4);
        assert_eq!(step_count(1e-6, 1e-3), 1);
    }

    #[test]
    fn forward_anneal_from_driver_ground_state() {
        // Values from an independent dense-matrix propagator (numpy) at
        // dt = 1e-3 ns: T = 150 ns leaves 0.98772 in the ground state,
        // T = 300 ns leaves 0.99986.
        let p = reference_pair();
        let path = AnnealPath::from_params(&p);
        let ground = diagonalize(path.driver()).unwrap().state(0);
        let problem = diagonalize(path.problem()).unwrap();
        for (anneal, expected) in [(150.0, 0.98772), (300.0, 0.99986)] {
            let sched = Schedule::new(anneal, 0.0).unwrap();
            let psi = evolve_interval(&ground, 0.0, anneal, &path, &sched, &StepPolicy::default())
                .unwrap();
            let pops = populations(&problem, &psi).unwrap();
            assert_abs_diff_eq!(pops.values[0], expected, epsilon = 5e-5);
        }
    }

    #[test]
    fn forward_then_adjoint_returns_initial_state() {
        let p = reference_pair();
        let path = AnnealPath::from_params(&p);
        let sched = Schedule::new(12.5, 3.0).unwrap();
        let policy = StepPolicy::default();
        let psi = QuantumState::normalized(CVector::from_vec(vec![
            C64::new(0.3, 0.2),
            C64::new(-0.5, 0.1),
            C64::new(0.2, -0.7),
            C64::new(0.1, 0.0),
        ]))
        .unwrap();
        let there = evolve_interval(&psi, 0.0, sched.total_ns(), &path, &sched, &policy).unwrap();
        let back =
            evolve_interval_adjoint(&there, 0.0, sched.total_ns(), &path, &sched, &policy).unwrap();
        assert!((back.amplitudes() - psi.amplitudes()).norm() < 1e-6);
        assert!((inner(&back, &psi).unwrap().norm() - 1.0).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn steps_are_unitary(
            entries in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 16),
            amps in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 4),
            dt in 1e-4f64..1.0,
        ) {
            let m = CMatrix::from_iterator(4, 4, entries.into_iter().map(|(a, b)| C64::new(a, b)));
            let h = HermitianOperator::new((&m + m.adjoint()).unscale(2.0)).unwrap();
            let v = CVector::from_iterator(4, amps.into_iter().map(|(a, b)| C64::new(a, b)));
            prop_assume!(v.norm() > 1e-3);
            let psi = QuantumState::normalized(v).unwrap();
            let out = step(&psi, &h, dt).unwrap();
            prop_assert!((out.norm() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn constant_segments_match_one_exact_step(
            nu in 0.1f64..3.0,
            length in 0.5f64..5.0,
        ) {
            let h = HermitianOperator::new(pauli(Pauli::X).scale(nu / 2.0)).unwrap();
            let path = constant_path(h.clone());
            let sched = Schedule::new(length, 0.0).unwrap();
            let psi = QuantumState::basis(1, 0).unwrap();
            let stepped = evolve_interval(&psi, 0.0, length, &path, &sched, &StepPolicy::new(0.01, 1e-9).unwrap()).unwrap();
            let exact = step(&psi, &h, length).unwrap();
            prop_assert!((stepped.amplitudes() - exact.amplitudes()).norm() <= 1e-10);
        }
    }
}
