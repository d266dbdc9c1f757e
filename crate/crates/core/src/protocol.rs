//! The Ramsey-annealing measurement: prepare an equal superposition of the
//! two lowest driver levels, anneal forward for `T`, hold under the problem
//! Hamiltonian for `τ`, anneal back for `T`, and read out the overlap with
//! the initial state. Sweeping `τ` yields a signal oscillating at the problem
//! Hamiltonian's level spacings.

use std::f64::consts::TAU;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{propagate_interval, Direction, StepPolicy};
use crate::model::{AnnealPath, ModelParams, Schedule};
use crate::operators::{inner, CVector, HermitianOperator, QuantumState, C64};
use crate::oracle::{diagonalize, DEGENERACY_TOLERANCE};

/// Slack allowed on probabilities outside `[0, 1]` from roundoff.
pub const PROBABILITY_SLACK: f64 = 1e-9;

/// The uniform hold-time grid `τ_n = t_min + (n-1)(t_max - t_min)/(N-1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub t_min: f64,
    pub t_max: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

impl SweepGrid {
    pub fn new(t_min: f64, t_max: f64, n: usize) -> Result<Self> {
        let grid = Self { t_min, t_max, n };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::arg(format!(
                "sweep needs N >= 2 samples, got {}",
                self.n
            )));
        }
        if !(self.t_min >= 0.0 && self.t_max > self.t_min && self.t_max.is_finite()) {
            return Err(Error::arg(format!(
                "sweep range requires 0 <= t_min < t_max, got [{}, {}]",
                self.t_min, self.t_max
            )));
        }
        Ok(())
    }

    pub fn span(&self) -> f64 {
        self.t_max - self.t_min
    }

    /// Sample spacing `(t_max - t_min)/(N - 1)`.
    pub fn spacing(&self) -> f64 {
        self.span() / (self.n - 1) as f64
    }

    pub fn tau(&self, index: usize) -> f64 {
        if index + 1 == self.n {
            self.t_max
        } else {
            self.t_min + index as f64 * self.span() / (self.n - 1) as f64
        }
    }

    pub fn taus(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.tau(k)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RamseyRecord {
    pub tau_ns: f64,
    pub probability: f64,
}

/// Where a simulated series came from.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub params: ModelParams,
    pub anneal_ns: f64,
    pub policy: StepPolicy,
}

/// Readout probabilities against hold time, sorted by strictly increasing `τ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RamseySeries {
    records: Vec<RamseyRecord>,
    provenance: Option<Provenance>,
}

impl RamseySeries {
    /// Wraps measured or synthetic records. Probabilities must lie in
    /// `[0, 1]` and `τ` must strictly increase.
    pub fn from_records(records: Vec<RamseyRecord>) -> Result<Self> {
        if let Some(w) = records.windows(2).find(|w| !(w[1].tau_ns > w[0].tau_ns)) {
            return Err(Error::arg(format!(
                "series tau must strictly increase ({} then {})",
                w[0].tau_ns, w[1].tau_ns
            )));
        }
        if let Some(r) = records.iter().find(|r| {
            !(r.probability >= -PROBABILITY_SLACK && r.probability <= 1.0 + PROBABILITY_SLACK)
        }) {
            return Err(Error::arg(format!(
                "probability {} at tau = {} ns outside [0, 1]",
                r.probability, r.tau_ns
            )));
        }
        Ok(Self {
            records,
            provenance: None,
        })
    }

    /// Builds a series from `f(τ)` sampled on `grid`.
    pub fn from_fn(grid: &SweepGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_records(
            grid.taus()
                .into_iter()
                .map(|tau_ns| RamseyRecord {
                    tau_ns,
                    probability: f(tau_ns),
                })
                .collect(),
        )
    }

    pub fn records(&self) -> &[RamseyRecord] {
        &self.records
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn mean_probability(&self) -> f64 {
        self.records.iter().map(|r| r.probability).sum::<f64>() / self.records.len() as f64
    }
}

/// `(|E_0⟩ + |E_1⟩)/√2` over the two lowest phase-fixed eigenstates of `driver`.
pub fn initial_state_for(driver: &HermitianOperator) -> Result<QuantumState> {
    let es = diagonalize(driver)?;
    let e = es.energies();
    if e[1] - e[0] <= DEGENERACY_TOLERANCE || (e.len() > 2 && e[2] - e[1] <= DEGENERACY_TOLERANCE) {
        return Err(Error::Configuration(format!(
            "driver levels {:?} are degenerate among the lowest three, so the equal \
             superposition of its ground and first excited state is ill-defined; \
             use distinct driver amplitudes",
            &e[..e.len().min(3)]
        )));
    }
    let sum = es.states().column(0) + es.states().column(1);
    QuantumState::normalized(sum.into_owned())
}

/// The protocol's initial state for `params`.
pub fn initial_state(params: &ModelParams) -> Result<QuantumState> {
    initial_state_for(&crate::model::build_driver(params))
}

/// Everything observable from one full protocol run.
#[derive(Clone, Debug)]
pub struct ProtocolRun {
    pub probability: f64,
    pub initial: QuantumState,
    /// State at `t = T`, after the forward anneal.
    pub annealed: QuantumState,
    /// State at `t = 2T + τ`.
    pub final_state: QuantumState,
    /// Largest per-segment norm drift before renormalization.
    pub norm_drift: f64,
}

/// Runs forward anneal, hold and reverse anneal step by step on `path`.
pub fn run_protocol(
    path: &AnnealPath,
    anneal_ns: f64,
    tau_ns: f64,
    policy: &StepPolicy,
) -> Result<ProtocolRun> {
    let sched = Schedule::new(anneal_ns, tau_ns)?;
    policy.check_against(&sched)?;
    let initial = initial_state_for(path.driver())?;

    let forward = propagate_interval(
        &initial,
        0.0,
        anneal_ns,
        path,
        &sched,
        policy,
        Direction::Forward,
    )?;
    let mut drift = forward.norm_drift;
    let annealed = forward.state;
    let mut psi = annealed.clone();
    if tau_ns > 0.0 {
        let hold = propagate_interval(
            &psi,
            anneal_ns,
            sched.reverse_start(),
            path,
            &sched,
            policy,
            Direction::Forward,
        )?;
        drift = drift.max(hold.norm_drift);
        psi = hold.state;
    }
    let reverse = propagate_interval(
        &psi,
        sched.reverse_start(),
        sched.total_ns(),
        path,
        &sched,
        policy,
        Direction::Forward,
    )?;
    drift = drift.max(reverse.norm_drift);
    let final_state = reverse.state;
    let probability = inner(&initial, &final_state)?.norm_sqr();
    Ok(ProtocolRun {
        probability,
        initial,
        annealed,
        final_state,
        norm_drift: drift,
    })
}

/// `|⟨ψ₀|ψ(2T+τ)⟩|²` for one hold time.
pub fn run_once(
    params: &ModelParams,
    anneal_ns: f64,
    tau_ns: f64,
    policy: &StepPolicy,
) -> Result<f64> {
    run_protocol(&AnnealPath::from_params(params), anneal_ns, tau_ns, policy).map(|r| r.probability)
}

/// The τ-independent parts of the protocol, computed once per anneal time.
///
/// The forward anneal does not depend on `τ`, and the reverse anneal is the
/// same unitary `U_rev` for every `τ`. With `χ = U_rev†ψ₀` propagated once,
/// each hold time costs one diagonal phase in the problem eigenbasis:
/// `P(τ) = |Σ_k conj(χ_k)·e^{-i2πE_kτ}·ψ_k(T)|²`.
#[derive(Clone, Debug)]
pub struct RamseyPropagator {
    energies: Vec<f64>,
    annealed: CVector,
    readout: CVector,
    norm_drift: f64,
}

impl RamseyPropagator {
    pub fn new(path: &AnnealPath, anneal_ns: f64, policy: &StepPolicy) -> Result<Self> {
        let sched = Schedule::new(anneal_ns, 0.0)?;
        policy.check_against(&sched)?;
        let initial = initial_state_for(path.driver())?;
        let forward = propagate_interval(
            &initial,
            0.0,
            anneal_ns,
            path,
            &sched,
            policy,
            Direction::Forward,
        )?;
        let readout = propagate_interval(
            &initial,
            anneal_ns,
            sched.total_ns(),
            path,
            &sched,
            policy,
            Direction::Adjoint,
        )?;
        let problem = diagonalize(path.problem())?;
        Ok(Self {
            energies: problem.energies().to_vec(),
            annealed: problem.coefficients(forward.state.amplitudes()),
            readout: problem.coefficients(readout.state.amplitudes()),
            norm_drift: forward.norm_drift.max(readout.norm_drift),
        })
    }

    pub fn probability(&self, tau_ns: f64) -> f64 {
        let mut overlap = C64::new(0.0, 0.0);
        for ((&e, a), r) in self.energies.iter().zip(&self.annealed).zip(&self.readout) {
            overlap += r.conj() * a * C64::from_polar(1.0, -TAU * e * tau_ns);
        }
        overlap.norm_sqr()
    }

    /// Norm drift accumulated by the two propagated anneals.
    pub fn norm_drift(&self) -> f64 {
        self.norm_drift
    }

    /// Populations of the problem eigenstates right after the forward anneal.
    pub fn annealed_populations(&self) -> Vec<f64> {
        self.annealed.iter().map(|z| z.norm_sqr()).collect()
    }
}

/// Sweeps `τ` over `grid`, one protocol evaluation per grid point.
pub fn sweep(
    params: &ModelParams,
    anneal_ns: f64,
    grid: &SweepGrid,
    policy: &StepPolicy,
) -> Result<RamseySeries> {
    grid.validate()?;
    let path = AnnealPath::from_params(params);
    let propagator = RamseyPropagator::new(&path, anneal_ns, policy)?;
    sweep_with(&propagator, params, anneal_ns, grid, policy)
}

pub(crate) fn sweep_with(
    propagator: &RamseyPropagator,
    params: &ModelParams,
    anneal_ns: f64,
    grid: &SweepGrid,
    policy: &StepPolicy,
) -> Result<RamseySeries> {
    grid.validate()?;
    let records = grid
        .taus()
        .into_par_iter()
        .map(|tau_ns| {
            let probability = propagator.probability(tau_ns);
            if !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&probability) {
                return Err(Error::Sweep {
                    tau_ns,
                    source: Box::new(Error::numerical(format!(
                        "readout probability {probability} outside [0, 1]"
                    ))),
                });
            }
            Ok(RamseyRecord {
                tau_ns,
                probability,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut series = RamseySeries::from_records(records)?;
    series.provenance = Some(Provenance {
        params: params.clone(),
        anneal_ns,
        policy: *policy,
    });
    Ok(series)
}

/// Least-squares fit of `a + b·cos(2πντ + φ)` at fixed `ν`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CosineFit {
    pub a: f64,
    pub b: f64,
    pub phi: f64,
    pub nu: f64,
    pub rms_residual: f64,
}

impl CosineFit {
    pub fn eval(&self, tau_ns: f64) -> f64 {
        self.a + self.b * (TAU * self.nu * tau_ns + self.phi).cos()
    }
}

/// Fits offset, amplitude and phase of a cosine of known frequency `nu`
/// (GHz) through the normal equations of the linear model
/// `a + p·cos(2πντ) + q·sin(2πντ)`.
pub fn cosine_fit(series: &RamseySeries, nu: f64) -> Result<CosineFit> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::arg(format!(
            "fit frequency {nu} GHz must be positive"
        )));
    }
    if series.len() < 3 {
        return Err(Error::arg(format!(
            "cosine fit needs at least 3 records, got {}",
            series.len()
        )));
    }
    let mut normal = Matrix3::<f64>::zeros();
    let mut rhs = Vector3::<f64>::zeros();
    for r in series.records() {
        let (s, c) = (TAU * nu * r.tau_ns).sin_cos();
        let row = Vector3::new(1.0, c, s);
        normal += row * row.transpose();
        rhs += row * r.probability;
    }
    let eig = normal.symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if !(lo > 1e-10 * hi) {
        return Err(Error::numerical(format!(
            "normal equations singular at nu = {nu} GHz (eigenvalue ratio {:e}); \
             the frequency likely aliases the tau grid",
            lo / hi
        )));
    }
    let coeffs = normal
        .cholesky()
        .ok_or_else(|| Error::numerical("normal matrix not positive definite"))?
        .solve(&rhs);
    let (a, p, q) = (coeffs[0], coeffs[1], coeffs[2]);
    let b = p.hypot(q);
    let phi = if b == 0.0 { 0.0 } else { (-q).atan2(p) };
    let fit = CosineFit {
        a,
        b,
        phi,
        nu,
        rms_residual: 0.0,
    };
    let sq: f64 = series
        .records()
        .iter()
        .map(|r| (r.probability - fit.eval(r.tau_ns)).powi(2))
        .sum();
    Ok(CosineFit {
        rms_residual: (sq / series.len() as f64).sqrt(),
        ..fit
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_driver;
    use crate::oracle::gaps;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn reference_pair() -> ModelParams {
        ModelParams::new(vec![1.0, 10.7], vec![0.2, 0.24], 0.5, 1.05).unwrap()
    }

    fn single_qubit() -> ModelParams {
        ModelParams::new(vec![1.0], vec![0.2], 0.0, 0.0).unwrap()
    }

    fn ground_gap(params: &ModelParams) -> f64 {
        gaps(&diagonalize(&crate::model::build_problem(params)).unwrap())
            .ground_gap()
            .unwrap()
    }

    #[test]
    fn grid_samples() {
        let g = SweepGrid::new(0.0, 100.0, 10_000).unwrap();
        assert_eq!(g.tau(0), 0.0);
        assert_eq!(g.tau(9_999), 100.0);
        assert_abs_diff_eq!(g.tau(1), 100.0 / 9_999.0);
        assert!(SweepGrid::new(0.0, 1.0, 1).is_err());
        assert!(SweepGrid::new(1.0, 1.0, 5).is_err());
        assert!(SweepGrid::new(-1.0, 1.0, 5).is_err());
    }

    #[test]
    fn series_validation() {
        let rec = |tau_ns, probability| RamseyRecord {
            tau_ns,
            probability,
        };
        assert!(RamseySeries::from_records(vec![rec(0.0, 0.5), rec(0.0, 0.5)]).is_err());
        assert!(RamseySeries::from_records(vec![rec(0.0, 1.1)]).is_err());
        assert!(RamseySeries::from_records(vec![rec(0.0, 1.0 + 1e-10), rec(1.0, -1e-10)]).is_ok());
    }

    #[test]
    fn single_qubit_initial_state_is_z_up() {
        let psi = initial_state(&single_qubit()).unwrap();
        assert!(
            (psi.amplitudes() - QuantumState::basis(1, 0).unwrap().amplitudes()).norm() < 1e-12
        );
    }

    #[test]
    fn pair_initial_state_is_up_times_minus() {
        let psi = initial_state(&reference_pair()).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let want = CVector::from_vec([h, -h, 0.0, 0.0].map(|v| C64::new(v, 0.0)).to_vec());
        assert!((psi.amplitudes() - want).norm() < 1e-12);
    }

    #[test]
    fn equal_driver_amplitudes_are_rejected() {
        let p = ModelParams::new(vec![1.0, 1.0], vec![0.2, 0.24], 0.5, 1.05).unwrap();
        let err = initial_state(&p).unwrap_err();
        assert!(matches!(err, Error::Configuration(_)));
        assert!(err.to_string().contains("degenerate"));
        assert!(run_once(&p, 10.0, 0.0, &StepPolicy::default()).is_err());
    }

    #[test]
    fn probabilities_are_bounded() {
        let p = reference_pair();
        for (anneal, tau) in [(12.5, 0.0), (5.0, 3.3), (20.0, 1.0)] {
            let prob = run_once(&p, anneal, tau, &StepPolicy::default()).unwrap();
            assert!((-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&prob));
        }
    }

    #[test]
    fn factorized_sweep_matches_full_runs() {
        let p = reference_pair();
        let policy = StepPolicy::default();
        let grid = SweepGrid::new(0.0, 9.0, 4).unwrap();
        let series = sweep(&p, 12.5, &grid, &policy).unwrap();
        for r in series.records() {
            let full = run_once(&p, 12.5, r.tau_ns, &policy).unwrap();
            assert_abs_diff_eq!(r.probability, full, epsilon = 1e-9);
        }
        let prov = series.provenance().unwrap();
        assert_eq!(prov.anneal_ns, 12.5);
        assert_eq!(prov.params, p);
    }

    #[test]
    fn two_point_sweep() {
        let grid = SweepGrid::new(1.0, 2.0, 2).unwrap();
        let series = sweep(&reference_pair(), 5.0, &grid, &StepPolicy::default()).unwrap();
        let taus: Vec<f64> = series.records().iter().map(|r| r.tau_ns).collect();
        assert_eq!(taus, vec![1.0, 2.0]);
    }

    #[test]
    fn sweep_is_order_independent() {
        let p = reference_pair();
        let policy = StepPolicy::default();
        let grid = SweepGrid::new(0.0, 50.0, 501).unwrap();
        let a = sweep(&p, 12.5, &grid, &policy).unwrap();
        let b = sweep(&p, 12.5, &grid, &policy).unwrap();
        assert_eq!(a, b);

        let propagator =
            RamseyPropagator::new(&AnnealPath::from_params(&p), 12.5, &policy).unwrap();
        let mut order: Vec<usize> = (0..grid.n).collect();
        order.reverse();
        order.rotate_left(137);
        let mut permuted = vec![0.0; grid.n];
        for k in order {
            permuted[k] = propagator.probability(grid.tau(k));
        }
        for (r, q) in a.records().iter().zip(&permuted) {
            assert_eq!(r.probability, *q);
        }
    }

    #[test]
    fn two_level_signal_is_a_single_cosine_at_the_gap() {
        let p = single_qubit();
        let gap = ground_gap(&p);
        assert_abs_diff_eq!(gap, 0.2, epsilon = 1e-14);
        let grid = SweepGrid::new(0.0, 100.0, 2_000).unwrap();
        let series = sweep(&p, 150.0, &grid, &StepPolicy::default()).unwrap();
        let fit = cosine_fit(&series, gap).unwrap();
        assert!(fit.rms_residual <= 1e-10, "residual {}", fit.rms_residual);
        assert!(fit.b > 0.4);
        let off = cosine_fit(&series, gap * 1.05).unwrap();
        assert!(off.rms_residual > 0.1);
    }

    #[test]
    fn reversibility_when_problem_equals_driver() {
        // With H_P = H_D the schedule is inert and the two driver levels only
        // pick up relative phase 2π·ΔE·2T, giving P = cos²(2π·ΔE·T).
        let p = reference_pair();
        let driver = build_driver(&p);
        let path = AnnealPath::new(driver.clone(), driver).unwrap();
        let delta = 1.0;
        for anneal in [1.0, 2.5, 7.3, 12.5] {
            let run = run_protocol(&path, anneal, 0.0, &StepPolicy::default()).unwrap();
            let want = (TAU * delta * anneal).cos().powi(2);
            assert_abs_diff_eq!(run.probability, want, epsilon = 1e-9);
        }
        let run = run_protocol(&path, 3.0, 0.0, &StepPolicy::default()).unwrap();
        assert_abs_diff_eq!(run.probability, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn near_adiabatic_signal_repeats_after_one_gap_period() {
        let p = reference_pair();
        let gap = ground_gap(&p);
        let policy = StepPolicy::default();
        let grid = SweepGrid::new(0.0, 100.0, 10_000).unwrap();
        let series = sweep(&p, 150.0, &grid, &policy).unwrap();
        let fit = cosine_fit(&series, gap).unwrap();
        let propagator =
            RamseyPropagator::new(&AnnealPath::from_params(&p), 150.0, &policy).unwrap();
        for tau in [0.0, 13.7, 42.0, 77.7] {
            let d = propagator.probability(tau + 1.0 / gap) - propagator.probability(tau);
            assert!(
                d.abs() <= fit.rms_residual,
                "tau {tau}: {d} vs {}",
                fit.rms_residual
            );
        }
        assert!(fit.rms_residual < 0.05 * fit.b);
        assert!((fit.a - 0.5).abs() > 1e-4 && (fit.b - 0.5).abs() > 1e-4);
    }

    #[test]
    fn fit_rejects_bad_input() {
        let grid = SweepGrid::new(0.0, 10.0, 21).unwrap();
        let series = RamseySeries::from_fn(&grid, |_| 0.5).unwrap();
        assert!(cosine_fit(&series, 0.0).is_err());
        let short = RamseySeries::from_fn(&SweepGrid::new(0.0, 1.0, 2).unwrap(), |_| 0.5).unwrap();
        assert!(cosine_fit(&short, 1.0).is_err());
        // Spacing 0.5 ns and ν = 2 GHz: every sample sits on the same phase.
        assert!(matches!(cosine_fit(&series, 2.0), Err(Error::Numerical(_))));
    }

    #[test]
    fn constant_series_fits_zero_amplitude() {
        let grid = SweepGrid::new(0.0, 10.0, 101).unwrap();
        let series = RamseySeries::from_fn(&grid, |_| 0.37).unwrap();
        let fit = cosine_fit(&series, 0.73).unwrap();
        assert!(fit.b < 1e-12);
        assert_abs_diff_eq!(fit.a, 0.37, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn fit_recovers_exact_cosines(
            a in 0.3f64..0.7,
            b in 0.01f64..0.3,
            phi in -3.1f64..3.1,
            nu in 0.1f64..3.0,
        ) {
            let grid = SweepGrid::new(0.0, 100.0, 1_000).unwrap();
            let series = RamseySeries::from_fn(&grid, |t| a + b * (TAU * nu * t + phi).cos()).unwrap();
            let fit = cosine_fit(&series, nu).unwrap();
            prop_assert!((fit.a - a).abs() < 1e-10);
            prop_assert!((fit.b - b).abs() < 1e-10);
            let dphi = (fit.phi - phi + std::f64::consts::PI).rem_euclid(TAU) - std::f64::consts::PI;
            prop_assert!(dphi.abs() < 1e-8);
            prop_assert!(fit.rms_residual <= 1e-10);
        }
    }
}
