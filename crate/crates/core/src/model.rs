//! Physical parameters, the anneal schedule `A(t)` and the Hamiltonians it
//! interpolates between.
//!
//! Every coefficient is a linear frequency in GHz and every time is in ns.
//! Operators returned here are in GHz; the propagator multiplies by `2π`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{embed, pauli, CMatrix, HermitianOperator, Pauli};

/// Coefficients of the transverse-field driver and the open-chain problem
/// Hamiltonian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModelParams")]
pub struct ModelParams {
    lambda: Vec<f64>,
    omega: Vec<f64>,
    g: f64,
    g_prime: f64,
}

#[derive(Deserialize)]
struct RawModelParams {
    lambda: Vec<f64>,
    omega: Vec<f64>,
    g: f64,
    g_prime: f64,
}

impl TryFrom<RawModelParams> for ModelParams {
    type Error = Error;

    fn try_from(raw: RawModelParams) -> Result<Self> {
        ModelParams::new(raw.lambda, raw.omega, raw.g, raw.g_prime)
    }
}

impl ModelParams {
    /// `lambda` and `omega` hold one driver amplitude and one qubit frequency
    /// per qubit (GHz); `g` and `g_prime` are the Ising and flip-flop
    /// couplings (GHz).
    pub fn new(lambda: Vec<f64>, omega: Vec<f64>, g: f64, g_prime: f64) -> Result<Self> {
        if lambda.is_empty() {
            return Err(Error::Configuration(
                "at least one qubit is required".into(),
            ));
        }
        if lambda.len() != omega.len() {
            return Err(Error::Configuration(format!(
                "lambda has {} entries but omega has {}",
                lambda.len(),
                omega.len()
            )));
        }
        if lambda.len() > 12 {
            return Err(Error::Configuration(format!(
                "{} qubits exceeds the dense-matrix limit of 12",
                lambda.len()
            )));
        }
        if let Some((j, l)) = lambda
            .iter()
            .enumerate()
            .find(|(_, l)| !(**l > 0.0 && l.is_finite()))
        {
            return Err(Error::Configuration(format!(
                "lambda[{}] = {l} must be positive and finite",
                j + 1
            )));
        }
        if omega.iter().chain([&g, &g_prime]).any(|v| !v.is_finite()) {
            return Err(Error::Configuration(
                "non-finite frequency or coupling".into(),
            ));
        }
        Ok(Self {
            lambda,
            omega,
            g,
            g_prime,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.lambda.len()
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn g_prime(&self) -> f64 {
        self.g_prime
    }
}

/// Anneal duration `T` and Ramsey hold `τ`, both in ns.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Schedule {
    anneal_ns: f64,
    hold_ns: f64,
}

impl Schedule {
    pub fn new(anneal_ns: f64, hold_ns: f64) -> Result<Self> {
        if !(anneal_ns > 0.0 && anneal_ns.is_finite()) {
            return Err(Error::arg(format!(
                "anneal time T = {anneal_ns} ns must be positive"
            )));
        }
        if !(hold_ns >= 0.0 && hold_ns.is_finite()) {
            return Err(Error::arg(format!(
                "hold time tau = {hold_ns} ns must be non-negative"
            )));
        }
        Ok(Self { anneal_ns, hold_ns })
    }

    pub fn anneal_ns(&self) -> f64 {
        self.anneal_ns
    }

    pub fn hold_ns(&self) -> f64 {
        self.hold_ns
    }

    /// Start of the reverse anneal, `T + τ`.
    pub fn reverse_start(&self) -> f64 {
        self.anneal_ns + self.hold_ns
    }

    /// `2T + τ`.
    pub fn total_ns(&self) -> f64 {
        2.0 * self.anneal_ns + self.hold_ns
    }

    /// Rejects `t` outside `[0, 2T+τ]`, tolerating roundoff at the ends.
    pub(crate) fn check_time(&self, t: f64) -> Result<f64> {
        let total = self.total_ns();
        let slop = 1e-12 * total;
        if !(t >= -slop && t <= total + slop) {
            return Err(Error::arg(format!("t = {t} ns outside [0, {total}] ns")));
        }
        Ok(t.clamp(0.0, total))
    }
}

/// `A(t)`: `1 - t/T` on the forward anneal, 0 during the hold, and
/// `(t - T - τ)/T` on the reverse anneal.
pub fn schedule_value(t: f64, sched: &Schedule) -> Result<f64> {
    let t = sched.check_time(t)?;
    let big_t = sched.anneal_ns;
    let value = if t <= big_t {
        1.0 - t / big_t
    } else if t <= sched.reverse_start() {
        0.0
    } else {
        (t - sched.reverse_start()) / big_t
    };
    Ok(value.clamp(0.0, 1.0))
}

/// `Σ_j (λ_j/2) X_j`.
pub fn build_driver(params: &ModelParams) -> HermitianOperator {
    let n = params.num_qubits();
    let x = pauli(Pauli::X);
    let mut h = HermitianOperator::zeros(n);
    for (j, &l) in params.lambda.iter().enumerate() {
        h.add_term(l / 2.0, &site_op(&x, j + 1, n));
    }
    h
}

/// `Σ_j (ω_j/2) Z_j + Σ_j [g Z_j Z_{j+1} + g'(σ₊_j σ₋_{j+1} + σ₋_j σ₊_{j+1})]`
/// on an open chain.
pub fn build_problem(params: &ModelParams) -> HermitianOperator {
    let n = params.num_qubits();
    let z = pauli(Pauli::Z);
    let plus = pauli(Pauli::Plus);
    let minus = pauli(Pauli::Minus);
    let mut h = HermitianOperator::zeros(n);
    for (j, &w) in params.omega.iter().enumerate() {
        h.add_term(w / 2.0, &site_op(&z, j + 1, n));
    }
    for j in 1..n {
        let zz = site_op(&z, j, n) * site_op(&z, j + 1, n);
        h.add_term(params.g, &zz);
        let flip_flop = site_op(&plus, j, n) * site_op(&minus, j + 1, n)
            + site_op(&minus, j, n) * site_op(&plus, j + 1, n);
        h.add_term(params.g_prime, &flip_flop);
    }
    h
}

fn site_op(op: &CMatrix, site: usize, n: usize) -> CMatrix {
    embed(op, site, n).expect("site derived from a valid qubit range")
}

/// The driver/problem pair that `A(t)` interpolates between.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnealPath {
    driver: HermitianOperator,
    problem: HermitianOperator,
}

impl AnnealPath {
    pub fn new(driver: HermitianOperator, problem: HermitianOperator) -> Result<Self> {
        if driver.dim() != problem.dim() {
            return Err(Error::arg(format!(
                "driver dimension {} differs from problem dimension {}",
                driver.dim(),
                problem.dim()
            )));
        }
        Ok(Self { driver, problem })
    }

    pub fn from_params(params: &ModelParams) -> Self {
        Self {
            driver: build_driver(params),
            problem: build_problem(params),
        }
    }

    pub fn driver(&self) -> &HermitianOperator {
        &self.driver
    }

    pub fn problem(&self) -> &HermitianOperator {
        &self.problem
    }

    pub fn num_qubits(&self) -> usize {
        self.driver.num_qubits()
    }

    /// `A·H_D + (1 - A)·H_P`.
    pub fn mix(&self, a: f64) -> HermitianOperator {
        self.driver
            .weighted_sum(a, &self.problem, 1.0 - a)
            .expect("dimensions checked at construction")
    }

    pub fn at(&self, t: f64, sched: &Schedule) -> Result<HermitianOperator> {
        let a = schedule_value(t, sched)?;
        if a == 0.0 {
            return Ok(self.problem.clone());
        }
        if a == 1.0 {
            return Ok(self.driver.clone());
        }
        Ok(self.mix(a))
    }
}

/// `H(t) = A(t)·H_D + (1 - A(t))·H_P` in GHz.
pub fn hamiltonian_at(t: f64, params: &ModelParams, sched: &Schedule) -> Result<HermitianOperator> {
    AnnealPath::from_params(params).at(t, sched)
}
