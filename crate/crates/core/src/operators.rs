//! Dense complex linear algebra on `L`-qubit Hilbert spaces.
//!
//! Basis states are indexed by the bits of their index with qubit 1 as the
//! most significant bit. The first single-qubit basis vector is the `+1`
//! eigenvector of `Z`, so `Z = diag(+1, -1)` and `σ₊ = (X + iY)/2` maps the
//! second basis vector onto the first.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Norm tolerance a [`QuantumState`] must satisfy.
pub const NORM_TOLERANCE: f64 = 1e-9;
/// Elementwise tolerance for the Hermiticity check.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

const fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Single-qubit operators used to assemble Hamiltonians.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    X,
    Y,
    Z,
    /// Raising operator `(X + iY)/2`.
    Plus,
    /// Lowering operator `(X - iY)/2`.
    Minus,
    Identity,
}

impl Pauli {
    pub const ALL: [Pauli; 6] = [
        Pauli::X,
        Pauli::Y,
        Pauli::Z,
        Pauli::Plus,
        Pauli::Minus,
        Pauli::Identity,
    ];
}

/// The 2x2 matrix of `axis`.
pub fn pauli(axis: Pauli) -> CMatrix {
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let entries = match axis {
        Pauli::X => [z, one, one, z],
        Pauli::Y => [z, c(0.0, -1.0), c(0.0, 1.0), z],
        Pauli::Z => [one, z, z, -one],
        Pauli::Plus => [z, one, z, z],
        Pauli::Minus => [z, z, one, z],
        Pauli::Identity => [one, z, z, one],
    };
    CMatrix::from_row_slice(2, 2, &entries)
}

/// `I ⊗ … ⊗ op ⊗ … ⊗ I` with `op` on qubit `site` (1-based, leftmost factor).
pub fn embed(op: &CMatrix, site: usize, num_qubits: usize) -> Result<CMatrix> {
    if op.nrows() != 2 || op.ncols() != 2 {
        return Err(Error::arg(format!(
            "embed expects a 2x2 operator, got {}x{}",
            op.nrows(),
            op.ncols()
        )));
    }
    if site == 0 || site > num_qubits {
        return Err(Error::arg(format!("site {site} outside 1..={num_qubits}")));
    }
    let left = CMatrix::identity(1 << (site - 1), 1 << (site - 1));
    let right = CMatrix::identity(1 << (num_qubits - site), 1 << (num_qubits - site));
    Ok(left.kronecker(op).kronecker(&right))
}

fn qubits_for_dim(dim: usize) -> Option<usize> {
    (dim.is_power_of_two() && dim >= 2).then(|| dim.trailing_zeros() as usize)
}

/// A normalized pure state over the `2^L` computational basis.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    amplitudes: CVector,
    num_qubits: usize,
}

impl QuantumState {
    /// Wraps `amplitudes`, which must already have unit norm.
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let num_qubits = qubits_for_dim(amplitudes.len()).ok_or_else(|| {
            Error::arg(format!(
                "state length {} is not 2^L with L >= 1",
                amplitudes.len()
            ))
        })?;
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::arg(format!("state norm {norm} is not 1")));
        }
        Ok(Self {
            amplitudes,
            num_qubits,
        })
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::arg("cannot normalize a zero or non-finite vector"));
        }
        Self::new(amplitudes.unscale(norm))
    }

    /// Computational basis state `index`.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << num_qubits;
        if num_qubits == 0 || index >= dim {
            return Err(Error::arg(format!(
                "basis index {index} invalid for {num_qubits} qubits"
            )));
        }
        let mut v = CVector::zeros(dim);
        v[index] = c(1.0, 0.0);
        Self::new(v)
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> CVector {
        self.amplitudes
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// Multiplies every amplitude by `e^{iφ}`.
    pub fn with_global_phase(&self, phi: f64) -> Self {
        Self {
            amplitudes: self.amplitudes.map(|a| a * C64::from_polar(1.0, phi)),
            num_qubits: self.num_qubits,
        }
    }
}

/// A dense Hermitian matrix on `L` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    matrix: CMatrix,
    num_qubits: usize,
}

impl HermitianOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::arg(format!(
                "operator must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let num_qubits = qubits_for_dim(matrix.nrows()).ok_or_else(|| {
            Error::arg(format!(
                "operator dimension {} is not 2^L with L >= 1",
                matrix.nrows()
            ))
        })?;
        let defect = hermiticity_defect(&matrix);
        if defect > HERMITIAN_TOLERANCE {
            return Err(Error::arg(format!(
                "operator is not Hermitian (max |H - H†| = {defect:e})"
            )));
        }
        Ok(Self { matrix, num_qubits })
    }

    pub fn zeros(num_qubits: usize) -> Self {
        let dim = 1 << num_qubits;
        Self {
            matrix: CMatrix::zeros(dim, dim),
            num_qubits,
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `a·self + b·other`; real weights keep the result Hermitian.
    pub fn weighted_sum(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::arg(format!(
                "cannot add operators of dimension {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        let matrix = self.matrix.scale(a) + other.matrix.scale(b);
        debug_assert!(hermiticity_defect(&matrix) <= HERMITIAN_TOLERANCE);
        Ok(Self {
            matrix,
            num_qubits: self.num_qubits,
        })
    }

    /// Adds `weight·term`, where `term` must itself be Hermitian.
    pub(crate) fn add_term(&mut self, weight: f64, term: &CMatrix) {
        self.matrix += term.scale(weight);
    }

    /// `⟨ψ|H|ψ⟩`, real for Hermitian `H`.
    pub fn expectation(&self, state: &QuantumState) -> Result<f64> {
        let h_psi = apply(&self.matrix, state)?;
        Ok(state.amplitudes.dotc(&h_psi).re)
    }
}

/// Largest elementwise deviation `|H_ij - conj(H_ji)|`.
pub fn hermiticity_defect(matrix: &CMatrix) -> f64 {
    let n = matrix.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((matrix[(i, j)] - matrix[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Matrix-vector product; the result is not renormalized.
pub fn apply(op: &CMatrix, state: &QuantumState) -> Result<CVector> {
    if op.ncols() != state.dim() {
        return Err(Error::arg(format!(
            "operator with {} columns applied to state of dimension {}",
            op.ncols(),
            state.dim()
        )));
    }
    Ok(op * &state.amplitudes)
}

/// `⟨a|b⟩`, conjugate-linear in `a`.
pub fn inner(a: &QuantumState, b: &QuantumState) -> Result<C64> {
    if a.dim() != b.dim() {
        return Err(Error::arg(format!(
            "inner product of states with dimensions {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(a.amplitudes.dotc(&b.amplitudes))
}
