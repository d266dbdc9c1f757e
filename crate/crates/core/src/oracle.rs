//! Exact-diagonalization ground truth: spectra, gap tables and
//! instantaneous-eigenbasis populations.

use std::ops::Range;

use nalgebra::SymmetricEigen;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{AnnealPath, Schedule};
use crate::operators::{CMatrix, HermitianOperator, QuantumState, C64};

/// Eigenvalues closer than this (GHz) are treated as one degenerate level.
pub const DEGENERACY_TOLERANCE: f64 = 1e-9;

const EIG_EPS: f64 = 1e-15;
const EIG_MAX_ITER: usize = 10_000;

/// Ascending eigenvalues and the matching eigenvector columns of a Hermitian
/// matrix. No phase fixing or verification.
pub(crate) fn eigh(matrix: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let eig = SymmetricEigen::try_new(matrix.clone(), EIG_EPS, EIG_MAX_ITER).ok_or_else(|| {
        Error::numerical(format!(
            "Hermitian eigensolver did not converge on a {0}x{0} matrix",
            matrix.nrows()
        ))
    })?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energies = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = eig.eigenvectors.select_columns(&order);
    Ok((energies, vectors))
}

/// A full spectral decomposition with ascending energies and phase-fixed,
/// orthonormal eigenvector columns.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenSystem {
    energies: Vec<f64>,
    states: CMatrix,
}

impl EigenSystem {
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Eigenvectors as columns, in the order of [`energies`](Self::energies).
    pub fn states(&self) -> &CMatrix {
        &self.states
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn state(&self, k: usize) -> QuantumState {
        QuantumState::new(self.states.column(k).into_owned()).expect("eigenvectors are normalized")
    }

    /// Index ranges of levels whose energies lie within
    /// [`DEGENERACY_TOLERANCE`] of their neighbour.
    pub fn level_groups(&self) -> Vec<Range<usize>> {
        let mut groups = Vec::new();
        let mut start = 0;
        for k in 1..=self.energies.len() {
            if k == self.energies.len()
                || self.energies[k] - self.energies[k - 1] > DEGENERACY_TOLERANCE
            {
                groups.push(start..k);
                start = k;
            }
        }
        groups
    }

    /// Amplitudes of `amplitudes` in this eigenbasis, `V†ψ`.
    pub fn coefficients(
        &self,
        amplitudes: &crate::operators::CVector,
    ) -> crate::operators::CVector {
        self.states.ad_mul(amplitudes)
    }

    /// `Σ_k E_k |v_k⟩⟨v_k|`.
    pub fn reconstruct(&self) -> CMatrix {
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.dim(),
            self.energies.iter().map(|&e| C64::new(e, 0.0)),
        ));
        &self.states * d * self.states.adjoint()
    }
}

/// Rotates `column` so that its first largest-modulus entry is real positive.
fn fix_phase(column: &mut nalgebra::DVectorViewMut<'_, C64>) {
    let max = column.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = column
        .iter()
        .find(|z| z.norm() >= max * (1.0 - 1e-8))
        .copied()
        .expect("max is attained");
    let rotation = pivot.conj() / pivot.norm();
    column.iter_mut().for_each(|z| *z *= rotation);
}

/// Full spectral decomposition of `h`, verified against its defining
/// residual and orthonormality bounds.
pub fn diagonalize(h: &HermitianOperator) -> Result<EigenSystem> {
    let (energies, mut states) = eigh(h.matrix())?;
    for mut col in states.column_iter_mut() {
        fix_phase(&mut col);
    }

    let scale = energies.iter().fold(1.0f64, |m, e| m.max(e.abs()));
    let residual = (h.matrix() * &states
        - &states
            * CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                energies.len(),
                energies.iter().map(|&e| C64::new(e, 0.0)),
            )))
    .column_iter()
    .map(|c| c.norm())
    .fold(0.0, f64::max);
    if residual > 1e-9 * scale {
        return Err(Error::numerical(format!(
            "eigenpair residual {residual:e} exceeds tolerance"
        )));
    }
    let gram = states.ad_mul(&states);
    let ortho = (gram - CMatrix::identity(energies.len(), energies.len()))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if ortho > 1e-10 {
        return Err(Error::numerical(format!(
            "eigenvectors not orthonormal (defect {ortho:e})"
        )));
    }
    Ok(EigenSystem { energies, states })
}

/// One pairwise difference `E_j - E_i` with `j > i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Gap {
    pub i: usize,
    pub j: usize,
    pub gap_ghz: f64,
}

/// All pairwise level differences of a spectrum.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapTable {
    entries: Vec<Gap>,
}

impl GapTable {
    pub fn entries(&self) -> &[Gap] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.entries
            .iter()
            .find(|g| g.i == i && g.j == j)
            .map(|g| g.gap_ghz)
    }

    /// `E_1 - E_0`, if the spectrum has two levels.
    pub fn ground_gap(&self) -> Option<f64> {
        self.get(0, 1)
    }
}

/// Pairwise gaps ordered by `(i, j)`. Degenerate pairs keep their zero gap.
pub fn gaps(es: &EigenSystem) -> GapTable {
    let e = es.energies();
    let entries = (0..e.len())
        .flat_map(|i| {
            (i + 1..e.len()).map(move |j| Gap {
                i,
                j,
                gap_ghz: e[j] - e[i],
            })
        })
        .collect();
    GapTable { entries }
}

/// Level populations of a state in some eigenbasis.
///
/// `values[k]` is `|⟨E_k|ψ⟩|²`. For a degenerate group only the summed
/// subspace population is meaningful; it is stored at the group's first
/// index and the other members read 0.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Populations {
    pub energies: Vec<f64>,
    pub values: Vec<f64>,
    pub degenerate: Vec<Range<usize>>,
}

impl Populations {
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Populations of `state` over the eigenbasis `es`.
pub fn populations(es: &EigenSystem, state: &QuantumState) -> Result<Populations> {
    if es.dim() != state.dim() {
        return Err(Error::arg(format!(
            "eigenbasis of dimension {} vs state of dimension {}",
            es.dim(),
            state.dim()
        )));
    }
    let raw: Vec<f64> = es
        .coefficients(state.amplitudes())
        .iter()
        .map(|z| z.norm_sqr())
        .collect();
    let mut values = vec![0.0; raw.len()];
    let mut degenerate = Vec::new();
    for group in es.level_groups() {
        values[group.start] = raw[group.clone()].iter().sum();
        if group.len() > 1 {
            degenerate.push(group);
        }
    }
    Ok(Populations {
        energies: es.energies().to_vec(),
        values,
        degenerate,
    })
}

/// Populations of `state` over the eigenbasis of `H(t)`.
pub fn instantaneous_populations(
    state: &QuantumState,
    t: f64,
    path: &AnnealPath,
    sched: &Schedule,
) -> Result<Populations> {
    let es = diagonalize(&path.at(t, sched)?)?;
    populations(&es, state)
}
