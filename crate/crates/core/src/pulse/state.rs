use std::sync::Arc;

use crate::spin::{CMatrix, Complex, EigenSystem};

use super::PulseError;

/// Deviation density matrix in the eigenbasis of `basis`.
#[derive(Debug, Clone)]
pub struct DensityState {
    matrix: CMatrix,
    basis: Arc<EigenSystem>,
}

impl DensityState {
    pub fn new(matrix: CMatrix, basis: Arc<EigenSystem>) -> Self {
        assert_eq!(matrix.nrows(), basis.dim());
        assert_eq!(matrix.ncols(), basis.dim());
        DensityState { matrix, basis }
    }

    pub fn zeros(basis: Arc<EigenSystem>) -> Self {
        let d = basis.dim();
        DensityState::new(CMatrix::zeros(d, d), basis)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn basis(&self) -> &Arc<EigenSystem> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn same_basis(&self, other: &Arc<EigenSystem>) -> bool {
        Arc::ptr_eq(&self.basis, other)
    }

    pub fn population(&self, level: usize) -> f64 {
        self.matrix[(level, level)].re
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.population(k)).collect()
    }

    pub fn coherence(&self, a: usize, b: usize) -> Complex {
        self.matrix[(a, b)]
    }

    pub fn trace(&self) -> Complex {
        self.matrix.trace()
    }

    /// Largest |ρ − ρ†| entry.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for r in 0..d {
            for c in 0..d {
                worst = worst.max((self.matrix[(r, c)] - self.matrix[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// Largest |ρ_ab| with a ≠ b.
    pub fn max_coherence(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for r in 0..d {
            for c in 0..d {
                if r != c {
                    worst = worst.max(self.matrix[(r, c)].norm());
                }
            }
        }
        worst
    }

    pub(crate) fn with_matrix(&self, matrix: CMatrix) -> Self {
        DensityState::new(matrix, Arc::clone(&self.basis))
    }

    pub(crate) fn matrix_mut(&mut self) -> &mut CMatrix {
        &mut self.matrix
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrushMode {
    /// Keep populations only.
    All,
    /// Also keep coherences between levels of identical manifold, the
    /// homonuclear zero-quantum terms a field gradient cannot dephase.
    RetainHomonuclearZq,
}

pub fn crush(state: &DensityState, mode: CrushMode) -> DensityState {
    let d = state.dim();
    let basis = state.basis();
    let m = CMatrix::from_fn(d, d, |r, c| {
        let keep = r == c
            || (mode == CrushMode::RetainHomonuclearZq && basis.manifold(r) == basis.manifold(c));
        if keep {
            state.matrix[(r, c)]
        } else {
            Complex::new(0.0, 0.0)
        }
    });
    state.with_matrix(m)
}

pub fn subtract_states(a: &DensityState, b: &DensityState) -> Result<DensityState, PulseError> {
    if !Arc::ptr_eq(&a.basis, &b.basis) {
        return Err(PulseError::BasisMismatch);
    }
    Ok(a.with_matrix(&a.matrix - &b.matrix))
}
