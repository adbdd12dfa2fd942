use std::collections::BTreeMap;

use nalgebra::SymmetricEigen;

use super::{CMatrix, Complex, HamiltonianMatrix, Manifold, SpinError};

const HERMITIAN_TOL: f64 = 1e-12;
const DEGENERACY_TOL: f64 = 1e-9;

/// Eigenvalues (Hz) and eigenvectors (columns, product basis) of a spin
/// Hamiltonian.
///
/// Levels are ordered by descending manifold vector (lexicographic, in the
/// species order of the system) and, within a manifold, by descending
/// energy. Each eigenvector lives entirely inside its manifold block and is
/// phased so that its largest component is real and positive.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    energies: Vec<f64>,
    vectors: CMatrix,
    manifolds: Vec<Manifold>,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn energy(&self, level: usize) -> f64 {
        self.energies[level]
    }

    pub fn vectors(&self) -> &CMatrix {
        &self.vectors
    }

    pub fn manifolds(&self) -> &[Manifold] {
        &self.manifolds
    }

    pub fn manifold(&self, level: usize) -> &Manifold {
        &self.manifolds[level]
    }

    /// Product-basis operator expressed in the eigenbasis, V† A V.
    pub fn to_eigenbasis(&self, op: &CMatrix) -> CMatrix {
        self.vectors.adjoint() * op * &self.vectors
    }

    /// Eigenbasis operator expressed in the product basis, V A V†.
    pub fn to_product_basis(&self, op: &CMatrix) -> CMatrix {
        &self.vectors * op * self.vectors.adjoint()
    }
}

fn inf_norm(m: &CMatrix) -> f64 {
    m.row_iter()
        .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn canonical_phase(v: &mut nalgebra::DVector<Complex>) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .find(|z| z.norm() >= max - 1e-12)
        .copied()
        .expect("a component attains the maximum");
    let rot = pivot.conj() / pivot.norm();
    v.iter_mut().for_each(|z| *z *= rot);
}

pub fn diagonalize(h: &HamiltonianMatrix) -> Result<EigenSystem, SpinError> {
    let m = h.matrix();
    let dim = h.dim();
    let scale = inf_norm(m).max(1.0);

    let herm_dev = m
        .iter()
        .zip(m.adjoint().iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    if herm_dev > HERMITIAN_TOL * scale {
        return Err(SpinError::NotHermitian(herm_dev));
    }

    // basis states grouped by manifold, manifolds in descending order
    let mut blocks: BTreeMap<std::cmp::Reverse<&Manifold>, Vec<usize>> = BTreeMap::new();
    for (state, man) in h.manifolds().iter().enumerate() {
        blocks
            .entry(std::cmp::Reverse(man))
            .or_default()
            .push(state);
    }

    let mut cross = 0.0f64;
    for r in 0..dim {
        for c in 0..dim {
            if h.manifolds()[r] != h.manifolds()[c] {
                cross = cross.max(m[(r, c)].norm());
            }
        }
    }
    if cross > HERMITIAN_TOL * scale {
        return Err(SpinError::NotBlockDiagonal(cross));
    }

    let mut energies = Vec::with_capacity(dim);
    let mut vectors = CMatrix::zeros(dim, dim);
    let mut manifolds = Vec::with_capacity(dim);

    for (std::cmp::Reverse(man), states) in blocks {
        let k = states.len();
        let sub = CMatrix::from_fn(k, k, |r, c| {
            // symmetrize to strip rounding-level anti-Hermitian noise
            (m[(states[r], states[c])] + m[(states[c], states[r])].conj()) * 0.5
        });
        let eig = SymmetricEigen::try_new(sub, f64::EPSILON, 1000 * k.max(10))
            .ok_or(SpinError::NoConvergence(k))?;

        let mut pairs: Vec<(f64, nalgebra::DVector<Complex>)> = (0..k)
            .map(|c| {
                let mut v = eig.eigenvectors.column(c).into_owned();
                canonical_phase(&mut v);
                (eig.eigenvalues[c], v)
            })
            .collect();
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));

        // near-degenerate runs: order by descending overlap with the
        // lowest-index product states of the block
        let mut start = 0;
        while start < pairs.len() {
            let mut end = start + 1;
            while end < pairs.len() && pairs[end - 1].0 - pairs[end].0 <= DEGENERACY_TOL * scale {
                end += 1;
            }
            if end - start > 1 {
                pairs[start..end].sort_by(|a, b| {
                    for idx in 0..k {
                        let wa = a.1[idx].norm_sqr();
                        let wb = b.1[idx].norm_sqr();
                        if (wa - wb).abs() > 1e-12 {
                            return wb.total_cmp(&wa);
                        }
                    }
                    std::cmp::Ordering::Equal
                });
            }
            start = end;
        }

        for (energy, v) in pairs {
            let col = energies.len();
            for (r, &state) in states.iter().enumerate() {
                vectors[(state, col)] = v[r];
            }
            energies.push(energy);
            manifolds.push(man.clone());
        }
    }

    Ok(EigenSystem {
        energies,
        vectors,
        manifolds,
    })
}
