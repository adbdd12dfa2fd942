use super::{CMatrix, Complex, Manifold, SpinSystem};

/// Spin Hamiltonian in Hz, in the product basis (spin 1 most significant,
/// α before β), with the manifold of each basis state.
#[derive(Debug, Clone)]
pub struct HamiltonianMatrix {
    matrix: CMatrix,
    manifolds: Vec<Manifold>,
}

impl HamiltonianMatrix {
    /// Wraps an explicit matrix. `manifolds[k]` labels basis state k; the
    /// eigensolver diagonalizes each manifold block separately.
    pub fn new(matrix: CMatrix, manifolds: Vec<Manifold>) -> Self {
        assert_eq!(matrix.nrows(), matrix.ncols());
        assert_eq!(matrix.nrows(), manifolds.len());
        HamiltonianMatrix { matrix, manifolds }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn manifolds(&self) -> &[Manifold] {
        &self.manifolds
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// H = Σ νᵢ I_zi + Σ_homo D_ij (3 I_zi I_zj − Iᵢ·Iⱼ) + Σ_homo J_ij Iᵢ·Iⱼ
///     + Σ_hetero (D_ij + J_ij) I_zi I_zj, all in Hz.
pub fn build_hamiltonian(sys: &SpinSystem) -> HamiltonianMatrix {
    let n = sys.n_spins();
    let dim = sys.dim();
    let mut h = CMatrix::zeros(dim, dim);

    for state in 0..dim {
        let mut diag = 0.0;
        for (k, spin) in sys.spins().iter().enumerate() {
            diag += spin.larmor_hz * f64::from(sys.twice_m(state, k)) / 2.0;
        }
        for (&(i, j), c) in sys.couplings() {
            let zz = f64::from(sys.twice_m(state, i) * sys.twice_m(state, j)) / 4.0;
            diag += if sys.is_heteronuclear(i, j) {
                (c.dipolar_hz + c.scalar_hz) * zz
            } else {
                (2.0 * c.dipolar_hz + c.scalar_hz) * zz
            };
        }
        h[(state, state)] = Complex::new(diag, 0.0);
    }

    // flip-flop part of the homonuclear terms: (I₊I₋ + I₋I₊)/2 has unit
    // matrix elements between αβ and βα
    for (&(i, j), c) in sys.couplings() {
        if sys.is_heteronuclear(i, j) {
            continue;
        }
        let amp = (c.scalar_hz - c.dipolar_hz) / 2.0;
        if amp == 0.0 {
            continue;
        }
        let bi = 1 << (n - 1 - i);
        let bj = 1 << (n - 1 - j);
        for state in 0..dim {
            if ((state & bi) == 0) != ((state & bj) == 0) {
                h[(state ^ bi ^ bj, state)] += Complex::new(amp, 0.0);
            }
        }
    }

    let manifolds = (0..dim).map(|s| sys.manifold_of(s)).collect();
    HamiltonianMatrix::new(h, manifolds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{Coupling, Spin};

    fn proton(larmor_hz: f64) -> Spin {
        Spin {
            species: "H".into(),
            larmor_hz,
            gamma_rel: 1.0,
        }
    }

    #[test]
    fn zeeman_only() {
        let sys = SpinSystem::new(vec![proton(100.0)], []).unwrap();
        let h = build_hamiltonian(&sys);
        assert_eq!(h.matrix()[(0, 0)].re, 50.0);
        assert_eq!(h.matrix()[(1, 1)].re, -50.0);
        assert_eq!(h.matrix()[(0, 1)], Complex::new(0.0, 0.0));
    }

    #[test]
    fn dipolar_pair_matrix_elements() {
        let c = Coupling {
            dipolar_hz: 10.0,
            scalar_hz: 0.0,
        };
        let sys = SpinSystem::new(vec![proton(0.0), proton(0.0)], [(0, 1, c)]).unwrap();
        let h = build_hamiltonian(&sys);
        let m = h.matrix();
        // 2D I_z I_z on the diagonal, −D/2 flip-flop
        assert_eq!(m[(0, 0)].re, 5.0);
        assert_eq!(m[(1, 1)].re, -5.0);
        assert_eq!(m[(1, 2)].re, -5.0);
        assert_eq!(m[(3, 3)].re, 5.0);
    }

    #[test]
    fn heteronuclear_pair_is_truncated() {
        let fluorine = Spin {
            species: "F".into(),
            larmor_hz: 0.0,
            gamma_rel: 0.94,
        };
        let c = Coupling {
            dipolar_hz: 8.0,
            scalar_hz: 2.0,
        };
        let sys = SpinSystem::new(vec![proton(0.0), fluorine], [(0, 1, c)]).unwrap();
        let m = build_hamiltonian(&sys).matrix().clone();
        assert_eq!(m[(1, 2)].re, 0.0);
        assert_eq!(m[(0, 0)].re, 2.5);
        assert_eq!(m[(1, 1)].re, -2.5);
    }
}
