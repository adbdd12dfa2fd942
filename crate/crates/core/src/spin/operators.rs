//! Spin operators in the product (Zeeman) basis.

use super::{CMatrix, Complex, Species, SpinSystem};

fn bit_of(sys: &SpinSystem, spin: usize) -> usize {
    1 << (sys.n_spins() - 1 - spin)
}

/// F₊ restricted to the spins of `species`.
pub fn raising(sys: &SpinSystem, species: &Species) -> CMatrix {
    let dim = sys.dim();
    let mut op = CMatrix::zeros(dim, dim);
    for spin in sys.members(species) {
        let bit = bit_of(sys, spin);
        for state in 0..dim {
            // I₊ takes β (bit set) to α (bit clear)
            if state & bit != 0 {
                op[(state ^ bit, state)] += Complex::new(1.0, 0.0);
            }
        }
    }
    op
}

/// F_x cos φ + F_y sin φ over the spins of `species`.
pub fn transverse(sys: &SpinSystem, species: &Species, phase: f64) -> CMatrix {
    let plus = raising(sys, species);
    let minus = plus.adjoint();
    // F_x cos φ + F_y sin φ = (e^{-iφ} F₊ + e^{iφ} F₋) / 2
    let e = Complex::from_polar(0.5, -phase);
    plus * e + minus * e.conj()
}

/// Σᵢ (γᵢ/γ_ref) I_zi, diagonal in the product basis.
pub fn weighted_z(sys: &SpinSystem) -> CMatrix {
    let dim = sys.dim();
    let mut op = CMatrix::zeros(dim, dim);
    for state in 0..dim {
        let mut v = 0.0;
        for (k, spin) in sys.spins().iter().enumerate() {
            v += spin.gamma_rel * f64::from(sys.twice_m(state, k)) / 2.0;
        }
        op[(state, state)] = Complex::new(v, 0.0);
    }
    op
}

/// exp(−iθ(σ_x cos φ + σ_y sin φ)/2), the 2×2 rotation of one spin-1/2.
pub fn spin_rotation(angle: f64, phase: f64) -> CMatrix {
    let c = (angle / 2.0).cos();
    let s = (angle / 2.0).sin();
    let off = Complex::new(0.0, -s);
    CMatrix::from_row_slice(
        2,
        2,
        &[
            Complex::new(c, 0.0),
            off * Complex::from_polar(1.0, -phase),
            off * Complex::from_polar(1.0, phase),
            Complex::new(c, 0.0),
        ],
    )
}

/// Product-basis propagator of a hard pulse on every spin of `species`.
pub fn hard_rotation(sys: &SpinSystem, species: &Species, angle: f64, phase: f64) -> CMatrix {
    let identity = CMatrix::identity(2, 2);
    let rot = spin_rotation(angle, phase);
    let mut u = CMatrix::identity(1, 1);
    for spin in sys.spins() {
        let factor = if &spin.species == species {
            &rot
        } else {
            &identity
        };
        u = u.kronecker(factor);
    }
    u
}
