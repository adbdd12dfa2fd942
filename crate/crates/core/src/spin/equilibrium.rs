use std::sync::Arc;

use super::{CMatrix, Complex, EigenSystem, SpinSystem};
use crate::pulse::DensityState;

/// High-temperature deviation state Σᵢ (γᵢ/γ_ref) I_zi in the eigenbasis.
///
/// Every eigenstate has definite per-species M, so the transformed operator
/// is diagonal with entries Σ_s γ_s M_s; those are written directly.
pub fn equilibrium_state(sys: &SpinSystem, es: &Arc<EigenSystem>) -> DensityState {
    let dim = es.dim();
    let gammas: Vec<f64> = sys
        .species()
        .iter()
        .map(|s| sys.gamma(s).expect("species has spins"))
        .collect();
    let mut rho = CMatrix::zeros(dim, dim);
    for level in 0..dim {
        let man = es.manifold(level);
        let p: f64 = gammas.iter().enumerate().map(|(s, g)| g * man.m(s)).sum();
        rho[(level, level)] = Complex::new(p, 0.0);
    }
    DensityState::new(rho, Arc::clone(es))
}
