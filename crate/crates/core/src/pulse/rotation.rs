use crate::spin::{operators, Species, SpinModel, TransitionTable};

use super::{DensityState, PulseError};

#[derive(Debug, Clone, PartialEq)]
pub enum PulseKind {
    /// Narrow-band rotation of one transition, by id.
    Selective(usize),
    /// Non-selective rotation of every spin of a species.
    Hard(Species),
}

/// One idealized pulse; the applied angle is `angle * (1 + flip_error)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSpec {
    pub kind: PulseKind,
    pub angle: f64,
    pub phase: f64,
    pub flip_error: f64,
}

impl PulseSpec {
    pub fn selective(id: usize, angle: f64, phase: f64) -> Self {
        PulseSpec {
            kind: PulseKind::Selective(id),
            angle,
            phase,
            flip_error: 0.0,
        }
    }

    pub fn hard(species: Species, angle: f64, phase: f64) -> Self {
        PulseSpec {
            kind: PulseKind::Hard(species),
            angle,
            phase,
            flip_error: 0.0,
        }
    }

    pub fn with_flip_error(mut self, eps: f64) -> Self {
        self.flip_error = eps;
        self
    }

    pub fn apply(
        &self,
        model: &SpinModel,
        state: &DensityState,
    ) -> Result<DensityState, PulseError> {
        match &self.kind {
            PulseKind::Selective(id) => selective_pulse(
                state,
                &model.transitions,
                *id,
                self.angle,
                self.phase,
                self.flip_error,
            ),
            PulseKind::Hard(species) => hard_pulse(
                model,
                state,
                species,
                self.angle,
                self.phase,
                self.flip_error,
            ),
        }
    }
}

/// Rotates the two-level subspace {upper, lower} of a transition by
/// R(θ(1+ε), φ) and leaves every other level untouched.
pub fn selective_pulse(
    state: &DensityState,
    table: &TransitionTable,
    transition_id: usize,
    angle: f64,
    phase: f64,
    flip_error: f64,
) -> Result<DensityState, PulseError> {
    if !angle.is_finite() || !phase.is_finite() || !flip_error.is_finite() {
        return Err(PulseError::NonFinite);
    }
    let t = table
        .get(transition_id)
        .ok_or(PulseError::UnknownTransition(transition_id))?;
    let (u, l) = (t.upper, t.lower);
    let r = operators::spin_rotation(angle * (1.0 + flip_error), phase);
    let (r00, r01, r10, r11) = (r[(0, 0)], r[(0, 1)], r[(1, 0)], r[(1, 1)]);

    let mut out = state.clone();
    let m = out.matrix_mut();
    let d = m.nrows();
    // ρ ← U ρ
    for c in 0..d {
        let (a, b) = (m[(u, c)], m[(l, c)]);
        m[(u, c)] = r00 * a + r01 * b;
        m[(l, c)] = r10 * a + r11 * b;
    }
    // ρ ← ρ U†
    for row in 0..d {
        let (a, b) = (m[(row, u)], m[(row, l)]);
        m[(row, u)] = a * r00.conj() + b * r01.conj();
        m[(row, l)] = a * r10.conj() + b * r11.conj();
    }
    Ok(out)
}

/// exp(−iθ Σ_{i∈species}(I_xi cos φ + I_yi sin φ)) applied in the eigenbasis.
pub fn hard_pulse(
    model: &SpinModel,
    state: &DensityState,
    species: &Species,
    angle: f64,
    phase: f64,
    flip_error: f64,
) -> Result<DensityState, PulseError> {
    if !angle.is_finite() || !phase.is_finite() || !flip_error.is_finite() {
        return Err(PulseError::NonFinite);
    }
    if model.system.species_index(species).is_none() {
        return Err(PulseError::UnknownSpecies(species.clone()));
    }
    if !state.same_basis(&model.eigen) {
        return Err(PulseError::BasisMismatch);
    }
    let u = hard_propagator(model, species, angle * (1.0 + flip_error), phase);
    Ok(state.with_matrix(&u * state.matrix() * u.adjoint()))
}

/// Eigenbasis propagator of a hard pulse.
pub(crate) fn hard_propagator(
    model: &SpinModel,
    species: &Species,
    angle: f64,
    phase: f64,
) -> crate::spin::CMatrix {
    let u = operators::hard_rotation(&model.system, species, angle, phase);
    model.eigen.to_eigenbasis(&u)
}
