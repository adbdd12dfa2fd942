use std::f64::consts::{FRAC_PI_2, PI};

use crate::pulse::{crush, hard_pulse, selective_pulse, subtract_states, CrushMode, DensityState};
use crate::spin::SpinModel;

use super::ProtocolError;

/// Pair of pseudopure states: the crushed, selectively inverted
/// equilibrium minus equilibrium. Only the two levels of the transition
/// keep nonzero populations, equal and opposite.
pub fn prepare_pops(
    model: &SpinModel,
    transition_id: usize,
) -> Result<DensityState, ProtocolError> {
    let eq = model.equilibrium();
    let inverted = selective_pulse(&eq, &model.transitions, transition_id, PI, 0.0, 0.0)?;
    Ok(subtract_states(&crush(&inverted, CrushMode::All), &eq)?)
}

/// Subsystem pseudopure state: a hard π/2 on the majority species and a
/// crush remove its polarization, leaving populations that depend only on
/// the minority manifolds; a selective π on the minority transition then
/// moves one level in each manifold. `flip_error` scales every pulse angle.
pub fn prepare_sallt(
    model: &SpinModel,
    transition_id: usize,
    flip_error: f64,
) -> Result<DensityState, ProtocolError> {
    let t = model
        .transitions
        .get(transition_id)
        .ok_or(ProtocolError::UnknownTransition(transition_id))?;
    let majority = model.system.majority_species().clone();
    if t.species == majority {
        return Err(ProtocolError::NotHeteronuclear(transition_id));
    }
    let eq = model.equilibrium();
    let rotated = hard_pulse(model, &eq, &majority, FRAC_PI_2, 0.0, flip_error)?;
    let flat = crush(&rotated, CrushMode::All);
    Ok(selective_pulse(
        &flat,
        &model.transitions,
        transition_id,
        PI,
        0.0,
        flip_error,
    )?)
}
