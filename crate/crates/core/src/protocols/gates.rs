use std::f64::consts::PI;

use crate::pulse::{crush, selective_pulse, CrushMode, DensityState};
use crate::spin::{LabelMap, SpinModel};

use super::ProtocolError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateOptions {
    /// Gradient crush after every π pulse.
    pub crush_after_pi: bool,
    pub flip_error: f64,
}

impl Default for GateOptions {
    fn default() -> Self {
        GateOptions {
            crush_after_pi: true,
            flip_error: 0.0,
        }
    }
}

fn pi_pulse(
    model: &SpinModel,
    state: &DensityState,
    id: usize,
    opts: &GateOptions,
) -> Result<DensityState, ProtocolError> {
    let out = selective_pulse(state, &model.transitions, id, PI, 0.0, opts.flip_error)?;
    Ok(if opts.crush_after_pi {
        crush(&out, CrushMode::All)
    } else {
        out
    })
}

/// Multiply-controlled NOT: a selective π on a transition whose two
/// labels differ in exactly one qubit.
pub fn apply_cnnot(
    model: &SpinModel,
    state: &DensityState,
    transition_id: usize,
    labels: &LabelMap,
    opts: &GateOptions,
) -> Result<DensityState, ProtocolError> {
    let t = model
        .transitions
        .get(transition_id)
        .ok_or(ProtocolError::UnknownTransition(transition_id))?;
    let (lu, ll) = (labels.label(t.upper), labels.label(t.lower));
    if lu.hamming(&ll) != 1 {
        return Err(ProtocolError::NotControlledNot {
            id: transition_id,
            upper: lu.to_string(),
            lower: ll.to_string(),
        });
    }
    pi_pulse(model, state, transition_id, opts)
}

/// Three π pulses a, b, a where b shares exactly one level with a: the
/// populations of the two outer levels are exchanged and the shared level
/// is restored. (t, t, t) is accepted and acts as a single π.
pub fn apply_cswap(
    model: &SpinModel,
    state: &DensityState,
    seq: [usize; 3],
    opts: &GateOptions,
) -> Result<DensityState, ProtocolError> {
    let get = |id| {
        model
            .transitions
            .get(id)
            .ok_or(ProtocolError::UnknownTransition(id))
    };
    let (a, b) = (get(seq[0])?, get(seq[1])?);
    get(seq[2])?;
    let shared = [a.upper, a.lower].iter().filter(|&&l| b.touches(l)).count();
    let ladder = seq[0] == seq[2] && (seq[0] == seq[1] || shared == 1);
    if !ladder {
        return Err(ProtocolError::InvalidLadder(seq));
    }
    let mut out = state.clone();
    for id in seq {
        out = pi_pulse(model, &out, id, opts)?;
    }
    Ok(out)
}
