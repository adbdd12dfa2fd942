//! Density-state evolution under idealized pulses, gradient crushers and
//! small-angle readout.

mod readout;
mod rotation;
mod state;

pub use readout::{readout_linear, readout_spectrum, Spectrum1D, SpectrumLine, READOUT_WARN_ANGLE};
pub use rotation::{hard_pulse, selective_pulse, PulseKind, PulseSpec};
pub use state::{crush, subtract_states, CrushMode, DensityState};

use crate::spin::Species;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum PulseError {
    #[error("unknown transition id {0}")]
    UnknownTransition(usize),
    #[error("species {0} is not present in the system")]
    UnknownSpecies(Species),
    #[error("states refer to different eigenbases")]
    BasisMismatch,
    #[error("non-finite pulse angle or phase")]
    NonFinite,
}
