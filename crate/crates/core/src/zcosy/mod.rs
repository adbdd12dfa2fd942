//! Heteronuclear z-COSY peak lists in the linear regime: per-species
//! synthesis, merging, symmetrization and signed connectivity.

mod connectivity;
mod peaks;

pub use connectivity::{extract_connectivity, Connection, ConnectivityMatrix};
pub use peaks::{merge_experiments, simulate_hetzcosy, symmetrize, Peak2D, PeakList2D};

use crate::spin::Species;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ZcosyError {
    #[error("species {0} is not present in the system")]
    UnknownSpecies(Species),
    #[error("conflicting amplitudes for peak ({0}, {1})")]
    ConflictingPeak(usize, usize),
    #[error("peak ({0}, {1}) references a transition missing from the table")]
    UnknownTransition(usize, usize),
    #[error("no diagonal peak for transition {0}")]
    MissingDiagonal(usize),
    #[error("cross peaks ({0}, {1}) and ({1}, {0}) disagree on connectivity type")]
    InconsistentSigns(usize, usize),
    #[error("connectivity entry ({0}, {0}) on the diagonal")]
    DiagonalConnection(usize),
    #[error(transparent)]
    Pulse(#[from] crate::pulse::PulseError),
}
