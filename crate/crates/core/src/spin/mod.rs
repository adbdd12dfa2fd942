//! Spin-system model: Hamiltonian construction, eigenbasis, observable
//! transitions, equilibrium populations and computational labels.

mod eigen;
mod equilibrium;
mod hamiltonian;
mod labels;
pub mod operators;
mod system;
mod transitions;

use std::sync::Arc;

pub use eigen::{diagonalize, EigenSystem};
pub use equilibrium::equilibrium_state;
pub use hamiltonian::{build_hamiltonian, HamiltonianMatrix};
pub use labels::{label_states, LabelMap, QubitLabel};
pub use system::{
    build_spin_system, Coupling, CouplingEntry, Manifold, Species, Spin, SpinEntry, SpinSystem,
    SystemConfig, MAX_SPINS,
};
pub use transitions::{
    compute_transitions, Transition, TransitionTable, DEFAULT_INTENSITY_THRESHOLD,
};

pub type Complex = num_complex::Complex64;
pub type CMatrix = nalgebra::DMatrix<Complex>;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SpinError {
    #[error("number of spins {0} outside the supported range 1..={MAX_SPINS}")]
    SpinCount(usize),
    #[error("spin index {0} is out of range")]
    SpinIndex(usize),
    #[error("spin index {0} listed more than once")]
    DuplicateSpin(usize),
    #[error("coupling ({0}, {1}) pairs a spin with itself")]
    SelfPair(usize, usize),
    #[error("coupling ({0}, {1}) given more than once")]
    DuplicatePair(usize, usize),
    #[error("non-finite value for {0}")]
    NonFinite(String),
    #[error("species {0} has no default gyromagnetic weight; set gamma_rel")]
    MissingGamma(String),
    #[error("gyromagnetic weight for {0} must be positive")]
    BadGamma(String),
    #[error("spins of species {0} disagree on gamma_rel")]
    InconsistentGamma(String),
    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),
    #[error("matrix couples different magnetic manifolds (element {0:e})")]
    NotBlockDiagonal(f64),
    #[error("eigensolver did not converge on a block of dimension {0}")]
    NoConvergence(usize),
    #[error(
        "ambiguous labeling: levels {levels:?} and labels {labels:?} tie at overlap {overlap:.6}"
    )]
    AmbiguousLabel {
        levels: (usize, usize),
        labels: (String, String),
        overlap: f64,
    },
}

/// A diagonalized spin system together with its observable transitions.
///
/// The eigenbasis is shared behind an `Arc` so that density states can
/// refer to it cheaply and be checked for basis compatibility.
#[derive(Debug, Clone)]
pub struct SpinModel {
    pub system: SpinSystem,
    pub eigen: Arc<EigenSystem>,
    pub transitions: TransitionTable,
}

impl SpinModel {
    pub fn new(system: SpinSystem, threshold: f64) -> Result<Self, SpinError> {
        let h = build_hamiltonian(&system);
        let eigen = Arc::new(diagonalize(&h)?);
        let transitions = compute_transitions(&eigen, &system, threshold);
        Ok(SpinModel {
            system,
            eigen,
            transitions,
        })
    }

    pub fn with_default_threshold(system: SpinSystem) -> Result<Self, SpinError> {
        Self::new(system, DEFAULT_INTENSITY_THRESHOLD)
    }

    pub fn n_levels(&self) -> usize {
        self.eigen.dim()
    }

    pub fn equilibrium(&self) -> crate::pulse::DensityState {
        equilibrium_state(&self.system, &self.eigen)
    }

    pub fn labels(&self) -> Result<LabelMap, SpinError> {
        label_states(&self.eigen, &self.system)
    }

    /// True when every transition's higher-energy level also carries the
    /// higher magnetic quantum number of the active species, as for
    /// positive Larmor frequencies that dominate the couplings.
    pub fn orientation_consistent(&self) -> bool {
        self.transitions.iter().all(|t| {
            let s = self
                .system
                .species_index(&t.species)
                .expect("species of a transition");
            self.eigen.manifold(t.upper).twice_m(s) > self.eigen.manifold(t.lower).twice_m(s)
        })
    }
}
