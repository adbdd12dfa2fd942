//! Energy-level diagram reconstruction from a transition list and signed
//! connectivity, plus verification, domain partition and DOT export.

mod diagram;
mod dot;
mod solver;

pub use diagram::{
    domains, verify_diagram, DiagramMismatch, EdgeResidual, Orientation, VerifyReport,
};
pub use dot::{export_dot, parse_dot};
pub use solver::{reconstruct_levels, ReconstructOptions, Reconstruction};

use serde::{Deserialize, Serialize};

use crate::spin::{EigenSystem, Species, TransitionTable};

/// One observed line as fed to reconstruction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedTransition {
    pub id: usize,
    pub freq_hz: f64,
    pub species: Species,
}

impl ObservedTransition {
    pub fn from_table(table: &TransitionTable) -> Vec<ObservedTransition> {
        table
            .iter()
            .map(|t| ObservedTransition {
                id: t.id,
                freq_hz: t.freq_hz,
                species: t.species.clone(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub id: usize,
    /// Relative to the reference level of its component.
    pub energy_hz: f64,
    pub component: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub transition_id: usize,
    pub upper: usize,
    pub lower: usize,
    pub freq_hz: f64,
    pub species: Species,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelDiagram {
    /// Ordered by component, then descending energy.
    pub levels: Vec<Level>,
    /// Ordered by transition id.
    pub edges: Vec<Edge>,
    /// Transitions that could not be placed (no connectivity).
    pub unassigned: Vec<usize>,
    pub n_components: usize,
    pub n_levels_expected: Option<usize>,
}

impl LevelDiagram {
    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn edge(&self, transition_id: usize) -> Option<&Edge> {
        self.edges
            .binary_search_by_key(&transition_id, |e| e.transition_id)
            .ok()
            .map(|k| &self.edges[k])
    }

    pub fn energy(&self, level: usize) -> f64 {
        self.levels[level].energy_hz
    }

    /// Ground-truth diagram of a simulated system: every level that some
    /// transition touches, with eigen-energies relative to the lower level
    /// of transition 1. Level ids follow descending energy.
    pub fn from_eigensystem(
        table: &TransitionTable,
        es: &EigenSystem,
        n_spins: Option<usize>,
    ) -> Self {
        let mut used: Vec<usize> = table.iter().flat_map(|t| [t.upper, t.lower]).collect();
        used.sort_unstable();
        used.dedup();
        let reference = table.get(1).map(|t| es.energy(t.lower)).unwrap_or(0.0);
        used.sort_by(|&a, &b| es.energy(b).total_cmp(&es.energy(a)).then(a.cmp(&b)));
        let mut index = vec![usize::MAX; es.dim()];
        let levels = used
            .iter()
            .enumerate()
            .map(|(k, &l)| {
                index[l] = k;
                Level {
                    id: k,
                    energy_hz: es.energy(l) - reference,
                    component: 0,
                }
            })
            .collect();
        let edges = table
            .iter()
            .map(|t| Edge {
                transition_id: t.id,
                upper: index[t.upper],
                lower: index[t.lower],
                freq_hz: t.freq_hz,
                species: t.species.clone(),
            })
            .collect();
        LevelDiagram {
            levels,
            edges,
            unassigned: Vec::new(),
            n_components: usize::from(!table.is_empty()),
            n_levels_expected: n_spins.map(|n| 1 << n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LevelError {
    #[error("transition {0} has a non-positive or non-finite frequency")]
    BadFrequency(usize),
    #[error("transition {0} listed twice")]
    DuplicateTransition(usize),
    #[error("connectivity references unknown transition {0}")]
    UnknownTransition(usize),
    #[error(
        "no consistent level assignment for component {component:?}; \
         largest consistent subset satisfies {satisfied} of {total} connectivities \
         and places transitions {placed:?}"
    )]
    Inconsistent {
        component: Vec<usize>,
        placed: Vec<usize>,
        satisfied: usize,
        total: usize,
    },
    #[error("search limit of {0} nodes exceeded")]
    SearchLimit(usize),
    #[error("diagram text: {0}")]
    Parse(String),
}
