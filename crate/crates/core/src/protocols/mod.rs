//! Pseudopure-state preparation, controlled gates, entanglement transfer,
//! fidelity and coherence reporting, and a small line-oriented script
//! language driving them.

mod coherence;
mod entangle;
mod gates;
mod prep;
mod script;

pub use coherence::{coherence_report, CoherenceEntry, CoherenceReport, COHERENCE_FLOOR};
pub use entangle::{
    fidelity, run_entanglement_transfer, EntanglementOptions, EntanglementRun, StageReport,
};
pub use gates::{apply_cnnot, apply_cswap, GateOptions};
pub use prep::{prepare_pops, prepare_sallt};
pub use script::{parse_angle, ProtocolScript, ScriptRun, Step, TransitionRef};

use crate::compiler::CompileError;
use crate::pulse::PulseError;
use crate::spin::{LabelMap, SpinError, TransitionTable};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Pulse(#[from] PulseError),
    #[error(transparent)]
    Spin(#[from] SpinError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error("unknown transition id {0}")]
    UnknownTransition(usize),
    #[error("unknown computational label `{0}`")]
    UnknownLabel(String),
    #[error("no observable transition between |{0}> and |{1}>")]
    NoTransition(String, String),
    #[error("transition {id} (|{upper}> <-> |{lower}>) is not a controlled-NOT transition")]
    NotControlledNot {
        id: usize,
        upper: String,
        lower: String,
    },
    #[error("transitions {0:?} do not form a three-pulse ladder")]
    InvalidLadder([usize; 3]),
    #[error("transition {0} is not a heteronuclear (minority species) transition")]
    NotHeteronuclear(usize),
    #[error("target state is not normalized (norm {0})")]
    TargetNotNormalized(f64),
    #[error("dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
    #[error("line {line}: {message}")]
    Script { line: usize, message: String },
    #[error("protocol needs a heteronuclear system with exactly one minority spin")]
    UnsupportedSystem,
}

/// Transition joining two labelled levels.
pub fn transition_between(
    table: &TransitionTable,
    labels: &LabelMap,
    a: &str,
    b: &str,
) -> Result<usize, ProtocolError> {
    let la = labels
        .level_of(a)
        .ok_or_else(|| ProtocolError::UnknownLabel(a.to_string()))?;
    let lb = labels
        .level_of(b)
        .ok_or_else(|| ProtocolError::UnknownLabel(b.to_string()))?;
    table
        .between(la, lb)
        .map(|t| t.id)
        .ok_or_else(|| ProtocolError::NoTransition(a.to_string(), b.to_string()))
}
