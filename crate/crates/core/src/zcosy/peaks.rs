use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::pulse::{crush, readout_linear, selective_pulse, subtract_states, CrushMode};
use crate::spin::{Species, SpinModel, TransitionTable};

use super::ZcosyError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Peak2D {
    pub t1_id: usize,
    pub t2_id: usize,
    pub omega1_hz: f64,
    pub omega2_hz: f64,
    pub amplitude: f64,
    /// Species observed during t2.
    pub species: Species,
}

impl Peak2D {
    pub fn is_diagonal(&self) -> bool {
        self.t1_id == self.t2_id
    }
}

/// 2D peak list keyed by (ω1 transition id, ω2 transition id), iterated in
/// that order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PeakList2D {
    peaks: BTreeMap<(usize, usize), Peak2D>,
}

impl PeakList2D {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a peak; a second peak at the same key must carry the same
    /// amplitude.
    pub fn insert(&mut self, peak: Peak2D) -> Result<(), ZcosyError> {
        let key = (peak.t1_id, peak.t2_id);
        match self.peaks.get(&key) {
            Some(existing) if existing.amplitude != peak.amplitude => {
                Err(ZcosyError::ConflictingPeak(key.0, key.1))
            }
            Some(_) => Ok(()),
            None => {
                self.peaks.insert(key, peak);
                Ok(())
            }
        }
    }

    pub fn get(&self, t1: usize, t2: usize) -> Option<&Peak2D> {
        self.peaks.get(&(t1, t2))
    }

    pub fn len(&self) -> usize {
        self.peaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Peak2D> {
        self.peaks.values()
    }

    pub fn diagonal(&self, t: usize) -> Option<&Peak2D> {
        self.get(t, t)
    }

    /// Checks that every key refers to a transition of `table`.
    pub fn validate(&self, table: &TransitionTable) -> Result<(), ZcosyError> {
        for &(a, b) in self.peaks.keys() {
            if table.get(a).is_none() || table.get(b).is_none() {
                return Err(ZcosyError::UnknownTransition(a, b));
            }
        }
        Ok(())
    }
}

impl FromIterator<Peak2D> for PeakList2D {
    fn from_iter<I: IntoIterator<Item = Peak2D>>(iter: I) -> Self {
        let mut list = PeakList2D::new();
        for p in iter {
            list.peaks.insert((p.t1_id, p.t2_id), p);
        }
        list
    }
}

/// One HET-Z-COSY experiment observing `observed` in t2.
///
/// Each ω1 row is the linear-regime cross section: the population change
/// produced by inverting transition r (selective π, then gradient crush),
/// read out by a small `beta` pulse on the observed species and scaled by
/// sin(`alpha`). Lines that do not share a level with r vanish exactly.
pub fn simulate_hetzcosy(
    model: &SpinModel,
    observed: &Species,
    alpha: f64,
    beta: f64,
) -> Result<PeakList2D, ZcosyError> {
    if model.system.species_index(observed).is_none() {
        return Err(ZcosyError::UnknownSpecies(observed.clone()));
    }
    let eq = model.equilibrium();
    let scale = alpha.sin();
    let floor = 1e-12 * (alpha.sin() * beta.sin()).abs();
    let mut list = PeakList2D::new();
    for r in model.transitions.iter() {
        let inverted = selective_pulse(&eq, &model.transitions, r.id, PI, 0.0, 0.0)?;
        let change = subtract_states(&crush(&inverted, CrushMode::All), &eq)?;
        let row = readout_linear(model, &change, observed, beta, 0.0)?;
        for line in row.lines {
            let amplitude = scale * line.amplitude;
            if amplitude.abs() > floor {
                list.insert(Peak2D {
                    t1_id: r.id,
                    t2_id: line.transition_id,
                    omega1_hz: r.freq_hz,
                    omega2_hz: line.freq_hz,
                    amplitude,
                    species: observed.clone(),
                })?;
            }
        }
    }
    Ok(list)
}

/// Union of per-species experiments. Identical duplicates collapse; a key
/// present with two different amplitudes is an error.
pub fn merge_experiments(lists: &[PeakList2D]) -> Result<PeakList2D, ZcosyError> {
    let mut merged = PeakList2D::new();
    for list in lists {
        for p in list.iter() {
            merged.insert(p.clone())?;
        }
    }
    Ok(merged)
}

/// Replaces each mirrored cross-peak pair by the member of lower absolute
/// amplitude, at both positions. Cross peaks with no mirror partner (or
/// with |amplitude| ≤ `tol`) are removed; diagonal peaks are kept as is.
/// Equal magnitudes keep the entry whose ω1 id is smaller.
pub fn symmetrize(peaks: &PeakList2D, tol: f64) -> PeakList2D {
    let present = |a: usize, b: usize| peaks.get(a, b).filter(|p| p.amplitude.abs() > tol);
    let mut out = PeakList2D::new();
    for p in peaks.iter() {
        if p.is_diagonal() {
            out.peaks.insert((p.t1_id, p.t2_id), p.clone());
            continue;
        }
        let (i, j) = (p.t1_id.min(p.t2_id), p.t1_id.max(p.t2_id));
        let (Some(a), Some(b)) = (present(i, j), present(j, i)) else {
            continue;
        };
        let keep = if a.amplitude.abs() <= b.amplitude.abs() {
            a.amplitude
        } else {
            b.amplitude
        };
        let mut q = p.clone();
        q.amplitude = keep;
        out.peaks.insert((q.t1_id, q.t2_id), q);
    }
    out
}
