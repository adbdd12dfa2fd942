use std::collections::VecDeque;

use serde::Serialize;

use crate::pulse::DensityState;
use crate::spin::{LabelMap, SpinSystem, TransitionTable};

pub const COHERENCE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoherenceEntry {
    /// (higher-energy level, lower-energy level).
    pub levels: (usize, usize),
    pub labels: (String, String),
    /// Change of M per species from the lower to the higher level,
    /// in system species order.
    pub order: Vec<(String, i32)>,
    pub magnitude: f64,
    /// Argument of ρ[higher, lower].
    pub phase: f64,
    /// Energy gap summed along `path`; absent when no path exists.
    pub omega1_hz: Option<f64>,
    /// Transition ids from the higher level to the lower one.
    pub path: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoherenceReport {
    pub floor: f64,
    pub entries: Vec<CoherenceEntry>,
}

impl CoherenceReport {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn strongest(&self) -> Option<&CoherenceEntry> {
        self.entries
            .iter()
            .max_by(|a, b| a.magnitude.total_cmp(&b.magnitude))
    }

    /// Entries at least `ratio` times the strongest magnitude.
    pub fn dominant(&self, ratio: f64) -> Vec<&CoherenceEntry> {
        let max = self.strongest().map_or(0.0, |e| e.magnitude);
        self.entries
            .iter()
            .filter(|e| e.magnitude >= ratio * max)
            .collect()
    }

    /// Entries without a connecting transition path.
    pub fn unconnected(&self) -> impl Iterator<Item = &CoherenceEntry> {
        self.entries.iter().filter(|e| e.omega1_hz.is_none())
    }
}

/// Shortest path from `a` to `b` with the signed energy change summed over
/// its transitions (E_b − E_a); neighbors are visited in ascending order.
fn path_between(table: &TransitionTable, a: usize, b: usize) -> Option<(Vec<usize>, f64)> {
    let n = table.n_levels();
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for t in table.iter() {
        adj[t.upper].push((t.lower, t.id));
        adj[t.lower].push((t.upper, t.id));
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut seen = vec![false; n];
    seen[a] = true;
    let mut queue = VecDeque::from([a]);
    while let Some(v) = queue.pop_front() {
        if v == b {
            break;
        }
        for &(w, id) in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                prev[w] = Some((v, id));
                queue.push_back(w);
            }
        }
    }
    if !seen[b] {
        return None;
    }
    let mut ids = Vec::new();
    let mut delta = 0.0;
    let mut v = b;
    while let Some((p, id)) = prev[v] {
        let t = table.get(id).expect("id from table");
        delta += if t.upper == v { t.freq_hz } else { -t.freq_hz };
        ids.push(id);
        v = p;
    }
    ids.reverse();
    Some((ids, delta))
}

/// Every off-diagonal element above `floor`, annotated with per-species
/// quantum order and the composite frequency along a connecting path.
pub fn coherence_report(
    state: &DensityState,
    sys: &SpinSystem,
    labels: &LabelMap,
    table: &TransitionTable,
    floor: f64,
) -> CoherenceReport {
    let es = state.basis();
    let rho = state.matrix();
    let mut entries = Vec::new();
    for a in 0..state.dim() {
        for b in a + 1..state.dim() {
            let magnitude = rho[(a, b)].norm();
            if magnitude <= floor {
                continue;
            }
            let (hi, lo) = if es.energy(a) >= es.energy(b) {
                (a, b)
            } else {
                (b, a)
            };
            let order = sys
                .species()
                .iter()
                .enumerate()
                .map(|(s, sp)| {
                    let d = es.manifold(hi).twice_m(s) - es.manifold(lo).twice_m(s);
                    (sp.to_string(), d / 2)
                })
                .collect();
            let (path, omega1_hz) = match path_between(table, hi, lo) {
                Some((p, delta)) => (p, Some(-delta)),
                None => {
                    log::warn!("no transition path between levels {hi} and {lo}");
                    (Vec::new(), None)
                }
            };
            entries.push(CoherenceEntry {
                levels: (hi, lo),
                labels: (labels.label(hi).to_string(), labels.label(lo).to_string()),
                order,
                magnitude,
                phase: rho[(hi, lo)].arg(),
                omega1_hz,
                path,
            });
        }
    }
    CoherenceReport { floor, entries }
}
