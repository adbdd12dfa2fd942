use serde::{Deserialize, Serialize};

use super::{operators, EigenSystem, Species, SpinSystem};

/// Lines weaker than this fraction of the strongest line are dropped.
pub const DEFAULT_INTENSITY_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub id: usize,
    /// Eigen-level index of the higher-energy level.
    pub upper: usize,
    pub lower: usize,
    /// E_upper − E_lower in Hz.
    pub freq_hz: f64,
    /// |⟨a|F₊|b⟩|² for the active species, a being the higher-M level.
    pub intensity: f64,
    pub species: Species,
}

impl Transition {
    pub fn touches(&self, level: usize) -> bool {
        self.upper == level || self.lower == level
    }

    /// The endpoint other than `level`, if `level` is an endpoint.
    pub fn other(&self, level: usize) -> Option<usize> {
        if self.upper == level {
            Some(self.lower)
        } else if self.lower == level {
            Some(self.upper)
        } else {
            None
        }
    }

    pub fn shared_level(&self, other: &Transition) -> Option<usize> {
        [self.upper, self.lower]
            .into_iter()
            .find(|&l| other.touches(l))
    }
}

/// Observable single-quantum transitions, numbered 1..=N.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TransitionTable {
    transitions: Vec<Transition>,
    n_levels: usize,
}

impl TransitionTable {
    /// Builds a table from explicit transitions; ids must be 1..=N in order.
    pub fn from_transitions(transitions: Vec<Transition>, n_levels: usize) -> Self {
        for (k, t) in transitions.iter().enumerate() {
            assert_eq!(t.id, k + 1, "transition ids must be serial");
            assert!(t.upper < n_levels && t.lower < n_levels);
        }
        TransitionTable {
            transitions,
            n_levels,
        }
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn n_levels(&self) -> usize {
        self.n_levels
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Transition> {
        self.transitions.iter()
    }

    pub fn as_slice(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn get(&self, id: usize) -> Option<&Transition> {
        id.checked_sub(1).and_then(|k| self.transitions.get(k))
    }

    pub fn between(&self, a: usize, b: usize) -> Option<&Transition> {
        self.transitions
            .iter()
            .find(|t| (t.upper == a && t.lower == b) || (t.upper == b && t.lower == a))
    }

    pub fn of_species<'a>(&'a self, species: &'a Species) -> impl Iterator<Item = &'a Transition> {
        self.transitions
            .iter()
            .filter(move |t| &t.species == species)
    }
}

/// Enumerates level pairs whose manifolds differ by ΔM = ±1 in exactly one
/// species, keeping those with intensity above `threshold` times the
/// strongest line. Numbering: species by descending gyromagnetic weight
/// (first appearance breaks ties), then ascending frequency.
pub fn compute_transitions(es: &EigenSystem, sys: &SpinSystem, threshold: f64) -> TransitionTable {
    let dim = es.dim();
    let mut found: Vec<(usize, Transition)> = Vec::new();

    let mut ranked: Vec<(usize, &Species)> = sys.species().iter().enumerate().collect();
    ranked.sort_by(|a, b| {
        let ga = sys.gamma(a.1).unwrap_or(0.0);
        let gb = sys.gamma(b.1).unwrap_or(0.0);
        gb.total_cmp(&ga).then(a.0.cmp(&b.0))
    });

    for (rank, &(sidx, species)) in ranked.iter().enumerate() {
        let plus = es.to_eigenbasis(&operators::raising(sys, species));
        for a in 0..dim {
            for b in 0..dim {
                // a is the higher-M level of the pair
                let ma = es.manifold(a);
                let mb = es.manifold(b);
                let ok = (0..ma.0.len()).all(|s| {
                    let d = ma.0[s] - mb.0[s];
                    if s == sidx {
                        d == 2
                    } else {
                        d == 0
                    }
                });
                if !ok {
                    continue;
                }
                let intensity = plus[(a, b)].norm_sqr();
                let (upper, lower) = if es.energy(a) >= es.energy(b) {
                    (a, b)
                } else {
                    (b, a)
                };
                let freq_hz = es.energy(upper) - es.energy(lower);
                if freq_hz <= 0.0 {
                    if intensity > 0.0 {
                        log::warn!("skipping zero-frequency line between levels {a} and {b}");
                    }
                    continue;
                }
                found.push((
                    rank,
                    Transition {
                        id: 0,
                        upper,
                        lower,
                        freq_hz,
                        intensity,
                        species: species.clone(),
                    },
                ));
            }
        }
    }

    let strongest = found.iter().map(|(_, t)| t.intensity).fold(0.0, f64::max);
    found.retain(|(_, t)| t.intensity > threshold * strongest);
    found.sort_by(|(ra, a), (rb, b)| {
        ra.cmp(rb)
            .then(a.freq_hz.total_cmp(&b.freq_hz))
            .then(a.upper.cmp(&b.upper))
            .then(a.lower.cmp(&b.lower))
    });

    let transitions: Vec<Transition> = found
        .into_iter()
        .enumerate()
        .map(|(k, (_, mut t))| {
            t.id = k + 1;
            t
        })
        .collect();
    if transitions.is_empty() {
        log::warn!("no transitions above the intensity threshold");
    }
    TransitionTable {
        transitions,
        n_levels: dim,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{build_hamiltonian, diagonalize, Spin};

    #[test]
    fn single_spin_line() {
        let sys = SpinSystem::new(
            vec![Spin {
                species: "H".into(),
                larmor_hz: 100.0,
                gamma_rel: 1.0,
            }],
            [],
        )
        .unwrap();
        let es = diagonalize(&build_hamiltonian(&sys)).unwrap();
        let table = compute_transitions(&es, &sys, DEFAULT_INTENSITY_THRESHOLD);
        assert_eq!(table.len(), 1);
        let t = table.get(1).unwrap();
        assert_eq!((t.upper, t.lower), (0, 1));
        assert!((t.freq_hz - 100.0).abs() < 1e-12);
        assert!((t.intensity - 1.0).abs() < 1e-12);
        assert!(table.get(0).is_none() && table.get(2).is_none());
    }
}
