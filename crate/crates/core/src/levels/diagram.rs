use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::spin::Species;

use super::{LevelDiagram, ObservedTransition};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeResidual {
    pub transition_id: usize,
    pub observed_hz: f64,
    pub diagram_hz: f64,
    pub residual_hz: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub residuals: Vec<EdgeResidual>,
    pub max_residual_hz: f64,
    /// Lines with no edge in the diagram.
    pub unassigned: Vec<usize>,
    pub n_levels: usize,
    pub n_levels_expected: Option<usize>,
    pub tol: f64,
}

impl VerifyReport {
    pub fn flagged(&self) -> impl Iterator<Item = &EdgeResidual> {
        self.residuals.iter().filter(|r| r.flagged)
    }

    pub fn level_count_ok(&self) -> bool {
        self.n_levels_expected.is_none_or(|n| n == self.n_levels)
    }

    /// No flagged edge, no unassigned line, and the expected level count.
    pub fn all_pass(&self) -> bool {
        self.flagged().next().is_none() && self.unassigned.is_empty() && self.level_count_ok()
    }
}

/// Checks every edge of `diagram` against the observed line frequencies.
pub fn verify_diagram(
    diagram: &LevelDiagram,
    lines: &[ObservedTransition],
    tol: f64,
) -> VerifyReport {
    let mut residuals = Vec::new();
    let mut unassigned = Vec::new();
    for t in lines {
        let Some(e) = diagram.edge(t.id) else {
            unassigned.push(t.id);
            continue;
        };
        let diagram_hz = diagram.energy(e.upper) - diagram.energy(e.lower);
        let residual_hz = (diagram_hz - t.freq_hz).abs();
        residuals.push(EdgeResidual {
            transition_id: t.id,
            observed_hz: t.freq_hz,
            diagram_hz,
            residual_hz,
            flagged: residual_hz.is_nan() || residual_hz > tol,
        });
    }
    residuals.sort_by_key(|r| r.transition_id);
    unassigned.sort_unstable();
    let max_residual_hz = residuals.iter().map(|r| r.residual_hz).fold(0.0, f64::max);
    VerifyReport {
        residuals,
        max_residual_hz,
        unassigned,
        n_levels: diagram.n_levels(),
        n_levels_expected: diagram.n_levels_expected,
        tol,
    }
}

/// Partition of the levels into groups linked by edges of `species`.
/// Levels no such edge touches form singleton groups. Groups are sorted
/// and ordered by their smallest level id.
pub fn domains(diagram: &LevelDiagram, species: &Species) -> Vec<Vec<usize>> {
    let n = diagram.n_levels();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for e in diagram.edges.iter().filter(|e| &e.species == species) {
        let (a, b) = (root(&mut parent, e.upper), root(&mut parent, e.lower));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for l in 0..n {
        let r = root(&mut parent, l);
        groups.entry(r).or_default().push(l);
    }
    groups.into_values().collect()
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiagramMismatch {
    #[error("transition {0} missing from one diagram")]
    MissingEdge(usize),
    #[error("level correspondence breaks at transition {0}")]
    NotIsomorphic(usize),
    #[error("level count {0} vs {1}")]
    LevelCount(usize, usize),
    #[error("energy of level {level} off by {error_hz} Hz")]
    Energy { level: usize, error_hz: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Direct,
    Reflected,
}

impl LevelDiagram {
    /// The twin diagram under E → −E: every edge swaps upper and lower,
    /// energies are re-zeroed per component at the lower level of its
    /// lowest-numbered edge, and levels are renumbered into canonical order.
    pub fn reflected(&self) -> LevelDiagram {
        let mut zero: BTreeMap<usize, f64> = BTreeMap::new();
        for e in &self.edges {
            // the new lower level is the old upper one
            zero.entry(self.levels[e.upper].component)
                .or_insert(-self.energy(e.upper));
        }
        let energy =
            |l: &super::Level| -l.energy_hz - zero.get(&l.component).copied().unwrap_or(0.0);
        let mut order: Vec<usize> = (0..self.levels.len()).collect();
        order.sort_by(|&a, &b| {
            let (la, lb) = (&self.levels[a], &self.levels[b]);
            la.component
                .cmp(&lb.component)
                .then(energy(lb).total_cmp(&energy(la)))
                .then(a.cmp(&b))
        });
        let mut new_id = vec![0; order.len()];
        for (k, &old) in order.iter().enumerate() {
            new_id[old] = k;
        }
        LevelDiagram {
            levels: order
                .iter()
                .enumerate()
                .map(|(k, &old)| super::Level {
                    id: k,
                    energy_hz: energy(&self.levels[old]) + 0.0,
                    component: self.levels[old].component,
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| super::Edge {
                    upper: new_id[e.lower],
                    lower: new_id[e.upper],
                    ..e.clone()
                })
                .collect(),
            ..self.clone()
        }
    }

    /// Like [`LevelDiagram::matches_directly`], also accepting the
    /// reflected twin of `self`.
    pub fn matches(&self, truth: &LevelDiagram, tol: f64) -> Result<Orientation, DiagramMismatch> {
        match self.matches_directly(truth, tol) {
            Ok(()) => Ok(Orientation::Direct),
            Err(first) => self
                .reflected()
                .matches_directly(truth, tol)
                .map(|()| Orientation::Reflected)
                .map_err(|_| first),
        }
    }

    /// Checks that `self` and `truth` describe the same graph (levels
    /// matched through shared transition ids, roles preserved) and that
    /// energy differences agree within `tol` inside every component.
    pub fn matches_directly(&self, truth: &LevelDiagram, tol: f64) -> Result<(), DiagramMismatch> {
        let mine: BTreeSet<usize> = self.edges.iter().map(|e| e.transition_id).collect();
        let theirs: BTreeSet<usize> = truth.edges.iter().map(|e| e.transition_id).collect();
        if let Some(&t) = mine.symmetric_difference(&theirs).next() {
            return Err(DiagramMismatch::MissingEdge(t));
        }
        let mut fwd: BTreeMap<usize, usize> = BTreeMap::new();
        let mut back: BTreeMap<usize, usize> = BTreeMap::new();
        for e in &self.edges {
            let t = truth.edge(e.transition_id).expect("edge sets equal");
            for (a, b) in [(e.upper, t.upper), (e.lower, t.lower)] {
                if *fwd.entry(a).or_insert(b) != b || *back.entry(b).or_insert(a) != a {
                    return Err(DiagramMismatch::NotIsomorphic(e.transition_id));
                }
            }
        }
        let used_truth: BTreeSet<usize> = truth
            .edges
            .iter()
            .flat_map(|e| [e.upper, e.lower])
            .collect();
        if fwd.len() != used_truth.len() {
            return Err(DiagramMismatch::LevelCount(fwd.len(), used_truth.len()));
        }
        // one constant offset per component
        let mut offset: BTreeMap<usize, f64> = BTreeMap::new();
        for (&a, &b) in &fwd {
            let d = self.energy(a) - truth.energy(b);
            let o = *offset.entry(self.levels[a].component).or_insert(d);
            if (d - o).abs() > tol {
                return Err(DiagramMismatch::Energy {
                    level: a,
                    error_hz: d - o,
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levels::{Edge, Level};

    fn square() -> LevelDiagram {
        let e = [30.0, 10.0, 4.0, -15.0];
        let pairs = [(0, 1), (2, 3), (0, 2), (1, 3)];
        LevelDiagram {
            levels: e
                .iter()
                .enumerate()
                .map(|(id, &energy_hz)| Level {
                    id,
                    energy_hz,
                    component: 0,
                })
                .collect(),
            edges: pairs
                .iter()
                .enumerate()
                .map(|(k, &(u, l))| Edge {
                    transition_id: k + 1,
                    upper: u,
                    lower: l,
                    freq_hz: e[u] - e[l],
                    species: if k < 2 { "H".into() } else { "F".into() },
                })
                .collect(),
            unassigned: vec![],
            n_components: 1,
            n_levels_expected: Some(4),
        }
    }

    fn lines(d: &LevelDiagram) -> Vec<ObservedTransition> {
        d.edges
            .iter()
            .map(|e| ObservedTransition {
                id: e.transition_id,
                freq_hz: e.freq_hz,
                species: e.species.clone(),
            })
            .collect()
    }

    #[test]
    fn ground_truth_has_zero_residual() {
        let d = square();
        let r = verify_diagram(&d, &lines(&d), 1e-6);
        assert_eq!(r.max_residual_hz, 0.0);
        assert!(r.all_pass());
    }

    #[test]
    fn perturbed_line_is_flagged() {
        let d = square();
        let mut obs = lines(&d);
        obs[2].freq_hz += 2e-6;
        obs.push(ObservedTransition {
            id: 9,
            freq_hz: 5.0,
            species: "F".into(),
        });
        let r = verify_diagram(&d, &obs, 1e-6);
        let flagged: Vec<usize> = r.flagged().map(|e| e.transition_id).collect();
        assert_eq!(flagged, vec![3]);
        assert_eq!(r.unassigned, vec![9]);
        assert!(!r.all_pass());
    }

    #[test]
    fn domain_partition() {
        let d = square();
        assert_eq!(domains(&d, &"H".into()), vec![vec![0, 1], vec![2, 3]]);
        assert_eq!(domains(&d, &"F".into()), vec![vec![0, 2], vec![1, 3]]);
    }

    #[test]
    fn gauge_shift_still_matches() {
        let d = square();
        let mut shifted = d.clone();
        for l in &mut shifted.levels {
            l.energy_hz += 123.0;
        }
        assert_eq!(shifted.matches(&d, 1e-9), Ok(Orientation::Direct));
        assert_eq!(
            verify_diagram(&shifted, &lines(&d), 1e-9).max_residual_hz,
            0.0
        );
        let twin = d.reflected();
        assert_eq!(twin.matches(&d, 1e-9), Ok(Orientation::Reflected));
        assert!(twin.matches_directly(&d, 1e-9).is_err());
        assert_eq!(verify_diagram(&twin, &lines(&d), 1e-9).max_residual_hz, 0.0);
        assert!(twin.reflected().matches_directly(&d, 1e-9).is_ok());
        let mut bent = d.clone();
        bent.levels[0].energy_hz += 1.0;
        assert!(bent.matches(&d, 1e-6).is_err());
    }
}
