use std::collections::{BTreeMap, BTreeSet};

use crate::zcosy::{Connection, ConnectivityMatrix};

use super::{Edge, Level, LevelDiagram, LevelError, ObservedTransition};

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructOptions {
    /// Energy closure tolerance in Hz.
    pub tol: f64,
    /// Declared spin count; sets the expected level count 2ⁿ.
    pub n_spins: Option<usize>,
    /// Keep searching after the first solution and count alternatives.
    pub exhaustive: bool,
    /// Exhaustive counting stops here.
    pub max_solutions: usize,
    pub max_nodes: usize,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        ReconstructOptions {
            tol: 1e-6,
            n_spins: None,
            exhaustive: false,
            max_solutions: 64,
            max_nodes: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub diagram: LevelDiagram,
    /// Product of per-component solution counts (1 unless exhaustive).
    pub solutions: usize,
    /// Connectivities whose shared-level choice differs between solutions.
    pub undetermined: Vec<(usize, usize)>,
}

// Slot 2k is the upper end of local transition k, 2k+1 the lower end.
fn upper(k: usize) -> usize {
    2 * k
}
fn lower(k: usize) -> usize {
    2 * k + 1
}

/// Slot identity: union by size, no path compression, undoable.
struct IdentitySets {
    parent: Vec<usize>,
    size: Vec<usize>,
    members: Vec<Vec<usize>>,
    trail: Vec<(usize, usize, usize)>,
}

impl IdentitySets {
    fn new(n: usize) -> Self {
        IdentitySets {
            parent: (0..n).collect(),
            size: vec![1; n],
            members: (0..n).map(|x| vec![x]).collect(),
            trail: Vec::new(),
        }
    }

    fn find(&self, mut x: usize) -> usize {
        while self.parent[x] != x {
            x = self.parent[x];
        }
        x
    }

    fn same(&self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        let old_len = self.members[ra].len();
        let moved = std::mem::take(&mut self.members[rb]);
        self.members[ra].extend_from_slice(&moved);
        self.members[rb] = moved;
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        self.trail.push((rb, ra, old_len));
    }

    fn undo(&mut self) {
        let (child, root, old_len) = self.trail.pop().expect("undo on empty trail");
        self.parent[child] = child;
        self.size[root] -= self.size[child];
        self.members[root].truncate(old_len);
    }
}

/// Energy potentials: E(x) = E(parent) + pot[x].
struct EnergySets {
    parent: Vec<usize>,
    pot: Vec<f64>,
    size: Vec<usize>,
    trail: Vec<(usize, usize)>,
}

impl EnergySets {
    fn new(n: usize) -> Self {
        EnergySets {
            parent: (0..n).collect(),
            pot: vec![0.0; n],
            size: vec![1; n],
            trail: Vec::new(),
        }
    }

    fn find(&self, mut x: usize) -> (usize, f64) {
        let mut p = 0.0;
        while self.parent[x] != x {
            p += self.pot[x];
            x = self.parent[x];
        }
        (x, p)
    }

    /// E(a) − E(b) if both are in one set.
    fn difference(&self, a: usize, b: usize) -> Option<f64> {
        let (ra, pa) = self.find(a);
        let (rb, pb) = self.find(b);
        (ra == rb).then_some(pa - pb)
    }

    /// Asserts E(a) − E(b) = d for a and b in different sets.
    fn link(&mut self, a: usize, b: usize, d: f64) {
        let (ra, pa) = self.find(a);
        let (rb, pb) = self.find(b);
        debug_assert_ne!(ra, rb);
        if self.size[ra] >= self.size[rb] {
            self.parent[rb] = ra;
            self.pot[rb] = pa - pb - d;
            self.size[ra] += self.size[rb];
            self.trail.push((rb, ra));
        } else {
            self.parent[ra] = rb;
            self.pot[ra] = d - pa + pb;
            self.size[rb] += self.size[ra];
            self.trail.push((ra, rb));
        }
    }

    fn undo(&mut self) {
        let (child, root) = self.trail.pop().expect("undo on empty trail");
        self.parent[child] = child;
        self.pot[child] = 0.0;
        self.size[root] -= self.size[child];
    }
}

struct Constraint {
    i: usize,
    j: usize,
    options: [(usize, usize); 2],
}

struct Solved {
    /// (member slots, energy) per level.
    levels: Vec<(Vec<usize>, f64)>,
    /// Level index per slot.
    slot_level: Vec<usize>,
}

struct Component<'a> {
    freq: Vec<f64>,
    conn: Vec<Option<Connection>>,
    m: usize,
    constraints: Vec<Constraint>,
    tol: f64,
    ids: &'a [usize],
    id: IdentitySets,
    en: EnergySets,
    nodes: usize,
    max_nodes: usize,
    exhaustive: bool,
    max_solutions: usize,
    solutions: Vec<Vec<u8>>,
    first: Option<Solved>,
    best: (usize, Vec<usize>),
}

enum Flow {
    Continue,
    Stop,
}

impl<'a> Component<'a> {
    fn new(
        ids: &'a [usize],
        lines: &BTreeMap<usize, &ObservedTransition>,
        conn: &ConnectivityMatrix,
        opts: &ReconstructOptions,
    ) -> Self {
        let m = ids.len();
        let freq: Vec<f64> = ids.iter().map(|id| lines[id].freq_hz).collect();
        let mut local_conn = vec![None; m * m];
        let mut constraints = Vec::new();
        for a in 0..m {
            for b in a + 1..m {
                if let Some(kind) = conn.get(ids[a], ids[b]) {
                    local_conn[a * m + b] = Some(kind);
                    local_conn[b * m + a] = Some(kind);
                    let options = match kind {
                        Connection::Progressive => [(upper(a), lower(b)), (lower(a), upper(b))],
                        Connection::Regressive => [(lower(a), lower(b)), (upper(a), upper(b))],
                    };
                    constraints.push(Constraint {
                        i: a,
                        j: b,
                        options,
                    });
                }
            }
        }
        let mut en = EnergySets::new(2 * m);
        for (k, &f) in freq.iter().enumerate() {
            en.link(upper(k), lower(k), f);
        }
        Component {
            freq,
            conn: local_conn,
            m,
            constraints,
            tol: opts.tol,
            ids,
            id: IdentitySets::new(2 * m),
            en,
            nodes: 0,
            max_nodes: opts.max_nodes,
            exhaustive: opts.exhaustive,
            max_solutions: opts.max_solutions.max(1),
            solutions: Vec::new(),
            first: None,
            best: (0, Vec::new()),
        }
    }

    fn checkpoint(&self) -> (usize, usize) {
        (self.id.trail.len(), self.en.trail.len())
    }

    fn rollback(&mut self, cp: (usize, usize)) {
        while self.id.trail.len() > cp.0 {
            self.id.undo();
        }
        while self.en.trail.len() > cp.1 {
            self.en.undo();
        }
    }

    /// Whether slots a and b may denote one level.
    fn can_merge(&self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.id.find(a), self.id.find(b));
        if ra == rb {
            return true;
        }
        for &x in &self.id.members[ra] {
            for &y in &self.id.members[rb] {
                let (tx, ty) = (x / 2, y / 2);
                if tx == ty {
                    return false;
                }
                let same_role = x % 2 == y % 2;
                match self.conn[tx * self.m + ty] {
                    None => return false,
                    Some(Connection::Progressive) if same_role => return false,
                    Some(Connection::Regressive) if !same_role => return false,
                    _ => {}
                }
                // a second shared level between the same two transitions
                if self.id.same(x ^ 1, y ^ 1) {
                    return false;
                }
            }
        }
        match self.en.difference(a, b) {
            Some(d) => d.abs() <= self.tol,
            None => true,
        }
    }

    fn merge(&mut self, a: usize, b: usize) {
        if self.id.same(a, b) {
            return;
        }
        if self.en.difference(a, b).is_none() {
            self.en.link(a, b, 0.0);
        }
        self.id.union(a, b);
    }

    fn satisfied(&self, c: &Constraint) -> bool {
        c.options.iter().any(|&(a, b)| self.id.same(a, b))
    }

    fn record_progress(&mut self) {
        let mut placed = BTreeSet::new();
        let mut count = 0;
        for c in &self.constraints {
            if self.satisfied(c) {
                count += 1;
                placed.insert(self.ids[c.i]);
                placed.insert(self.ids[c.j]);
            }
        }
        if count > self.best.0 || self.best.1.is_empty() {
            self.best = (count, placed.into_iter().collect());
        }
    }

    /// Applies every forced choice until none remains; false on a dead end.
    fn propagate(&mut self) -> bool {
        loop {
            let mut changed = false;
            for k in 0..self.constraints.len() {
                let c = &self.constraints[k];
                if self.satisfied(c) {
                    continue;
                }
                let o = c.options;
                match (
                    self.can_merge(o[0].0, o[0].1),
                    self.can_merge(o[1].0, o[1].1),
                ) {
                    (false, false) => return false,
                    (true, false) => self.merge(o[0].0, o[0].1),
                    (false, true) => self.merge(o[1].0, o[1].1),
                    (true, true) => continue,
                }
                changed = true;
            }
            if !changed {
                return true;
            }
        }
    }

    fn pick_branch(&self) -> Option<usize> {
        let anchor = self.en.find(lower(0)).0;
        let mut first = None;
        for (k, c) in self.constraints.iter().enumerate() {
            if self.satisfied(c) {
                continue;
            }
            if self.en.find(upper(c.i)).0 == anchor || self.en.find(upper(c.j)).0 == anchor {
                return Some(k);
            }
            first.get_or_insert(k);
        }
        first
    }

    fn search(&mut self) -> Result<Flow, LevelError> {
        self.nodes += 1;
        if self.nodes > self.max_nodes {
            return Err(LevelError::SearchLimit(self.max_nodes));
        }
        let cp = self.checkpoint();
        let ok = self.propagate();
        self.record_progress();
        if !ok {
            self.rollback(cp);
            return Ok(Flow::Continue);
        }
        let flow = match self.pick_branch() {
            None => {
                self.record_solution();
                if self.exhaustive && self.solutions.len() < self.max_solutions {
                    Flow::Continue
                } else {
                    Flow::Stop
                }
            }
            Some(k) => {
                let mut flow = Flow::Continue;
                for opt in 0..2 {
                    let (a, b) = self.constraints[k].options[opt];
                    if !self.can_merge(a, b) {
                        continue;
                    }
                    let inner = self.checkpoint();
                    self.merge(a, b);
                    let r = self.search()?;
                    self.rollback(inner);
                    if let Flow::Stop = r {
                        flow = Flow::Stop;
                        break;
                    }
                }
                flow
            }
        };
        self.rollback(cp);
        Ok(flow)
    }

    fn record_solution(&mut self) {
        let choice = self
            .constraints
            .iter()
            .map(|c| {
                if self.id.same(c.options[0].0, c.options[0].1) {
                    0
                } else {
                    1
                }
            })
            .collect();
        self.solutions.push(choice);
        if self.first.is_some() {
            return;
        }
        let reference = self.en.find(lower(0)).1;
        let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for slot in 0..2 * self.m {
            by_root.entry(self.id.find(slot)).or_default().push(slot);
        }
        let mut levels: Vec<(Vec<usize>, f64)> = by_root
            .into_values()
            .map(|slots| {
                let e = slots
                    .iter()
                    .map(|&s| self.en.find(s).1 - reference)
                    .sum::<f64>()
                    / slots.len() as f64;
                (slots, e)
            })
            .collect();
        levels.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0[0].cmp(&b.0[0])));
        let mut slot_level = vec![0; 2 * self.m];
        for (k, (slots, _)) in levels.iter().enumerate() {
            for &s in slots {
                slot_level[s] = k;
            }
        }
        self.first = Some(Solved { levels, slot_level });
    }
}

fn validate<'a>(
    lines: &'a [ObservedTransition],
    conn: &ConnectivityMatrix,
) -> Result<BTreeMap<usize, &'a ObservedTransition>, LevelError> {
    let mut map = BTreeMap::new();
    for t in lines {
        if !(t.freq_hz.is_finite() && t.freq_hz > 0.0) {
            return Err(LevelError::BadFrequency(t.id));
        }
        if map.insert(t.id, t).is_some() {
            return Err(LevelError::DuplicateTransition(t.id));
        }
    }
    for (i, j, _) in conn.pairs() {
        for id in [i, j] {
            if !map.contains_key(&id) {
                return Err(LevelError::UnknownTransition(id));
            }
        }
    }
    Ok(map)
}

/// Groups transition ids into connected components of the connectivity
/// graph, each sorted, ordered by smallest id.
fn components(ids: &[usize], conn: &ConnectivityMatrix) -> Vec<Vec<usize>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for &start in ids {
        if !seen.insert(start) {
            continue;
        }
        let mut comp = vec![start];
        let mut stack = vec![start];
        while let Some(t) = stack.pop() {
            for (n, _) in conn.neighbors(t) {
                if seen.insert(n) {
                    comp.push(n);
                    stack.push(n);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Builds the level diagram implied by `lines` and their signed
/// connectivity. Each connected component of the connectivity graph gets
/// its own zero of energy at the lower level of its lowest-numbered
/// transition. A transition without any connectivity stays unassigned,
/// except when it is the only input line.
///
/// Frequencies and connectivity cannot tell a diagram from its reflection
/// E → −E (upper and lower swapped on every edge). Per component, the twin
/// returned is the one whose first connectivity takes its first option;
/// solution counts are up to this reflection.
pub fn reconstruct_levels(
    lines: &[ObservedTransition],
    conn: &ConnectivityMatrix,
    opts: &ReconstructOptions,
) -> Result<Reconstruction, LevelError> {
    let by_id = validate(lines, conn)?;
    let ids: Vec<usize> = by_id.keys().copied().collect();

    let mut levels = Vec::new();
    let mut edges = Vec::new();
    let mut unassigned = Vec::new();
    let mut n_components = 0;
    let mut solutions = 1usize;
    let mut undetermined = Vec::new();

    for comp in components(&ids, conn) {
        if comp.len() == 1 && ids.len() > 1 {
            unassigned.push(comp[0]);
            continue;
        }
        let mut solver = Component::new(&comp, &by_id, conn, opts);
        // E -> -E maps solutions onto solutions with every choice flipped;
        // fixing the first choice keeps one twin of each pair.
        if let Some(c) = solver.constraints.first() {
            let (a, b) = c.options[0];
            solver.merge(a, b);
        }
        solver.search()?;
        let Some(solved) = solver.first.take() else {
            return Err(LevelError::Inconsistent {
                component: comp.clone(),
                placed: solver.best.1.clone(),
                satisfied: solver.best.0,
                total: solver.constraints.len(),
            });
        };
        solutions = solutions.saturating_mul(solver.solutions.len());
        if solver.solutions.len() > 1 {
            for (k, c) in solver.constraints.iter().enumerate() {
                if solver
                    .solutions
                    .iter()
                    .any(|s| s[k] != solver.solutions[0][k])
                {
                    undetermined.push((comp[c.i], comp[c.j]));
                }
            }
        }

        let base = levels.len();
        for (k, (_, e)) in solved.levels.iter().enumerate() {
            levels.push(Level {
                id: base + k,
                energy_hz: *e,
                component: n_components,
            });
        }
        for (k, &tid) in comp.iter().enumerate() {
            edges.push(Edge {
                transition_id: tid,
                upper: base + solved.slot_level[upper(k)],
                lower: base + solved.slot_level[lower(k)],
                freq_hz: solver.freq[k],
                species: by_id[&tid].species.clone(),
            });
        }
        n_components += 1;
    }

    if solutions > 1 {
        log::warn!(
            "{solutions} consistent level diagrams; undetermined connectivities: {undetermined:?}"
        );
    }
    edges.sort_by_key(|e| e.transition_id);
    Ok(Reconstruction {
        diagram: LevelDiagram {
            levels,
            edges,
            unassigned,
            n_components,
            n_levels_expected: opts.n_spins.map(|n| 1 << n),
        },
        solutions,
        undetermined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(id: usize, f: f64) -> ObservedTransition {
        ObservedTransition {
            id,
            freq_hz: f,
            species: "H".into(),
        }
    }

    fn conn(pairs: &[(usize, usize, Connection)]) -> ConnectivityMatrix {
        let mut m = ConnectivityMatrix::default();
        for &(i, j, k) in pairs {
            m.set(i, j, k).unwrap();
        }
        m
    }

    #[test]
    fn single_transition() {
        let r = reconstruct_levels(&[line(1, 42.0)], &conn(&[]), &ReconstructOptions::default())
            .unwrap();
        let d = r.diagram;
        assert_eq!(d.n_levels(), 2);
        assert_eq!(d.levels[0].energy_hz, 42.0);
        assert_eq!(d.levels[1].energy_hz, 0.0);
        assert_eq!((d.edges[0].upper, d.edges[0].lower), (0, 1));
    }

    #[test]
    fn weakly_coupled_pair_square() {
        // levels at 30, 10, 4, -15
        use Connection::*;
        let lines = [line(1, 20.0), line(2, 19.0), line(3, 26.0), line(4, 25.0)];
        let c = conn(&[
            (1, 3, Regressive),
            (1, 4, Progressive),
            (2, 3, Progressive),
            (2, 4, Regressive),
        ]);
        let r = reconstruct_levels(
            &lines,
            &c,
            &ReconstructOptions {
                exhaustive: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(r.solutions, 1);
        let d = r.diagram;
        assert_eq!(d.n_levels(), 4);
        for e in &d.edges {
            assert!((d.energy(e.upper) - d.energy(e.lower) - e.freq_hz).abs() < 1e-9);
        }
        let e1 = d.edge(1).unwrap();
        assert_eq!(d.energy(e1.lower), 0.0);
    }

    #[test]
    fn isolated_line_unassigned() {
        use Connection::*;
        let lines = [line(1, 10.0), line(2, 15.0), line(3, 99.0)];
        let c = conn(&[(1, 2, Progressive)]);
        let d = reconstruct_levels(&lines, &c, &ReconstructOptions::default())
            .unwrap()
            .diagram;
        assert_eq!(d.unassigned, vec![3]);
        assert_eq!(d.n_levels(), 3);
        assert_eq!(d.n_components, 1);
    }

    #[test]
    fn inconsistent_cycle_reports_subset() {
        use Connection::*;
        // three mutually progressive lines cannot form one ladder
        let lines = [line(1, 10.0), line(2, 15.0), line(3, 40.0)];
        let c = conn(&[
            (1, 2, Progressive),
            (1, 3, Progressive),
            (2, 3, Progressive),
        ]);
        match reconstruct_levels(&lines, &c, &ReconstructOptions::default()) {
            Err(LevelError::Inconsistent {
                satisfied, total, ..
            }) => {
                assert_eq!(total, 3);
                assert!((1..3).contains(&satisfied));
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn unknown_connectivity_id() {
        let c = conn(&[(1, 7, Connection::Regressive)]);
        assert_eq!(
            reconstruct_levels(&[line(1, 1.0)], &c, &ReconstructOptions::default()),
            Err(LevelError::UnknownTransition(7))
        );
    }
}
