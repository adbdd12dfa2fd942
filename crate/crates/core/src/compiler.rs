//! Level permutations compiled into sequences of transition-selective π
//! pulses by breadth-first search over the transition graph.

use std::collections::VecDeque;
use std::fmt::Write;

use serde::Serialize;

use crate::spin::TransitionTable;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompileError {
    #[error("level {0} outside 0..{1}")]
    LevelOutOfRange(usize, usize),
    #[error("no pulse path between levels {0} and {1}")]
    NoPath(usize, usize),
    #[error("cycle {0:?} spans disconnected parts of the transition graph")]
    DisconnectedCycle(Vec<usize>),
    #[error("not a permutation of {0} levels")]
    NotAPermutation(usize),
    #[error("compiled sequence does not reproduce the target permutation")]
    Verification,
}

/// Ordered π pulses and the population permutation they produce;
/// `net_permutation[i]` is where the content of level i ends up.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PulseSequence {
    pub transitions: Vec<usize>,
    pub net_permutation: Vec<usize>,
}

impl PulseSequence {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    /// Script fragment with one selective π pulse per line, each followed
    /// by a crush when `crush` is set.
    pub fn to_script(&self, crush: bool) -> String {
        let mut out = String::new();
        for t in &self.transitions {
            let _ = writeln!(out, "pulse selective {t} pi 0");
            if crush {
                let _ = writeln!(out, "crush all");
            }
        }
        out
    }
}

/// Composes the level transpositions of `transitions` applied in order.
pub fn compose_sequence(table: &TransitionTable, transitions: &[usize]) -> Option<Vec<usize>> {
    let n = table.n_levels();
    // content[pos] = original level whose content sits at pos
    let mut content: Vec<usize> = (0..n).collect();
    for &id in transitions {
        let t = table.get(id)?;
        content.swap(t.upper, t.lower);
    }
    let mut dest = vec![0; n];
    for (pos, &orig) in content.iter().enumerate() {
        dest[orig] = pos;
    }
    Some(dest)
}

/// Shortest level path a → b as transition ids, neighbors visited in
/// ascending level order.
fn shortest_path(table: &TransitionTable, a: usize, b: usize) -> Option<Vec<usize>> {
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
    let mut edges = Vec::new();
    let mut v = b;
    while let Some((p, id)) = prev[v] {
        edges.push(id);
        v = p;
    }
    edges.reverse();
    Some(edges)
}

/// π-pulse sequence exchanging the populations of levels `a` and `b`:
/// with a shortest path of edges e₁…e_k the palindrome e₁…e_{k−1} e_k
/// e_{k−1}…e₁ is emitted, so every intermediate level is restored.
pub fn compile_level_swap(
    table: &TransitionTable,
    a: usize,
    b: usize,
) -> Result<PulseSequence, CompileError> {
    let n = table.n_levels();
    for l in [a, b] {
        if l >= n {
            return Err(CompileError::LevelOutOfRange(l, n));
        }
    }
    let mut transitions = Vec::new();
    if a != b {
        let path = shortest_path(table, a, b).ok_or(CompileError::NoPath(a, b))?;
        transitions.extend_from_slice(&path);
        transitions.extend(path.iter().rev().skip(1));
    }
    let net_permutation =
        compose_sequence(table, &transitions).expect("path ids come from the table");
    Ok(PulseSequence {
        transitions,
        net_permutation,
    })
}

/// Cycles of `perm` with more than one element, each starting at its
/// smallest level.
fn cycles(perm: &[usize]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; perm.len()];
    let mut out = Vec::new();
    for start in 0..perm.len() {
        if seen[start] || perm[start] == start {
            continue;
        }
        let mut cycle = Vec::new();
        let mut v = start;
        while !seen[v] {
            seen[v] = true;
            cycle.push(v);
            v = perm[v];
        }
        out.push(cycle);
    }
    out
}

/// Sequence realizing `perm` (content of level i moves to `perm[i]`). Each
/// cycle c₁→c₂→…→c_m becomes the swaps (c₁ c₂), (c₁ c₃), …, (c₁ c_m).
pub fn compile_permutation(
    table: &TransitionTable,
    perm: &[usize],
) -> Result<PulseSequence, CompileError> {
    let n = table.n_levels();
    let mut check = vec![false; n];
    if perm.len() != n
        || perm
            .iter()
            .any(|&p| p >= n || std::mem::replace(&mut check[p], true))
    {
        return Err(CompileError::NotAPermutation(n));
    }
    let mut transitions = Vec::new();
    for cycle in cycles(perm) {
        for &c in &cycle[1..] {
            let swap = compile_level_swap(table, cycle[0], c).map_err(|e| match e {
                CompileError::NoPath(..) => CompileError::DisconnectedCycle(cycle.clone()),
                other => other,
            })?;
            transitions.extend(swap.transitions);
        }
    }
    let net_permutation = compose_sequence(table, &transitions).expect("ids come from the table");
    if net_permutation != perm {
        return Err(CompileError::Verification);
    }
    Ok(PulseSequence {
        transitions,
        net_permutation,
    })
}
