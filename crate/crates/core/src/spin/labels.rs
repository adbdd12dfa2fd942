use std::fmt;

use super::{EigenSystem, SpinError, SpinSystem};

const TIE_TOL: f64 = 1e-9;

/// Computational label of an n-qubit basis state; bit n−1−k is qubit k
/// (qubit 0 leftmost) and a clear bit means α.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QubitLabel {
    pub bits: u32,
    pub width: usize,
}

impl QubitLabel {
    pub fn new(bits: u32, width: usize) -> Self {
        QubitLabel { bits, width }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim().trim_start_matches('|').trim_end_matches('>');
        if s.is_empty() || s.len() > 31 || !s.chars().all(|c| c == '0' || c == '1') {
            return None;
        }
        Some(QubitLabel {
            bits: u32::from_str_radix(s, 2).ok()?,
            width: s.len(),
        })
    }

    pub fn bit(&self, qubit: usize) -> bool {
        (self.bits >> (self.width - 1 - qubit)) & 1 == 1
    }

    pub fn hamming(&self, other: &QubitLabel) -> u32 {
        (self.bits ^ other.bits).count_ones()
    }
}

impl fmt::Display for QubitLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:0width$b}", self.bits, width = self.width)
    }
}

/// Bijection between eigen-levels and computational labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    level_to_label: Vec<u32>,
    label_to_level: Vec<usize>,
}

impl LabelMap {
    pub fn from_level_labels(width: usize, level_to_label: Vec<u32>) -> Self {
        let mut label_to_level = vec![usize::MAX; level_to_label.len()];
        for (level, &bits) in level_to_label.iter().enumerate() {
            assert_eq!(
                label_to_level[bits as usize],
                usize::MAX,
                "labels must be bijective"
            );
            label_to_level[bits as usize] = level;
        }
        LabelMap {
            width,
            level_to_label,
            label_to_level,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn label(&self, level: usize) -> QubitLabel {
        QubitLabel::new(self.level_to_label[level], self.width)
    }

    pub fn level(&self, label: QubitLabel) -> Option<usize> {
        self.label_to_level.get(label.bits as usize).copied()
    }

    pub fn level_of(&self, label: &str) -> Option<usize> {
        let l = QubitLabel::parse(label)?;
        if l.width != self.width {
            return None;
        }
        self.level(l)
    }
}

/// Gives each eigenstate the label of the product state it overlaps most,
/// greedily in order of descending overlap. A pair is skipped when either
/// side is already taken; an exact tie between free candidates is refused.
pub fn label_states(es: &EigenSystem, sys: &SpinSystem) -> Result<LabelMap, SpinError> {
    let dim = es.dim();
    let v = es.vectors();
    let overlap = |state: usize, level: usize| v[(state, level)].norm_sqr();

    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for level in 0..dim {
        for state in 0..dim {
            let w = overlap(state, level);
            if w > 1e-12 {
                pairs.push((w, level, state));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut level_label: Vec<Option<u32>> = vec![None; dim];
    let mut state_taken = vec![false; dim];
    let width = sys.n_spins();
    let fmt = |s: usize| QubitLabel::new(s as u32, width).to_string();

    for (w, level, state) in pairs {
        if level_label[level].is_some() || state_taken[state] {
            continue;
        }
        for other in 0..dim {
            if other != state && !state_taken[other] && (overlap(other, level) - w).abs() <= TIE_TOL
            {
                return Err(SpinError::AmbiguousLabel {
                    levels: (level, level),
                    labels: (fmt(state), fmt(other)),
                    overlap: w,
                });
            }
            if other != level
                && level_label[other].is_none()
                && (overlap(state, other) - w).abs() <= TIE_TOL
            {
                return Err(SpinError::AmbiguousLabel {
                    levels: (level, other),
                    labels: (fmt(state), fmt(state)),
                    overlap: w,
                });
            }
        }
        level_label[level] = Some(state as u32);
        state_taken[state] = true;
    }

    let labels = level_label
        .into_iter()
        .map(|l| l.expect("block-diagonal eigenvectors cover every product state"))
        .collect();
    Ok(LabelMap::from_level_labels(width, labels))
}
