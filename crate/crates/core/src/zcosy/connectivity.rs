use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::spin::TransitionTable;

use super::{PeakList2D, ZcosyError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Connection {
    /// The shared level is upper of one transition and lower of the other.
    Progressive,
    /// The shared level is upper of both or lower of both.
    Regressive,
}

impl fmt::Display for Connection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Connection::Progressive => "progressive",
            Connection::Regressive => "regressive",
        })
    }
}

impl FromStr for Connection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "progressive" | "p" => Ok(Connection::Progressive),
            "regressive" | "r" => Ok(Connection::Regressive),
            other => Err(format!("unknown connectivity type `{other}`")),
        }
    }
}

/// Symmetric signed connectivity over transition ids. Absent pairs (and
/// the diagonal) mean "not connected".
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConnectivityMatrix {
    ids: BTreeSet<usize>,
    entries: BTreeMap<(usize, usize), Connection>,
}

impl ConnectivityMatrix {
    pub fn new(ids: impl IntoIterator<Item = usize>) -> Self {
        ConnectivityMatrix {
            ids: ids.into_iter().collect(),
            entries: BTreeMap::new(),
        }
    }

    /// Records (i, j); re-stating a pair must agree with the earlier type.
    pub fn set(&mut self, i: usize, j: usize, kind: Connection) -> Result<(), ZcosyError> {
        if i == j {
            return Err(ZcosyError::DiagonalConnection(i));
        }
        self.ids.insert(i);
        self.ids.insert(j);
        let key = (i.min(j), i.max(j));
        match self.entries.get(&key) {
            Some(&k) if k != kind => Err(ZcosyError::InconsistentSigns(key.0, key.1)),
            _ => {
                self.entries.insert(key, kind);
                Ok(())
            }
        }
    }

    pub fn get(&self, i: usize, j: usize) -> Option<Connection> {
        self.entries.get(&(i.min(j), i.max(j))).copied()
    }

    pub fn ids(&self) -> &BTreeSet<usize> {
        &self.ids
    }

    /// Pairs (i, j) with i < j, in ascending order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, Connection)> + '_ {
        self.entries.iter().map(|(&(i, j), &k)| (i, j, k))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> Vec<(usize, Connection)> {
        self.pairs()
            .filter_map(|(a, b, k)| {
                if a == i {
                    Some((b, k))
                } else if b == i {
                    Some((a, k))
                } else {
                    None
                }
            })
            .collect()
    }

    /// Connectivity read directly off the level geometry of a table.
    pub fn from_geometry(table: &TransitionTable) -> Self {
        let mut m = ConnectivityMatrix::new(table.iter().map(|t| t.id));
        let ts = table.as_slice();
        for (a, ta) in ts.iter().enumerate() {
            for tb in &ts[a + 1..] {
                let kind = if ta.upper == tb.lower || ta.lower == tb.upper {
                    Connection::Progressive
                } else if ta.upper == tb.upper || ta.lower == tb.lower {
                    Connection::Regressive
                } else {
                    continue;
                };
                m.entries.insert((ta.id, tb.id), kind);
            }
        }
        m
    }
}

/// Classifies each cross peak against the diagonal peak of its ω1 row:
/// opposite sign is progressive, same sign regressive.
pub fn extract_connectivity(peaks: &PeakList2D) -> Result<ConnectivityMatrix, ZcosyError> {
    let mut m = ConnectivityMatrix::new(peaks.iter().flat_map(|p| [p.t1_id, p.t2_id]));
    for p in peaks
        .iter()
        .filter(|p| !p.is_diagonal() && p.amplitude != 0.0)
    {
        let diag = peaks
            .diagonal(p.t1_id)
            .ok_or(ZcosyError::MissingDiagonal(p.t1_id))?;
        let kind = if (p.amplitude > 0.0) != (diag.amplitude > 0.0) {
            Connection::Progressive
        } else {
            Connection::Regressive
        };
        m.set(p.t1_id, p.t2_id, kind)?;
    }
    Ok(m)
}
