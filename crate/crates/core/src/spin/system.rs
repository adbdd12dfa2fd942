use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::SpinError;

/// Dense 2ⁿ matrices become impractical beyond this size.
pub const MAX_SPINS: usize = 12;

/// Nuclear species tag, e.g. `H` or `F`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Species(pub String);

impl Species {
    pub fn new(tag: impl Into<String>) -> Self {
        Species(tag.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Relative gyromagnetic weight used when a config omits `gamma_rel`.
    pub fn default_gamma(&self) -> Option<f64> {
        match self.0.as_str() {
            "H" | "1H" => Some(1.0),
            "F" | "19F" => Some(0.94),
            _ => None,
        }
    }
}

impl fmt::Display for Species {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Species {
    fn from(s: &str) -> Self {
        Species(s.to_string())
    }
}

/// Per-species total magnetic quantum numbers of a level, stored as 2M so
/// that half-integers stay exact. Ordered like the species list of the
/// owning system.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Manifold(pub Vec<i32>);

impl Manifold {
    pub fn twice_m(&self, species_index: usize) -> i32 {
        self.0[species_index]
    }

    pub fn m(&self, species_index: usize) -> f64 {
        f64::from(self.0[species_index]) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spin {
    pub species: Species,
    /// Offset frequency in Hz.
    pub larmor_hz: f64,
    /// γᵢ/γ_ref.
    pub gamma_rel: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Coupling {
    /// Residual dipolar coupling D_ij in Hz.
    pub dipolar_hz: f64,
    /// Scalar coupling J_ij in Hz.
    pub scalar_hz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinSystem {
    spins: Vec<Spin>,
    couplings: BTreeMap<(usize, usize), Coupling>,
    species: Vec<Species>,
}

impl SpinSystem {
    /// Builds a validated system. Spin indices in `couplings` are 0-based.
    pub fn new(
        spins: Vec<Spin>,
        couplings: impl IntoIterator<Item = (usize, usize, Coupling)>,
    ) -> Result<Self, SpinError> {
        let n = spins.len();
        if n == 0 || n > MAX_SPINS {
            return Err(SpinError::SpinCount(n));
        }
        let mut species: Vec<Species> = Vec::new();
        let mut gamma_of: BTreeMap<&Species, f64> = BTreeMap::new();
        for (k, spin) in spins.iter().enumerate() {
            if !spin.larmor_hz.is_finite() {
                return Err(SpinError::NonFinite(format!("larmor_hz of spin {}", k + 1)));
            }
            if !spin.gamma_rel.is_finite() {
                return Err(SpinError::NonFinite(format!("gamma_rel of spin {}", k + 1)));
            }
            if spin.gamma_rel <= 0.0 {
                return Err(SpinError::BadGamma(spin.species.to_string()));
            }
            match gamma_of.get(&spin.species) {
                Some(&g) if g != spin.gamma_rel => {
                    return Err(SpinError::InconsistentGamma(spin.species.to_string()))
                }
                Some(_) => {}
                None => {
                    gamma_of.insert(&spin.species, spin.gamma_rel);
                    species.push(spin.species.clone());
                }
            }
        }

        let mut map = BTreeMap::new();
        for (i, j, c) in couplings {
            if i >= n {
                return Err(SpinError::SpinIndex(i));
            }
            if j >= n {
                return Err(SpinError::SpinIndex(j));
            }
            if i == j {
                return Err(SpinError::SelfPair(i, j));
            }
            if !c.dipolar_hz.is_finite() || !c.scalar_hz.is_finite() {
                return Err(SpinError::NonFinite(format!(
                    "coupling ({}, {})",
                    i + 1,
                    j + 1
                )));
            }
            let key = (i.min(j), i.max(j));
            if map.insert(key, c).is_some() {
                return Err(SpinError::DuplicatePair(i, j));
            }
        }

        Ok(SpinSystem {
            spins,
            couplings: map,
            species,
        })
    }

    pub fn n_spins(&self) -> usize {
        self.spins.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.spins.len()
    }

    pub fn spins(&self) -> &[Spin] {
        &self.spins
    }

    /// Species in order of first appearance in the spin list.
    pub fn species(&self) -> &[Species] {
        &self.species
    }

    pub fn species_index(&self, species: &Species) -> Option<usize> {
        self.species.iter().position(|s| s == species)
    }

    pub fn spin_species_index(&self, spin: usize) -> usize {
        self.species_index(&self.spins[spin].species)
            .expect("spin species is registered")
    }

    pub fn gamma(&self, species: &Species) -> Option<f64> {
        self.spins
            .iter()
            .find(|s| &s.species == species)
            .map(|s| s.gamma_rel)
    }

    /// Spins belonging to `species`.
    pub fn members(&self, species: &Species) -> Vec<usize> {
        (0..self.spins.len())
            .filter(|&k| &self.spins[k].species == species)
            .collect()
    }

    /// The species with the most spins; ties go to the one listed first.
    pub fn majority_species(&self) -> &Species {
        let mut best = &self.species[0];
        let mut best_count = 0;
        for s in &self.species {
            let count = self.members(s).len();
            if count > best_count {
                best = s;
                best_count = count;
            }
        }
        best
    }

    pub fn coupling(&self, i: usize, j: usize) -> Coupling {
        self.couplings
            .get(&(i.min(j), i.max(j)))
            .copied()
            .unwrap_or_default()
    }

    /// Couplings keyed by (i, j) with i < j, 0-based.
    pub fn couplings(&self) -> &BTreeMap<(usize, usize), Coupling> {
        &self.couplings
    }

    /// Heteronuclear pairs take the truncated I_z S_z coupling form.
    pub fn is_heteronuclear(&self, i: usize, j: usize) -> bool {
        self.spins[i].species != self.spins[j].species
    }

    /// Twice the magnetic quantum number of `spin` in product state `state`.
    /// Spin 0 is the most significant bit; a clear bit is α (m = +1/2).
    pub fn twice_m(&self, state: usize, spin: usize) -> i32 {
        let bit = (state >> (self.spins.len() - 1 - spin)) & 1;
        if bit == 0 {
            1
        } else {
            -1
        }
    }

    pub fn manifold_of(&self, state: usize) -> Manifold {
        let mut m = vec![0; self.species.len()];
        for spin in 0..self.spins.len() {
            m[self.spin_species_index(spin)] += self.twice_m(state, spin);
        }
        Manifold(m)
    }
}

/// Configuration as read from a spin-system file. Indices are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub spins: Vec<SpinEntry>,
    #[serde(default)]
    pub couplings: Vec<CouplingEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinEntry {
    pub index: usize,
    pub species: String,
    pub larmor_hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_rel: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingEntry {
    pub i: usize,
    pub j: usize,
    #[serde(default)]
    pub d_hz: f64,
    #[serde(default)]
    pub j_hz: f64,
}

pub fn build_spin_system(config: &SystemConfig) -> Result<SpinSystem, SpinError> {
    let n = config.spins.len();
    if n == 0 || n > MAX_SPINS {
        return Err(SpinError::SpinCount(n));
    }
    let mut slots: Vec<Option<Spin>> = vec![None; n];
    for entry in &config.spins {
        if entry.index == 0 || entry.index > n {
            return Err(SpinError::SpinIndex(entry.index));
        }
        let species = Species::new(entry.species.trim());
        let gamma_rel = match entry.gamma_rel {
            Some(g) => g,
            None => species
                .default_gamma()
                .ok_or_else(|| SpinError::MissingGamma(species.to_string()))?,
        };
        let slot = &mut slots[entry.index - 1];
        if slot.is_some() {
            return Err(SpinError::DuplicateSpin(entry.index));
        }
        *slot = Some(Spin {
            species,
            larmor_hz: entry.larmor_hz,
            gamma_rel,
        });
    }
    let spins = slots
        .into_iter()
        .map(|s| s.expect("all indices filled"))
        .collect();

    let mut couplings = Vec::with_capacity(config.couplings.len());
    for c in &config.couplings {
        if c.i == 0 || c.i > n {
            return Err(SpinError::SpinIndex(c.i));
        }
        if c.j == 0 || c.j > n {
            return Err(SpinError::SpinIndex(c.j));
        }
        if c.i == c.j {
            return Err(SpinError::SelfPair(c.i, c.j));
        }
        couplings.push((
            c.i - 1,
            c.j - 1,
            Coupling {
                dipolar_hz: c.d_hz,
                scalar_hz: c.j_hz,
            },
        ));
    }
    SpinSystem::new(spins, couplings).map_err(|e| match e {
        // report 1-based indices, matching the config file
        SpinError::DuplicatePair(i, j) => SpinError::DuplicatePair(i + 1, j + 1),
        other => other,
    })
}
