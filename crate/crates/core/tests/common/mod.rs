#![allow(dead_code)]

use std::path::PathBuf;

use dipolar_qip::io::read_system;
use dipolar_qip::spin::{Coupling, Spin, SpinModel, SpinSystem};
use dipolar_qip::zcosy::ConnectivityMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn placeholder_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/five_spin.toml")
}

pub fn placeholder_model() -> SpinModel {
    let sys = read_system(&placeholder_path()).expect("placeholder config");
    SpinModel::with_default_threshold(sys).expect("placeholder model")
}

/// Random system with n spins: protons crowded within 400 Hz so they are
/// strongly coupled, optionally one well-separated fluorine.
pub fn random_system(rng: &mut ChaCha8Rng, n: usize, hetero: bool) -> SpinSystem {
    let mut spins = Vec::with_capacity(n);
    for k in 0..n {
        let fluorine = hetero && k == n - 1;
        spins.push(Spin {
            species: if fluorine { "F".into() } else { "H".into() },
            larmor_hz: if fluorine {
                rng.gen_range(6000.0..9000.0)
            } else {
                rng.gen_range(1000.0..1400.0)
            },
            gamma_rel: if fluorine { 0.94 } else { 1.0 },
        });
    }
    let mut couplings = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let c = if spins[i].species == spins[j].species {
                Coupling {
                    dipolar_hz: rng.gen_range(-150.0..150.0),
                    scalar_hz: rng.gen_range(-10.0..10.0),
                }
            } else {
                Coupling {
                    dipolar_hz: rng.gen_range(-100.0..100.0),
                    scalar_hz: rng.gen_range(-20.0..20.0),
                }
            };
            couplings.push((i, j, c));
        }
    }
    SpinSystem::new(spins, couplings).expect("generated system is valid")
}

/// Whether every transition links to every other through shared levels.
pub fn transitions_connected(model: &SpinModel) -> bool {
    let geo = ConnectivityMatrix::from_geometry(&model.transitions);
    let ids: Vec<usize> = model.transitions.iter().map(|t| t.id).collect();
    let Some(&start) = ids.first() else {
        return false;
    };
    let mut seen = std::collections::BTreeSet::from([start]);
    let mut stack = vec![start];
    while let Some(t) = stack.pop() {
        for (n, _) in geo.neighbors(t) {
            if seen.insert(n) {
                stack.push(n);
            }
        }
    }
    seen.len() == ids.len()
}

/// Draws random systems until `count` usable ones (consistent orientation,
/// connected transition graph) are collected. Sizes cycle through 2, 3, 4
/// and alternate homo- and heteronuclear.
pub fn random_models(seed: u64, count: usize) -> Vec<SpinModel> {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut k = 0usize;
    while out.len() < count {
        let n = 2 + k % 3;
        let hetero = (k / 3) % 2 == 1;
        k += 1;
        let sys = random_system(&mut rng, n, hetero);
        let Ok(model) = SpinModel::with_default_threshold(sys) else {
            continue;
        };
        if model.orientation_consistent() && transitions_connected(&model) {
            out.push(model);
        }
    }
    out
}
