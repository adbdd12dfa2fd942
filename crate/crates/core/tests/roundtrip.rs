mod common;

use std::f64::consts::PI;

use dipolar_qip::levels::{
    reconstruct_levels, verify_diagram, LevelDiagram, ObservedTransition, ReconstructOptions,
};
use dipolar_qip::zcosy::{
    extract_connectivity, merge_experiments, simulate_hetzcosy, symmetrize, ConnectivityMatrix,
};

fn connectivity_of(model: &dipolar_qip::spin::SpinModel) -> ConnectivityMatrix {
    let lists: Vec<_> = model
        .system
        .species()
        .iter()
        .map(|s| simulate_hetzcosy(model, s, PI / 2.0, PI / 20.0).unwrap())
        .collect();
    let merged = merge_experiments(&lists).unwrap();
    extract_connectivity(&symmetrize(&merged, 0.0)).unwrap()
}

#[test]
fn extracted_connectivity_equals_geometry() {
    for model in common::random_models(11, 24) {
        let conn = connectivity_of(&model);
        let geo = ConnectivityMatrix::from_geometry(&model.transitions);
        assert_eq!(
            conn.pairs().collect::<Vec<_>>(),
            geo.pairs().collect::<Vec<_>>()
        );
    }
}

#[test]
fn reconstruction_matches_eigenvalues() {
    for (k, model) in common::random_models(12, 30).into_iter().enumerate() {
        let conn = connectivity_of(&model);
        let lines = ObservedTransition::from_table(&model.transitions);
        let opts = ReconstructOptions {
            n_spins: Some(model.system.n_spins()),
            exhaustive: true,
            ..Default::default()
        };
        let r =
            reconstruct_levels(&lines, &conn, &opts).unwrap_or_else(|e| panic!("system {k}: {e}"));
        let truth = LevelDiagram::from_eigensystem(
            &model.transitions,
            &model.eigen,
            Some(model.system.n_spins()),
        );
        r.diagram
            .matches(&truth, 1e-6)
            .unwrap_or_else(|e| panic!("system {k}: {e}"));
        assert_eq!(
            r.solutions, 1,
            "system {k}: undetermined {:?}",
            r.undetermined
        );
        let report = verify_diagram(&r.diagram, &lines, 1e-6);
        assert!(report.flagged().next().is_none());
    }
}
