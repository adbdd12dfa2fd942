mod common;

use std::f64::consts::{FRAC_PI_2, PI};

use dipolar_qip::protocols::*;
use dipolar_qip::pulse::{crush, selective_pulse, CrushMode};
use dipolar_qip::spin::{Coupling, Spin, SpinModel, SpinSystem, Transition, TransitionTable};

fn ab_pair() -> SpinModel {
    let spins = vec![
        Spin {
            species: "H".into(),
            larmor_hz: 1000.0,
            gamma_rel: 1.0,
        },
        Spin {
            species: "H".into(),
            larmor_hz: 1080.0,
            gamma_rel: 1.0,
        },
    ];
    let c = Coupling {
        dipolar_hz: 120.0,
        scalar_hz: 7.0,
    };
    SpinModel::with_default_threshold(SpinSystem::new(spins, [(0, 1, c)]).unwrap()).unwrap()
}

#[test]
fn pops_on_strongly_coupled_pair() {
    let model = ab_pair();
    for t in model.transitions.iter() {
        let eq = model.equilibrium();
        let pops = prepare_pops(&model, t.id).unwrap();
        let (pu, pl) = (eq.population(t.upper), eq.population(t.lower));
        for level in 0..4 {
            let want = if level == t.upper {
                pl - pu
            } else if level == t.lower {
                pu - pl
            } else {
                0.0
            };
            assert!(
                (pops.population(level) - want).abs() < 1e-12,
                "t{} level {level}",
                t.id
            );
        }
        assert!(pops.max_coherence() < 1e-12);
        // every line of an AB pair joins M = ±1 to M = 0
        assert!(((pu - pl).abs() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn sallt_leaves_single_level_in_subsystem() {
    let model = common::placeholder_model();
    let labels = model.labels().unwrap();
    let id = transition_between(&model.transitions, &labels, "00000", "10000").unwrap();
    let state = prepare_sallt(&model, id, 0.0).unwrap();
    for level in 0..32 {
        let l = labels.label(level).to_string();
        let mut want = if l.starts_with('0') { 0.47 } else { -0.47 };
        if l == "00000" || l == "10000" {
            want = -want;
        }
        assert!((state.population(level) - want).abs() < 1e-12, "{l}");
    }
    assert!(state.max_coherence() < 1e-12);

    let proton = model
        .transitions
        .iter()
        .find(|t| t.species.as_str() == "H")
        .unwrap();
    assert_eq!(
        prepare_sallt(&model, proton.id, 0.0).unwrap_err(),
        ProtocolError::NotHeteronuclear(proton.id)
    );
}

#[test]
fn cnnot_is_involutive_and_checks_labels() {
    let model = common::placeholder_model();
    let labels = model.labels().unwrap();
    let eq = model.equilibrium();
    let opts = GateOptions::default();
    let id = transition_between(&model.transitions, &labels, "11110", "11111").unwrap();
    let once = apply_cnnot(&model, &eq, id, &labels, &opts).unwrap();
    let twice = apply_cnnot(&model, &once, id, &labels, &opts).unwrap();
    for level in 0..32 {
        assert!((twice.population(level) - eq.population(level)).abs() < 1e-12);
    }
    if let Some(t) = model
        .transitions
        .iter()
        .find(|t| labels.label(t.upper).hamming(&labels.label(t.lower)) != 1)
    {
        assert!(matches!(
            apply_cnnot(&model, &eq, t.id, &labels, &opts),
            Err(ProtocolError::NotControlledNot { .. })
        ));
    }
}

#[test]
fn cswap_rejects_non_ladders() {
    let model = common::placeholder_model();
    let eq = model.equilibrium();
    let opts = GateOptions::default();
    let t = model.transitions.get(1).unwrap().clone();
    let single = apply_cswap(&model, &eq, [1, 1, 1], &opts).unwrap();
    let direct = crush(
        &selective_pulse(&eq, &model.transitions, 1, PI, 0.0, 0.0).unwrap(),
        CrushMode::All,
    );
    assert!((single.matrix() - direct.matrix()).norm() < 1e-12);
    let far = model
        .transitions
        .iter()
        .find(|u| u.shared_level(&t).is_none())
        .unwrap();
    assert_eq!(
        apply_cswap(&model, &eq, [1, far.id, 1], &opts).unwrap_err(),
        ProtocolError::InvalidLadder([1, far.id, 1])
    );
    assert!(apply_cswap(&model, &eq, [1, 2, 3], &opts).is_err());
}

#[test]
fn coherence_report_after_half_pulse() {
    let model = ab_pair();
    let labels = model.labels().unwrap();
    let eq = model.equilibrium();
    let empty = coherence_report(
        &eq,
        &model.system,
        &labels,
        &model.transitions,
        COHERENCE_FLOOR,
    );
    assert!(empty.is_empty());

    let t = model.transitions.get(2).unwrap();
    let st = selective_pulse(&eq, &model.transitions, t.id, FRAC_PI_2, 0.0, 0.0).unwrap();
    let rep = coherence_report(
        &st,
        &model.system,
        &labels,
        &model.transitions,
        COHERENCE_FLOOR,
    );
    assert_eq!(rep.entries.len(), 1);
    let e = &rep.entries[0];
    assert_eq!(e.levels, (t.upper, t.lower));
    assert_eq!(e.path, vec![t.id]);
    assert_eq!(e.order, vec![("H".to_string(), 1)]);
    assert!((e.omega1_hz.unwrap() - t.freq_hz).abs() < 1e-9);
    let half = (eq.population(t.upper) - eq.population(t.lower)).abs() / 2.0;
    assert!((e.magnitude - half).abs() < 1e-12);
}

#[test]
fn script_reproduces_pops() {
    let model = ab_pair();
    let labels = model.labels().unwrap();
    let script =
        ProtocolScript::parse("# pops\npulse selective 3 pi 0\ncrush all\nsubtract eq\n").unwrap();
    let run = script.execute(&model, &labels, 0.0).unwrap();
    let pops = prepare_pops(&model, 3).unwrap();
    assert!((run.state.matrix() - pops.matrix()).norm() < 1e-14);

    let bad = ProtocolScript::parse("subtract nothing\n").unwrap();
    assert!(matches!(
        bad.execute(&model, &labels, 0.0),
        Err(ProtocolError::Script { line: 1, .. })
    ));
}

#[test]
fn transfer_without_direct_line_uses_compiled_swap() {
    let mut model = common::placeholder_model();
    let labels = model.labels().unwrap();
    let drop = transition_between(&model.transitions, &labels, "10100", "11001").unwrap();
    let kept: Vec<Transition> = model
        .transitions
        .iter()
        .filter(|t| t.id != drop)
        .cloned()
        .enumerate()
        .map(|(k, mut t)| {
            t.id = k + 1;
            t
        })
        .collect();
    model.transitions = TransitionTable::from_transitions(kept, 32);
    let run = run_entanglement_transfer(&model, &EntanglementOptions::default()).unwrap();
    assert_eq!(run.swap_route.len(), 3);
    let last = run.stages.last().unwrap();
    assert!((last.fidelity - 1.0).abs() < 1e-9);
    assert_eq!(last.coherences.entries.len(), 1);
}

#[test]
fn transfer_needs_single_minority_spin() {
    assert_eq!(
        run_entanglement_transfer(&ab_pair(), &EntanglementOptions::default()).unwrap_err(),
        ProtocolError::UnsupportedSystem
    );
}
