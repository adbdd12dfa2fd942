//! One line per acceptance criterion; exits nonzero if any fails.

mod common;

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use dipolar_qip::compiler::{
    compile_level_swap, compile_permutation, compose_sequence, CompileError,
};
use dipolar_qip::levels::{
    reconstruct_levels, LevelDiagram, ObservedTransition, ReconstructOptions,
};
use dipolar_qip::protocols::{
    apply_cnnot, apply_cswap, prepare_pops, run_entanglement_transfer, transition_between,
    EntanglementOptions, GateOptions,
};
use dipolar_qip::pulse::{selective_pulse, DensityState};
use dipolar_qip::spin::{CMatrix, Complex, Species, SpinModel, Transition, TransitionTable};
use dipolar_qip::zcosy::{
    extract_connectivity, merge_experiments, simulate_hetzcosy, symmetrize, Connection,
    ConnectivityMatrix, PeakList2D,
};

const BIN: &str = env!("CARGO_BIN_EXE_dipolar-qip");

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn hetzcosy_lists(model: &SpinModel) -> Vec<PeakList2D> {
    model
        .system
        .species()
        .iter()
        .map(|s| simulate_hetzcosy(model, s, FRAC_PI_2, PI / 20.0).unwrap())
        .collect()
}

/// Diagonal state with populations 1, 2, …, d.
fn ramp_state(model: &SpinModel) -> DensityState {
    let d = model.n_levels();
    let m = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        d,
        (0..d).map(|k| Complex::new((k + 1) as f64, 0.0)),
    ));
    DensityState::new(m, model.eigen.clone())
}

/// Explicit permutation matrix (row perm[i], column i) times `p`.
fn permute(perm: &[usize], p: &[f64]) -> Vec<f64> {
    let n = p.len();
    let mut m = vec![vec![0.0; n]; n];
    for (i, &j) in perm.iter().enumerate() {
        m[j][i] = 1.0;
    }
    m.iter()
        .map(|row| row.iter().zip(p).map(|(a, b)| a * b).sum())
        .collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn run_cli(args: &[&str]) -> std::process::Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn round_trip(models: &[SpinModel]) -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    for (k, model) in models.iter().enumerate() {
        let merged = merge_experiments(&hetzcosy_lists(model)).unwrap();
        let conn = match extract_connectivity(&symmetrize(&merged, 0.0)) {
            Ok(c) => c,
            Err(e) => {
                failures.push(format!("#{k}: {e}"));
                continue;
            }
        };
        let lines = ObservedTransition::from_table(&model.transitions);
        let opts = ReconstructOptions {
            n_spins: Some(model.system.n_spins()),
            ..Default::default()
        };
        let truth = LevelDiagram::from_eigensystem(
            &model.transitions,
            &model.eigen,
            Some(model.system.n_spins()),
        );
        match reconstruct_levels(&lines, &conn, &opts) {
            Ok(r) => {
                if let Err(e) = r.diagram.matches(&truth, 1e-6) {
                    failures.push(format!("#{k}: {e}"));
                }
            }
            Err(e) => failures.push(format!("#{k}: {e}")),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let sizes: BTreeMap<usize, usize> = models.iter().fold(BTreeMap::new(), |mut m, x| {
        *m.entry(x.system.n_spins()).or_default() += 1;
        m
    });
    let hetero = models
        .iter()
        .filter(|m| m.system.species().len() > 1)
        .count();
    outcome(
        failures.is_empty() && models.len() >= 50 && secs < 60.0,
        format!(
            "{} systems (by n: {sizes:?}, {hetero} heteronuclear), {} failures {:?}, {secs:.2} s",
            models.len(),
            failures.len(),
            failures.iter().take(3).collect::<Vec<_>>()
        ),
    )
}

fn five_spin_structure(dir: &Path) -> Outcome {
    let model = common::placeholder_model();
    let f = Species::new("F");
    let fi = model.system.species_index(&f).unwrap();
    let mut bad = 0;
    for t in model.transitions.iter() {
        let same =
            model.eigen.manifold(t.upper).twice_m(fi) == model.eigen.manifold(t.lower).twice_m(fi);
        if same != (t.species != f) {
            bad += 1;
        }
    }

    let config = common::placeholder_path();
    let config = config.to_str().unwrap();
    let z = dir.join("z");
    let m = dir.join("m");
    let zs = run_cli(&["zcosy", "--config", config, "-o", z.to_str().unwrap()]);
    let ms = run_cli(&[
        "mapdiagram",
        "--transitions",
        z.join("transitions.csv").to_str().unwrap(),
        "--peaks",
        z.join("peaks.csv").to_str().unwrap(),
        "--config",
        config,
        "-o",
        m.to_str().unwrap(),
    ]);
    if !zs.status.success() || !ms.status.success() {
        return outcome(
            false,
            format!("cli failed: {}", String::from_utf8_lossy(&ms.stderr)),
        );
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(m.join("diagram.json")).unwrap()).unwrap();
    let n_levels = report["diagram"]["levels"].as_array().unwrap().len();
    let names = &report["labels"];
    // fluorine is qubit 0: each proton domain must share that bit
    let domains = report["domains"]["H"].as_array().unwrap();
    let mut partition_ok = domains.len() == 2;
    let mut sizes = Vec::new();
    for group in domains {
        let ids = group.as_array().unwrap();
        sizes.push(ids.len());
        let bits: std::collections::BTreeSet<char> = ids
            .iter()
            .map(|id| {
                let label = names[id.as_u64().unwrap().to_string()].as_str().unwrap();
                label.chars().next().unwrap()
            })
            .collect();
        partition_ok &= bits.len() == 1 && ids.len() == 16;
    }
    outcome(
        n_levels == 32 && bad == 0 && partition_ok,
        format!(
            "{n_levels} levels, {} lines, {bad} lines violating the manifold rule, proton domains {sizes:?} split by the fluorine qubit: {partition_ok}",
            model.transitions.len()
        ),
    )
}

fn sign_law(models: &[SpinModel]) -> Outcome {
    let (mut checked, mut violations) = (0usize, 0usize);
    for model in models {
        let geo = ConnectivityMatrix::from_geometry(&model.transitions);
        let merged = merge_experiments(&hetzcosy_lists(model)).unwrap();
        for p in merged.iter().filter(|p| !p.is_diagonal()) {
            checked += 1;
            let diag = merged.diagonal(p.t1_id).map(|d| d.amplitude).unwrap_or(0.0);
            let ok = match geo.get(p.t1_id, p.t2_id) {
                Some(Connection::Progressive) => p.amplitude * diag < 0.0,
                Some(Connection::Regressive) => p.amplitude * diag > 0.0,
                None => false,
            };
            violations += usize::from(!ok);
        }
    }
    outcome(
        violations == 0 && checked > 0,
        format!("{checked} cross peaks, {violations} violations"),
    )
}

fn pops_contract(models: &[SpinModel]) -> Outcome {
    let (mut states, mut bad) = (0usize, 0usize);
    for model in models {
        for t in model.transitions.iter() {
            states += 1;
            let s = prepare_pops(model, t.id).unwrap();
            let p = s.populations();
            let nonzero: Vec<usize> = (0..p.len()).filter(|&l| p[l].abs() > 1e-12).collect();
            let ok = nonzero.len() == 2
                && nonzero.contains(&t.upper)
                && nonzero.contains(&t.lower)
                && (p[t.upper] + p[t.lower]).abs() <= 1e-12
                && s.max_coherence() <= 1e-12;
            bad += usize::from(!ok);
        }
    }
    outcome(
        bad == 0,
        format!("{states} POPS states, {bad} violations (tol 1e-12)"),
    )
}

fn gate_tables() -> Outcome {
    let model = common::placeholder_model();
    let labels = model.labels().unwrap();
    let d = model.n_levels();
    let opts = GateOptions::default();
    let start = ramp_state(&model);
    let p0 = start.populations();

    let (a, b) = (
        labels.level_of("11110").unwrap(),
        labels.level_of("11111").unwrap(),
    );
    let id = transition_between(&model.transitions, &labels, "11110", "11111").unwrap();
    let after = apply_cnnot(&model, &start, id, &labels, &opts).unwrap();
    let mut swap_ab: Vec<usize> = (0..d).collect();
    swap_ab.swap(a, b);
    let cnnot_err = max_diff(&after.populations(), &permute(&swap_ab, &p0));

    // first level pair at distance two gives a three-pulse palindrome
    let (x, y, seq) = (0..d)
        .flat_map(|x| (x + 1..d).map(move |y| (x, y)))
        .find_map(|(x, y)| {
            let s = compile_level_swap(&model.transitions, x, y).ok()?;
            (s.len() == 3).then_some((x, y, s))
        })
        .unwrap();
    let mut swap_xy: Vec<usize> = (0..d).collect();
    swap_xy.swap(x, y);
    let three: [usize; 3] = seq.transitions.clone().try_into().unwrap();
    let swapped = apply_cswap(&model, &start, three, &opts).unwrap();
    let cswap_err = max_diff(&swapped.populations(), &permute(&swap_xy, &p0));
    let composed = compose_sequence(&model.transitions, &seq.transitions).unwrap();

    let pass = cnnot_err <= 1e-12
        && cswap_err <= 1e-12
        && composed == swap_xy
        && seq.net_permutation == swap_xy;
    outcome(
        pass,
        format!(
            "cnnot t{id} swaps |11110>,|11111> (max deviation {cnnot_err:.1e}); cswap {:?} on |{}>,|{}> matches the transposition matrix (max deviation {cswap_err:.1e}) and the composed permutation",
            seq.transitions,
            labels.label(x),
            labels.label(y)
        ),
    )
}

fn ideal_transfer() -> Outcome {
    let model = common::placeholder_model();
    let run = run_entanglement_transfer(&model, &EntanglementOptions::default()).unwrap();
    let expect = [("entangle", "10110"), ("transfer", "11001")];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, partner) in expect {
        let s = run.stages.iter().find(|s| s.name == name).unwrap();
        let dom = &s.coherences.entries;
        let single = dom.len() == 1
            && dom[0].labels == ("10000".to_string(), partner.to_string())
            && dom[0].order.iter().any(|(sp, o)| sp == "H" && *o == 2);
        pass &= (s.fidelity - 1.0).abs() <= 1e-9 && single;
        parts.push(format!(
            "{name}: F = {:.12}, {} coherence(s) {:?}",
            s.fidelity,
            dom.len(),
            dom.iter()
                .map(|e| format!("{}-{}", e.labels.0, e.labels.1))
                .collect::<Vec<_>>()
        ));
    }
    outcome(pass, parts.join("; "))
}

fn perturbed_transfer() -> Outcome {
    let model = common::placeholder_model();
    let eps = [0.0, 0.02, 0.05, 0.10];
    let fid: Vec<f64> = eps
        .iter()
        .map(|&e| {
            let opts = EntanglementOptions {
                flip_error: e,
                ..Default::default()
            };
            run_entanglement_transfer(&model, &opts)
                .unwrap()
                .stages
                .last()
                .unwrap()
                .fidelity
        })
        .collect();
    let pass = fid.windows(2).all(|w| w[1] < w[0]);
    outcome(
        pass,
        format!(
            "final-stage fidelity {}",
            eps.iter()
                .zip(&fid)
                .map(|(e, f)| format!("eps={e}: {f:.6}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

fn compiler_trials() -> Outcome {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
    let models = common::random_models(22, 24);
    let mut failures = 0;
    let trials = 200;
    for k in 0..trials {
        let model = &models[k % models.len()];
        let d = model.n_levels();
        let a = rng.gen_range(0..d);
        let b = (a + rng.gen_range(1..d)) % d;
        let start = ramp_state(model);
        let ok = match compile_level_swap(&model.transitions, a, b) {
            Ok(seq) => {
                let mut s = start.clone();
                for &id in &seq.transitions {
                    s = selective_pulse(&s, &model.transitions, id, PI, 0.0, 0.0).unwrap();
                }
                let mut perm: Vec<usize> = (0..d).collect();
                perm.swap(a, b);
                max_diff(&s.populations(), &permute(&perm, &start.populations())) <= 1e-12
            }
            // only a level on no transition at all may lack a path
            Err(CompileError::NoPath(..)) => [a, b]
                .iter()
                .any(|&l| model.transitions.iter().all(|t| !t.touches(l))),
            Err(_) => false,
        };
        failures += usize::from(!ok);
    }

    // two disjoint edges: 0-1 and 2-3
    let h = Species::new("H");
    let table = TransitionTable::from_transitions(
        vec![
            Transition {
                id: 1,
                upper: 0,
                lower: 1,
                freq_hz: 10.0,
                intensity: 1.0,
                species: h.clone(),
            },
            Transition {
                id: 2,
                upper: 2,
                lower: 3,
                freq_hz: 12.0,
                intensity: 1.0,
                species: h,
            },
        ],
        4,
    );
    let swap_err = compile_level_swap(&table, 0, 2);
    let cycle_err = compile_permutation(&table, &[2, 1, 0, 3]);
    let structured = swap_err == Err(CompileError::NoPath(0, 2))
        && cycle_err == Err(CompileError::DisconnectedCycle(vec![0, 2]));
    outcome(
        failures == 0 && structured,
        format!("{trials} transposition trials, {failures} failures; disconnected pair reports {swap_err:?}, {cycle_err:?}"),
    )
}

fn full_suite(dir: &Path) -> Result<(), String> {
    let config = common::placeholder_path();
    let config = config.to_str().unwrap();
    let script = dir.join("ppt.txt");
    std::fs::write(
        &script,
        "pulse hard H pi/2 0\ncrush all\npulse selective 00000:10000 pi 0\nsnapshot sallt\n",
    )
    .map_err(|e| e.to_string())?;
    let o = |name: &str| dir.join(name).to_str().unwrap().to_string();
    let z = o("zcosy");
    let runs: Vec<Vec<String>> = vec![
        vec![
            "spectrum".into(),
            "--config".into(),
            config.into(),
            "-o".into(),
            o("spectrum"),
        ],
        vec![
            "zcosy".into(),
            "--config".into(),
            config.into(),
            "-o".into(),
            z.clone(),
        ],
        vec![
            "mapdiagram".into(),
            "--transitions".into(),
            format!("{z}/transitions.csv"),
            "--connectivity".into(),
            format!("{z}/connectivity.csv"),
            "--config".into(),
            config.into(),
            "-o".into(),
            o("diagram"),
        ],
        vec![
            "pops".into(),
            "--config".into(),
            config.into(),
            "--transition".into(),
            "61".into(),
            "-o".into(),
            o("pops"),
        ],
        vec![
            "sallt".into(),
            "--config".into(),
            config.into(),
            "-o".into(),
            o("sallt"),
        ],
        vec![
            "gate".into(),
            "cnnot".into(),
            "--config".into(),
            config.into(),
            "--transition".into(),
            "11110:11111".into(),
            "-o".into(),
            o("cnnot"),
        ],
        vec![
            "entangle".into(),
            "--config".into(),
            config.into(),
            "--flip-error".into(),
            "0.05".into(),
            "-o".into(),
            o("entangle"),
        ],
        vec![
            "compile".into(),
            "--config".into(),
            config.into(),
            "--random".into(),
            "--seed".into(),
            "3".into(),
            "-o".into(),
            o("compile"),
        ],
        vec![
            "protocol".into(),
            "--config".into(),
            config.into(),
            "--script".into(),
            script.to_str().unwrap().into(),
            "-o".into(),
            o("protocol"),
        ],
    ];
    for args in runs {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let out = run_cli(&args);
        if !out.status.success() {
            return Err(format!(
                "{}: {}",
                args[0],
                String::from_utf8_lossy(&out.stderr)
            ));
        }
    }
    Ok(())
}

fn collect_files(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            collect_files(root, &path, out);
        } else {
            let rel = path
                .strip_prefix(root)
                .unwrap()
                .to_string_lossy()
                .into_owned();
            out.insert(rel, std::fs::read(&path).unwrap());
        }
    }
}

fn determinism(dir: &Path) -> Outcome {
    let mut snapshots = Vec::new();
    for run in ["a", "b"] {
        let d = dir.join(run);
        std::fs::create_dir_all(&d).unwrap();
        if let Err(e) = full_suite(&d) {
            return outcome(false, e);
        }
        let mut files = BTreeMap::new();
        collect_files(&d, &d, &mut files);
        files.remove("ppt.txt");
        snapshots.push(files);
    }
    let (a, b) = (&snapshots[0], &snapshots[1]);
    let differing: Vec<&String> = a.keys().filter(|k| a.get(*k) != b.get(*k)).collect();
    let bytes: usize = a.values().map(Vec::len).sum();
    outcome(
        a.len() == b.len() && differing.is_empty() && !a.is_empty(),
        format!(
            "{} artifacts ({bytes} bytes) from 9 subcommands, {} differ",
            a.len(),
            differing.len()
        ),
    )
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let models = common::random_models(2024, 54);
    let mut pops_models = models.clone();
    pops_models.push(common::placeholder_model());

    let results = [
        round_trip(&models),
        five_spin_structure(tmp.path()),
        sign_law(&models),
        pops_contract(&pops_models),
        gate_tables(),
        ideal_transfer(),
        perturbed_transfer(),
        compiler_trials(),
        determinism(&tmp.path().join("det")),
    ];
    let mut failed = 0;
    for (k, r) in results.iter().enumerate() {
        println!(
            "criterion {}: {} {}",
            k + 1,
            if r.pass { "PASS" } else { "FAIL" },
            r.detail
        );
        failed += usize::from(!r.pass);
    }
    println!(
        "acceptance: {}/{} criteria pass",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
