use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use dipolar_qip::compiler::{compile_permutation, CompileError, PulseSequence};
use dipolar_qip::io::{
    connectivity_to_csv, parse_connectivity, parse_peaklist, parse_transitions, peaklist_to_csv,
    read_system, spectrum_to_csv, to_json, trace_to_csv, transitions_to_csv, IoError, OutputSet,
};
use dipolar_qip::levels::{
    domains, export_dot, reconstruct_levels, verify_diagram, LevelDiagram, LevelError, Orientation,
    ReconstructOptions,
};
use dipolar_qip::protocols::{
    apply_cnnot, apply_cswap, coherence_report, parse_angle, prepare_pops, prepare_sallt,
    run_entanglement_transfer, CoherenceReport, EntanglementOptions, GateOptions, ProtocolError,
    ProtocolScript, TransitionRef, COHERENCE_FLOOR,
};
use dipolar_qip::pulse::{readout_linear, readout_spectrum, DensityState, READOUT_WARN_ANGLE};
use dipolar_qip::spin::{LabelMap, QubitLabel, SpinModel, TransitionTable};
use dipolar_qip::zcosy::{extract_connectivity, merge_experiments, simulate_hetzcosy, symmetrize};

/// Exit 1: bad input. Exit 2: the computation itself failed.
enum Failure {
    Invalid(String),
    Failed(String),
}

fn invalid(e: impl Display) -> Failure {
    Failure::Invalid(e.to_string())
}

fn failed(e: impl Display) -> Failure {
    Failure::Failed(e.to_string())
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        invalid(e)
    }
}

impl From<ProtocolError> for Failure {
    fn from(e: ProtocolError) -> Self {
        match e {
            ProtocolError::UnknownTransition(_)
            | ProtocolError::UnknownLabel(_)
            | ProtocolError::Script { .. }
            | ProtocolError::TargetNotNormalized(_)
            | ProtocolError::Dimension(..) => invalid(e),
            _ => failed(e),
        }
    }
}

impl From<LevelError> for Failure {
    fn from(e: LevelError) -> Self {
        match e {
            LevelError::Inconsistent { .. } | LevelError::SearchLimit(_) => failed(e),
            _ => invalid(e),
        }
    }
}

impl From<CompileError> for Failure {
    fn from(e: CompileError) -> Self {
        match e {
            CompileError::LevelOutOfRange(..) | CompileError::NotAPermutation(_) => invalid(e),
            _ => failed(e),
        }
    }
}

type Run = Result<OutputSet, Failure>;

fn angle_arg(s: &str) -> Result<f64, String> {
    parse_angle(s).ok_or_else(|| format!("cannot read `{s}` as an angle (try pi/20, 9deg, 0.157)"))
}

fn readout_arg(s: &str) -> Result<f64, String> {
    let a = angle_arg(s)?;
    if a <= 0.0 || a >= std::f64::consts::FRAC_PI_2 {
        return Err(format!("readout angle {a} must lie in (0, pi/2)"));
    }
    Ok(a)
}

fn finite_arg(s: &str) -> Result<f64, String> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("`{s}` is not a finite number"))
}

#[derive(Parser)]
#[command(
    name = "dipolar-qip",
    version,
    about = "Dipolar-coupled spin systems as NMR qubit registers"
)]
struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    /// Errors only.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SystemArgs {
    /// Spin-system TOML.
    #[arg(long)]
    config: PathBuf,
    /// Relative intensity below which lines are dropped.
    #[arg(long, default_value = "1e-3", value_parser = finite_arg)]
    threshold: f64,
}

impl SystemArgs {
    fn model(&self) -> Result<SpinModel, Failure> {
        let sys = read_system(&self.config)?;
        SpinModel::new(sys, self.threshold).map_err(failed)
    }
}

#[derive(Args)]
struct OutArgs {
    /// Output directory, created if missing.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Equilibrium spectrum of each species after a small hard pulse.
    Spectrum {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        out: OutArgs,
        #[arg(long, default_value = "pi/20", value_parser = readout_arg)]
        readout_angle: f64,
        /// Lorentzian FWHM of the rendered trace, Hz.
        #[arg(long, default_value = "2", value_parser = finite_arg)]
        linewidth: f64,
        #[arg(long, default_value_t = 4096)]
        points: usize,
        /// Evolve the readout pulse exactly instead of the linear model.
        #[arg(long)]
        exact: bool,
    },
    /// Simulated heteronuclear Z-COSY peak lists and the connectivity they imply.
    Zcosy {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        out: OutArgs,
        #[arg(long, default_value = "pi/2", value_parser = angle_arg)]
        alpha: f64,
        #[arg(long, default_value = "pi/20", value_parser = readout_arg)]
        readout_angle: f64,
        /// Cross peaks at or below this magnitude are dropped.
        #[arg(long, default_value = "0", value_parser = finite_arg)]
        peak_tol: f64,
    },
    /// Energy-level diagram from a transition table and connectivity.
    Mapdiagram {
        /// Transition table CSV (id,freq_hz,species).
        #[arg(long)]
        transitions: PathBuf,
        /// Connectivity CSV (i,j,type).
        #[arg(long, conflicts_with = "peaks", required_unless_present = "peaks")]
        connectivity: Option<PathBuf>,
        /// Peak list CSV; connectivity is extracted after symmetrization.
        #[arg(long)]
        peaks: Option<PathBuf>,
        #[arg(long, default_value = "0", value_parser = finite_arg)]
        peak_tol: f64,
        /// Energy closure tolerance, Hz.
        #[arg(long, default_value = "0.5", value_parser = finite_arg)]
        tol: f64,
        #[arg(long)]
        n_spins: Option<usize>,
        /// Count all solutions to prove uniqueness.
        #[arg(long)]
        exhaustive: bool,
        /// Spin-system TOML used to orient the diagram and label levels.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Pair of pseudopure states on one transition.
    Pops {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Transition id, or two labels as `a:b`.
        #[arg(long)]
        transition: String,
        #[arg(long, default_value = "pi/20", value_parser = readout_arg)]
        readout_angle: f64,
    },
    /// Subsystem pseudopure state by saturation of the majority species.
    Sallt {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Minority-species transition (id or `a:b`); defaults to the line
        /// from the all-zero level that flips only the minority qubit.
        #[arg(long)]
        transition: Option<String>,
        #[arg(long, default_value = "0", value_parser = finite_arg)]
        flip_error: f64,
    },
    /// Controlled gates by transition-selective π pulses.
    Gate {
        #[command(subcommand)]
        gate: GateCommand,
    },
    /// Pseudopure state, superposition, entanglement and transfer in the
    /// minority-spin subsystem of a five-spin register.
    Entangle {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        out: OutArgs,
        #[arg(long, default_value = "0", value_parser = finite_arg)]
        flip_error: f64,
        /// Stages below this fidelity are flagged.
        #[arg(long, default_value = "0", value_parser = finite_arg)]
        fidelity_floor: f64,
    },
    /// Compile a level permutation into selective π pulses.
    Compile {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Exchange two levels, given as labels `a,b`.
        #[arg(long, group = "target")]
        swap: Option<String>,
        /// Cyclic shift a → b → … → a of labelled levels.
        #[arg(long, group = "target")]
        cycle: Option<String>,
        /// Random permutation of all levels drawn from --seed.
        #[arg(long, group = "target")]
        random: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Omit the crush after each pulse in the emitted script.
        #[arg(long)]
        no_crush: bool,
    },
    /// Run a pulse script from equilibrium.
    Protocol {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        out: OutArgs,
        #[arg(long)]
        script: PathBuf,
        #[arg(long, default_value = "0", value_parser = finite_arg)]
        flip_error: f64,
    },
}

#[derive(Args)]
struct GateArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    out: OutArgs,
    #[arg(long, default_value = "0", value_parser = finite_arg)]
    flip_error: f64,
    /// Keep coherences between pulses.
    #[arg(long)]
    no_crush: bool,
    /// Start from `equilibrium` or `pops:<transition>`.
    #[arg(long, default_value = "equilibrium")]
    initial: String,
}

#[derive(Subcommand)]
enum GateCommand {
    /// Selective π on a transition whose labels differ in one qubit.
    Cnnot {
        #[command(flatten)]
        args: GateArgs,
        #[arg(long)]
        transition: String,
    },
    /// Three-pulse ladder a,b,a exchanging the outer levels.
    Cswap {
        #[command(flatten)]
        args: GateArgs,
        /// Three transitions, each an id or `a:b`, comma separated.
        #[arg(long)]
        sequence: String,
    },
}

#[derive(Serialize)]
struct LevelPopulation {
    level: usize,
    label: String,
    energy_hz: f64,
    population: f64,
}

fn labels_of(model: &SpinModel) -> Option<LabelMap> {
    match model.labels() {
        Ok(l) => Some(l),
        Err(e) => {
            log::warn!("levels left unlabelled: {e}");
            None
        }
    }
}

fn need_labels(model: &SpinModel) -> Result<LabelMap, Failure> {
    model.labels().map_err(failed)
}

fn populations(
    model: &SpinModel,
    labels: Option<&LabelMap>,
    state: &DensityState,
) -> Vec<LevelPopulation> {
    (0..state.dim())
        .map(|l| LevelPopulation {
            level: l,
            label: labels.map_or_else(|| l.to_string(), |m| m.label(l).to_string()),
            energy_hz: model.eigen.energy(l),
            population: state.population(l),
        })
        .collect()
}

fn coherences(model: &SpinModel, labels: &LabelMap, state: &DensityState) -> CoherenceReport {
    coherence_report(
        state,
        &model.system,
        labels,
        &model.transitions,
        COHERENCE_FLOOR,
    )
}

fn transition_ref(text: &str) -> Result<TransitionRef, Failure> {
    let text = text.trim();
    if let Some((a, b)) = text.split_once(':') {
        return Ok(TransitionRef::Labels(
            a.trim().to_string(),
            b.trim().to_string(),
        ));
    }
    text.parse().map(TransitionRef::Id).map_err(|_| {
        invalid(format!(
            "`{text}` is neither a transition id nor `label:label`"
        ))
    })
}

/// Resolves a transition; ids work without labels, label pairs need them.
fn resolve(model: &SpinModel, text: &str) -> Result<usize, Failure> {
    match transition_ref(text)? {
        TransitionRef::Id(id) => model
            .transitions
            .get(id)
            .map(|t| t.id)
            .ok_or_else(|| invalid(ProtocolError::UnknownTransition(id))),
        r => Ok(r.resolve(model, &need_labels(model)?)?),
    }
}

fn level_of(labels: &LabelMap, text: &str) -> Result<usize, Failure> {
    labels
        .level_of(text.trim())
        .ok_or_else(|| invalid(ProtocolError::UnknownLabel(text.trim().to_string())))
}

fn spectrum(
    system: &SystemArgs,
    readout_angle: f64,
    linewidth: f64,
    points: usize,
    exact: bool,
) -> Run {
    if linewidth <= 0.0 || points < 2 {
        return Err(invalid("linewidth must be positive and points at least 2"));
    }
    if readout_angle > READOUT_WARN_ANGLE && !exact {
        log::warn!("readout angle {readout_angle:.4} rad is large for the linear model");
    }
    let model = system.model()?;
    let eq = model.equilibrium();
    let mut out = OutputSet::new();
    out.add("transitions.csv", transitions_to_csv(&model.transitions));
    for sp in model.system.species() {
        let spec = if exact {
            readout_spectrum(&model, &eq, sp, readout_angle, linewidth)
        } else {
            readout_linear(&model, &eq, sp, readout_angle, linewidth)
        }
        .map_err(failed)?;
        let (lo, hi) = spec.default_window();
        out.add(format!("spectrum_{sp}.csv"), spectrum_to_csv(&spec));
        out.add(
            format!("trace_{sp}.csv"),
            trace_to_csv(&spec.render(lo, hi, points)),
        );
    }
    Ok(out)
}

fn zcosy(system: &SystemArgs, alpha: f64, readout_angle: f64, peak_tol: f64) -> Run {
    let model = system.model()?;
    let mut out = OutputSet::new();
    out.add("transitions.csv", transitions_to_csv(&model.transitions));
    let mut lists = Vec::new();
    for sp in model.system.species() {
        let peaks = simulate_hetzcosy(&model, sp, alpha, readout_angle).map_err(failed)?;
        out.add(format!("peaks_{sp}.csv"), peaklist_to_csv(&peaks));
        lists.push(peaks);
    }
    let merged = symmetrize(&merge_experiments(&lists).map_err(failed)?, peak_tol);
    let conn = extract_connectivity(&merged).map_err(failed)?;
    out.add("peaks.csv", peaklist_to_csv(&merged));
    out.add("connectivity.csv", connectivity_to_csv(&conn));
    Ok(out)
}

/// Reconstructed level → eigen-level, read through shared transition ids.
fn eigen_levels(diagram: &LevelDiagram, table: &TransitionTable) -> Option<BTreeMap<usize, usize>> {
    let mut map = BTreeMap::new();
    for e in &diagram.edges {
        let t = table.get(e.transition_id)?;
        for (mine, theirs) in [(e.upper, t.upper), (e.lower, t.lower)] {
            if *map.entry(mine).or_insert(theirs) != theirs {
                return None;
            }
        }
    }
    Some(map)
}

#[derive(Serialize)]
struct DiagramReport<'a> {
    diagram: &'a LevelDiagram,
    solutions: usize,
    undetermined: &'a [(usize, usize)],
    orientation: Option<Orientation>,
    domains: BTreeMap<String, Vec<Vec<usize>>>,
    labels: Option<&'a BTreeMap<usize, String>>,
}

#[allow(clippy::too_many_arguments)]
fn mapdiagram(
    transitions: &Path,
    connectivity: Option<&Path>,
    peaks: Option<&Path>,
    peak_tol: f64,
    tol: f64,
    n_spins: Option<usize>,
    exhaustive: bool,
    config: Option<&Path>,
) -> Result<(OutputSet, bool), Failure> {
    if tol <= 0.0 {
        return Err(invalid("tolerance must be positive"));
    }
    let lines = parse_transitions(transitions)?;
    let conn = match (connectivity, peaks) {
        (Some(c), _) => parse_connectivity(c)?,
        (None, Some(p)) => {
            extract_connectivity(&symmetrize(&parse_peaklist(p)?, peak_tol)).map_err(invalid)?
        }
        (None, None) => return Err(invalid("need --connectivity or --peaks")),
    };
    let model = config
        .map(|c| -> Result<SpinModel, Failure> {
            let sys = read_system(c)?;
            SpinModel::with_default_threshold(sys).map_err(failed)
        })
        .transpose()?;
    let opts = ReconstructOptions {
        tol,
        n_spins: n_spins.or(model.as_ref().map(|m| m.system.n_spins())),
        exhaustive,
        ..Default::default()
    };
    let rec = reconstruct_levels(&lines, &conn, &opts)?;
    let mut diagram = rec.diagram.clone();
    let mut orientation = None;
    let mut names = None;
    if let Some(model) = &model {
        let truth = LevelDiagram::from_eigensystem(
            &model.transitions,
            &model.eigen,
            Some(model.system.n_spins()),
        );
        match diagram.matches(&truth, tol) {
            Ok(o) => {
                if o == Orientation::Reflected {
                    diagram = diagram.reflected();
                }
                orientation = Some(o);
            }
            Err(e) => log::warn!("diagram does not match the configured system: {e}"),
        }
        if let (Some(labels), Some(map)) =
            (labels_of(model), eigen_levels(&diagram, &model.transitions))
        {
            names = Some(
                map.into_iter()
                    .map(|(mine, eig)| (mine, labels.label(eig).to_string()))
                    .collect::<BTreeMap<_, _>>(),
            );
        }
    }
    let verify = verify_diagram(&diagram, &lines, tol);
    let species: std::collections::BTreeSet<_> =
        diagram.edges.iter().map(|e| e.species.clone()).collect();
    let report = DiagramReport {
        diagram: &diagram,
        solutions: rec.solutions,
        undetermined: &rec.undetermined,
        orientation,
        domains: species
            .iter()
            .map(|sp| (sp.to_string(), domains(&diagram, sp)))
            .collect(),
        labels: names.as_ref(),
    };
    let mut out = OutputSet::new();
    out.add("diagram.json", to_json(&report));
    out.add("diagram.dot", export_dot(&diagram, names.as_ref()));
    out.add("verify.json", to_json(&verify));
    for r in verify.flagged() {
        log::warn!(
            "transition {} residual {:.3e} Hz",
            r.transition_id,
            r.residual_hz
        );
    }
    Ok((out, verify.all_pass()))
}

#[derive(Serialize)]
struct StateReport {
    transition: Option<usize>,
    populations: Vec<LevelPopulation>,
    max_coherence: f64,
    coherences: Option<CoherenceReport>,
}

fn pops(system: &SystemArgs, transition: &str, readout_angle: f64) -> Run {
    let model = system.model()?;
    let id = resolve(&model, transition)?;
    let state = prepare_pops(&model, id)?;
    let labels = labels_of(&model);
    let mut out = OutputSet::new();
    out.add(
        "pops.json",
        to_json(&StateReport {
            transition: Some(id),
            populations: populations(&model, labels.as_ref(), &state),
            max_coherence: state.max_coherence(),
            coherences: None,
        }),
    );
    for sp in model.system.species() {
        let spec = readout_linear(&model, &state, sp, readout_angle, 1.0).map_err(failed)?;
        out.add(format!("spectrum_{sp}.csv"), spectrum_to_csv(&spec));
    }
    Ok(out)
}

fn sallt(system: &SystemArgs, transition: Option<&str>, flip_error: f64) -> Run {
    let model = system.model()?;
    let id = match transition {
        Some(t) => resolve(&model, t)?,
        None => {
            let labels = need_labels(&model)?;
            let majority = model.system.majority_species();
            let minority = (0..model.system.n_spins())
                .find(|&k| &model.system.spins()[k].species != majority)
                .ok_or_else(|| invalid("system has a single species"))?;
            let width = labels.width();
            let zero = labels
                .level(QubitLabel::new(0, width))
                .expect("full label set");
            let flipped = labels
                .level(QubitLabel::new(1 << (width - 1 - minority), width))
                .expect("full label set");
            model
                .transitions
                .between(zero, flipped)
                .map(|t| t.id)
                .ok_or_else(|| failed("no minority line from the all-zero level"))?
        }
    };
    let state = prepare_sallt(&model, id, flip_error)?;
    let labels = labels_of(&model);
    let mut out = OutputSet::new();
    out.add(
        "sallt.json",
        to_json(&StateReport {
            transition: Some(id),
            populations: populations(&model, labels.as_ref(), &state),
            max_coherence: state.max_coherence(),
            coherences: labels.as_ref().map(|l| coherences(&model, l, &state)),
        }),
    );
    Ok(out)
}

#[derive(Serialize)]
struct GateReport {
    gate: &'static str,
    transitions: Vec<usize>,
    before: Vec<LevelPopulation>,
    after: Vec<LevelPopulation>,
    /// Levels whose population changed.
    changed: Vec<String>,
}

fn gate(cmd: &GateCommand) -> Run {
    let (args, name) = match cmd {
        GateCommand::Cnnot { args, .. } => (args, "cnnot"),
        GateCommand::Cswap { args, .. } => (args, "cswap"),
    };
    let model = args.system.model()?;
    let labels = need_labels(&model)?;
    let initial = match args.initial.trim() {
        "equilibrium" => model.equilibrium(),
        s => match s.strip_prefix("pops:") {
            Some(t) => prepare_pops(&model, resolve(&model, t)?)?,
            None => return Err(invalid(format!("unknown initial state `{s}`"))),
        },
    };
    let opts = GateOptions {
        crush_after_pi: !args.no_crush,
        flip_error: args.flip_error,
    };
    let (ids, state) = match cmd {
        GateCommand::Cnnot { transition, .. } => {
            let id = resolve(&model, transition)?;
            (vec![id], apply_cnnot(&model, &initial, id, &labels, &opts)?)
        }
        GateCommand::Cswap { sequence, .. } => {
            let ids = sequence
                .split(',')
                .map(|t| resolve(&model, t))
                .collect::<Result<Vec<_>, _>>()?;
            let seq: [usize; 3] = ids
                .clone()
                .try_into()
                .map_err(|_| invalid("--sequence needs exactly three transitions"))?;
            (ids, apply_cswap(&model, &initial, seq, &opts)?)
        }
    };
    let changed = (0..state.dim())
        .filter(|&l| (state.population(l) - initial.population(l)).abs() > 1e-12)
        .map(|l| labels.label(l).to_string())
        .collect();
    let mut out = OutputSet::new();
    out.add(
        "gate.json",
        to_json(&GateReport {
            gate: name,
            transitions: ids,
            before: populations(&model, Some(&labels), &initial),
            after: populations(&model, Some(&labels), &state),
            changed,
        }),
    );
    Ok(out)
}

#[derive(Serialize)]
struct EntangleReport<'a> {
    flip_error: f64,
    fidelity_floor: f64,
    swap_route: &'a [usize],
    stages: &'a [dipolar_qip::protocols::StageReport],
}

fn entangle(system: &SystemArgs, flip_error: f64, fidelity_floor: f64) -> Run {
    let model = system.model()?;
    let opts = EntanglementOptions {
        flip_error,
        fidelity_floor,
        ..Default::default()
    };
    let run = run_entanglement_transfer(&model, &opts)?;
    for s in &run.stages {
        if s.flagged {
            log::warn!(
                "stage {} fidelity {:.4} below floor {fidelity_floor}",
                s.name,
                s.fidelity
            );
        }
        log::info!("stage {}: fidelity {:.9}", s.name, s.fidelity);
    }
    let mut out = OutputSet::new();
    out.add(
        "entangle.json",
        to_json(&EntangleReport {
            flip_error,
            fidelity_floor,
            swap_route: &run.swap_route,
            stages: &run.stages,
        }),
    );
    Ok(out)
}

#[derive(Serialize)]
struct CompileReport<'a> {
    /// Label moved into each position: `target[i]` is where level i goes.
    target: BTreeMap<String, String>,
    sequence: &'a PulseSequence,
}

fn compile(
    system: &SystemArgs,
    swap: Option<&str>,
    cycle: Option<&str>,
    random: bool,
    seed: u64,
    crush: bool,
) -> Run {
    let model = system.model()?;
    let labels = need_labels(&model)?;
    let n = model.n_levels();
    let mut perm: Vec<usize> = (0..n).collect();
    let listed = swap.or(cycle);
    if let Some(text) = listed {
        let levels = text
            .split(',')
            .map(|s| level_of(&labels, s))
            .collect::<Result<Vec<_>, _>>()?;
        let distinct: std::collections::BTreeSet<_> = levels.iter().collect();
        if levels.len() < 2
            || distinct.len() != levels.len()
            || (swap.is_some() && levels.len() != 2)
        {
            return Err(invalid(
                "need two distinct labels for --swap, or at least two for --cycle",
            ));
        }
        for (k, &l) in levels.iter().enumerate() {
            perm[l] = levels[(k + 1) % levels.len()];
        }
    } else if random {
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    } else {
        return Err(invalid("give one of --swap, --cycle or --random"));
    }
    let seq = compile_permutation(&model.transitions, &perm)?;
    let target = (0..n)
        .filter(|&i| perm[i] != i)
        .map(|i| {
            (
                labels.label(i).to_string(),
                labels.label(perm[i]).to_string(),
            )
        })
        .collect();
    let mut out = OutputSet::new();
    out.add(
        "sequence.json",
        to_json(&CompileReport {
            target,
            sequence: &seq,
        }),
    );
    out.add("sequence.txt", seq.to_script(crush));
    Ok(out)
}

#[derive(Serialize)]
struct ProtocolReport {
    populations: Vec<LevelPopulation>,
    coherences: CoherenceReport,
    snapshots: BTreeMap<String, Vec<LevelPopulation>>,
}

fn protocol(system: &SystemArgs, script: &Path, flip_error: f64) -> Run {
    let model = system.model()?;
    let labels = need_labels(&model)?;
    let text = std::fs::read_to_string(script)
        .map_err(|e| invalid(format!("{}: {e}", script.display())))?;
    let run = ProtocolScript::parse(&text)?.execute(&model, &labels, flip_error)?;
    let mut out = OutputSet::new();
    out.add(
        "protocol.json",
        to_json(&ProtocolReport {
            populations: populations(&model, Some(&labels), &run.state),
            coherences: coherences(&model, &labels, &run.state),
            snapshots: run
                .snapshots
                .iter()
                .map(|(k, s)| (k.clone(), populations(&model, Some(&labels), s)))
                .collect(),
        }),
    );
    Ok(out)
}

fn write(out: &OutputSet, dir: &Path) -> Result<(), Failure> {
    for p in out.write_all(dir)? {
        println!("{}", p.display());
    }
    Ok(())
}

fn dispatch(cmd: &Command) -> Result<(), Failure> {
    let (set, dir) = match cmd {
        Command::Spectrum {
            system,
            out,
            readout_angle,
            linewidth,
            points,
            exact,
        } => (
            spectrum(system, *readout_angle, *linewidth, *points, *exact)?,
            &out.out,
        ),
        Command::Zcosy {
            system,
            out,
            alpha,
            readout_angle,
            peak_tol,
        } => (zcosy(system, *alpha, *readout_angle, *peak_tol)?, &out.out),
        Command::Mapdiagram {
            transitions,
            connectivity,
            peaks,
            peak_tol,
            tol,
            n_spins,
            exhaustive,
            config,
            out,
        } => {
            let (set, pass) = mapdiagram(
                transitions,
                connectivity.as_deref(),
                peaks.as_deref(),
                *peak_tol,
                *tol,
                *n_spins,
                *exhaustive,
                config.as_deref(),
            )?;
            write(&set, &out.out)?;
            if !pass {
                return Err(failed("diagram verification failed; see verify.json"));
            }
            return Ok(());
        }
        Command::Pops {
            system,
            out,
            transition,
            readout_angle,
        } => (pops(system, transition, *readout_angle)?, &out.out),
        Command::Sallt {
            system,
            out,
            transition,
            flip_error,
        } => (sallt(system, transition.as_deref(), *flip_error)?, &out.out),
        Command::Gate { gate: g } => {
            let dir = match g {
                GateCommand::Cnnot { args, .. } | GateCommand::Cswap { args, .. } => &args.out.out,
            };
            (gate(g)?, dir)
        }
        Command::Entangle {
            system,
            out,
            flip_error,
            fidelity_floor,
        } => (entangle(system, *flip_error, *fidelity_floor)?, &out.out),
        Command::Compile {
            system,
            out,
            swap,
            cycle,
            random,
            seed,
            no_crush,
        } => (
            compile(
                system,
                swap.as_deref(),
                cycle.as_deref(),
                *random,
                *seed,
                !*no_crush,
            )?,
            &out.out,
        ),
        Command::Protocol {
            system,
            out,
            script,
            flip_error,
        } => (protocol(system, script, *flip_error)?, &out.out),
    };
    write(&set, dir)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => log::LevelFilter::Error,
        (false, 0) => log::LevelFilter::Warn,
        (false, 1) => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Failed(m)) => {
            eprintln!("failed: {m}");
            ExitCode::from(2)
        }
    }
}
