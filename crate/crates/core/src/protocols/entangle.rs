use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use serde::Serialize;

use crate::compiler::compile_level_swap;
use crate::pulse::{selective_pulse, DensityState};
use crate::spin::{operators, Complex, LabelMap, SpinModel};

use super::coherence::{coherence_report, CoherenceReport, COHERENCE_FLOOR};
use super::prep::prepare_sallt;
use super::{transition_between, ProtocolError};

/// Overlap of a deviation state with a pure target inside a subspace.
///
/// With B the block of `state` on `levels` (dimension d) and Δ its
/// traceless part, the value is 1/d + (1 − 1/d)·c, where c is the
/// normalized Frobenius correlation of Δ with |ψ⟩⟨ψ| − I/d. A block of the
/// form a·I + b·|ψ⟩⟨ψ| (b > 0) scores 1, an orthogonal pseudopure state 0;
/// the result is clamped to [0, 1].
pub fn fidelity(
    state: &DensityState,
    levels: &[usize],
    target: &[Complex],
) -> Result<f64, ProtocolError> {
    let d = levels.len();
    if target.len() != d {
        return Err(ProtocolError::Dimension(target.len(), d));
    }
    if let Some(&l) = levels.iter().find(|&&l| l >= state.dim()) {
        return Err(ProtocolError::Dimension(l, state.dim()));
    }
    let norm = target.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(ProtocolError::TargetNotNormalized(norm));
    }
    let rho = state.matrix();
    let inv_d = 1.0 / d as f64;
    let mean = levels.iter().map(|&l| rho[(l, l)].re).sum::<f64>() * inv_d;
    let (mut dot, mut nd, mut np) = (0.0, 0.0, 0.0);
    for (i, &li) in levels.iter().enumerate() {
        for (j, &lj) in levels.iter().enumerate() {
            let delta = rho[(li, lj)]
                - if i == j {
                    Complex::new(mean, 0.0)
                } else {
                    Complex::new(0.0, 0.0)
                };
            let p = target[i] * target[j].conj()
                - if i == j {
                    Complex::new(inv_d, 0.0)
                } else {
                    Complex::new(0.0, 0.0)
                };
            // tr(Δ P) = Σ Δ_ij P_ji, and P_ji = conj(P_ij)
            dot += (delta * p.conj()).re;
            nd += delta.norm_sqr();
            np += p.norm_sqr();
        }
    }
    let corr = if nd > 0.0 && np > 0.0 {
        dot / (nd.sqrt() * np.sqrt())
    } else {
        0.0
    };
    Ok((inv_d + (1.0 - inv_d) * corr).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntanglementOptions {
    /// Relative flip-angle error applied to every pulse.
    pub flip_error: f64,
    /// Stages scoring below this are flagged.
    pub fidelity_floor: f64,
    pub coherence_floor: f64,
}

impl Default for EntanglementOptions {
    fn default() -> Self {
        EntanglementOptions {
            flip_error: 0.0,
            fidelity_floor: 0.0,
            coherence_floor: COHERENCE_FLOOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageReport {
    pub name: String,
    /// Pulses of this stage as script lines.
    pub pulses: Vec<String>,
    /// Nonzero amplitudes of the ideal target, by label.
    pub target: Vec<(String, f64)>,
    pub fidelity: f64,
    pub flagged: bool,
    pub populations: Vec<(String, f64)>,
    pub coherences: CoherenceReport,
}

#[derive(Debug, Clone)]
pub struct EntanglementRun {
    pub stages: Vec<StageReport>,
    pub states: Vec<DensityState>,
    /// Levels of the working subsystem (first qubit set), in label order.
    pub subspace: Vec<usize>,
    /// Transition ids of the swap stage.
    pub swap_route: Vec<usize>,
}

/// Amplitude bookkeeping for the ideal pure state, used to choose pulse
/// phases so that moved amplitude keeps a positive sign.
struct Tracker {
    psi: Vec<Complex>,
}

impl Tracker {
    /// Phase sending amplitude from the occupied end of (u, l) to the
    /// other with factor +1 under a π pulse.
    fn directed_phase(&self, u: usize, l: usize) -> f64 {
        if self.psi[l].norm() > self.psi[u].norm() {
            -FRAC_PI_2
        } else {
            FRAC_PI_2
        }
    }

    fn rotate(&mut self, u: usize, l: usize, angle: f64, phase: f64) {
        let r = operators::spin_rotation(angle, phase);
        let (a, b) = (self.psi[u], self.psi[l]);
        self.psi[u] = r[(0, 0)] * a + r[(0, 1)] * b;
        self.psi[l] = r[(1, 0)] * a + r[(1, 1)] * b;
    }
}

struct Runner<'a> {
    model: &'a SpinModel,
    labels: LabelMap,
    opts: &'a EntanglementOptions,
    tracker: Tracker,
    state: DensityState,
    pulses: Vec<String>,
}

impl Runner<'_> {
    fn level(&self, label: &str) -> Result<usize, ProtocolError> {
        self.labels
            .level_of(label)
            .ok_or_else(|| ProtocolError::UnknownLabel(label.to_string()))
    }

    fn pulse(&mut self, id: usize, angle: f64) -> Result<(), ProtocolError> {
        let t = self
            .model
            .transitions
            .get(id)
            .ok_or(ProtocolError::UnknownTransition(id))?;
        let (u, l) = (t.upper, t.lower);
        let phase = self.tracker.directed_phase(u, l);
        self.tracker.rotate(u, l, angle, phase);
        self.state = selective_pulse(
            &self.state,
            &self.model.transitions,
            id,
            angle,
            phase,
            self.opts.flip_error,
        )?;
        let angle_text = if angle == PI { "pi" } else { "pi/2" };
        let phase_text = if phase > 0.0 { "pi/2" } else { "-pi/2" };
        self.pulses
            .push(format!("pulse selective {id} {angle_text} {phase_text}"));
        Ok(())
    }

    fn finish_stage(
        &mut self,
        name: &str,
        subspace: &[usize],
        target: &[(&str, f64)],
    ) -> Result<StageReport, ProtocolError> {
        let mut ket = vec![Complex::new(0.0, 0.0); subspace.len()];
        for &(label, amp) in target {
            let level = self.level(label)?;
            let k = subspace
                .iter()
                .position(|&l| l == level)
                .expect("target inside subspace");
            ket[k] = Complex::new(amp, 0.0);
        }
        let f = fidelity(&self.state, subspace, &ket)?;
        let populations = (0..self.state.dim())
            .map(|l| (self.labels.label(l).to_string(), self.state.population(l)))
            .collect();
        Ok(StageReport {
            name: name.to_string(),
            pulses: std::mem::take(&mut self.pulses),
            target: target.iter().map(|&(l, a)| (l.to_string(), a)).collect(),
            fidelity: f,
            flagged: f < self.opts.fidelity_floor,
            populations,
            coherences: coherence_report(
                &self.state,
                &self.model.system,
                &self.labels,
                &self.model.transitions,
                self.opts.coherence_floor,
            ),
        })
    }
}

/// Four stages inside the subsystem whose first qubit (the single
/// minority spin) is 1:
///
/// 1. subsystem pseudopure |0000⟩ by SALLT on 00000 ↔ 10000;
/// 2. π/2 on 10000 ↔ 10100, giving |0000⟩ + |0100⟩;
/// 3. π on 10100 ↔ 10110, giving the entangled |0000⟩ + |0110⟩;
/// 4. π(10100↔10110) π(10100↔11001) π(10100↔10110), moving the pair to
///    |0000⟩ + |1001⟩. Without an observable 10100 ↔ 11001 line the swap of
///    10110 and 11001 is compiled from the transition graph instead.
///
/// No crush is applied after SALLT. Each π/2 and π is phased so moved
/// amplitude arrives with sign +1.
pub fn run_entanglement_transfer(
    model: &SpinModel,
    opts: &EntanglementOptions,
) -> Result<EntanglementRun, ProtocolError> {
    let sys = &model.system;
    let labels = model.labels()?;
    let majority = sys.majority_species();
    let minority: Vec<usize> = (0..sys.n_spins())
        .filter(|&k| &sys.spins()[k].species != majority)
        .collect();
    if sys.n_spins() != 5 || minority != [0] {
        return Err(ProtocolError::UnsupportedSystem);
    }
    let table = &model.transitions;
    let subspace: Vec<usize> = (16u32..32)
        .map(|bits| {
            labels
                .level(crate::spin::QubitLabel::new(bits, 5))
                .expect("full label set")
        })
        .collect();

    let sallt_id = transition_between(table, &labels, "00000", "10000")?;
    let state = prepare_sallt(model, sallt_id, opts.flip_error)?;
    let start = labels.level_of("10000").expect("label exists");
    let mut psi = vec![Complex::new(0.0, 0.0); model.n_levels()];
    psi[start] = Complex::new(1.0, 0.0);
    let mut run = Runner {
        model,
        labels: labels.clone(),
        opts,
        tracker: Tracker { psi },
        state,
        pulses: vec![format!("sallt {sallt_id}")],
    };

    let mut stages = Vec::new();
    let mut states = Vec::new();
    let s = FRAC_1_SQRT_2;

    stages.push(run.finish_stage("pseudopure", &subspace, &[("10000", 1.0)])?);
    states.push(run.state.clone());

    let t2 = transition_between(table, &labels, "10000", "10100")?;
    run.pulse(t2, FRAC_PI_2)?;
    stages.push(run.finish_stage("superposition", &subspace, &[("10000", s), ("10100", s)])?);
    states.push(run.state.clone());

    let t27 = transition_between(table, &labels, "10100", "10110")?;
    run.pulse(t27, PI)?;
    stages.push(run.finish_stage("entangle", &subspace, &[("10000", s), ("10110", s)])?);
    states.push(run.state.clone());

    let swap_route = match transition_between(table, &labels, "10100", "11001") {
        Ok(t39) => vec![t27, t39, t27],
        Err(ProtocolError::NoTransition(..)) => {
            log::warn!("no 10100 <-> 11001 line; compiling the swap from the transition graph");
            let a = labels.level_of("10110").expect("label exists");
            let b = labels.level_of("11001").expect("label exists");
            compile_level_swap(table, a, b)?.transitions
        }
        Err(e) => return Err(e),
    };
    for &id in &swap_route {
        run.pulse(id, PI)?;
    }
    stages.push(run.finish_stage("transfer", &subspace, &[("10000", s), ("11001", s)])?);
    states.push(run.state.clone());

    Ok(EntanglementRun {
        stages,
        states,
        subspace,
        swap_route,
    })
}
