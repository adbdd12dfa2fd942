use serde::{Deserialize, Serialize};

use crate::spin::{operators, Species, SpinModel};

use super::rotation::hard_propagator;
use super::{DensityState, PulseError};

/// Readout angles above this leave the linear regime noticeably.
pub const READOUT_WARN_ANGLE: f64 = std::f64::consts::PI / 8.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumLine {
    pub freq_hz: f64,
    pub amplitude: f64,
    pub transition_id: usize,
    pub species: Species,
}

/// Stick spectrum of one observed species, one line per transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum1D {
    pub species: Species,
    pub lines: Vec<SpectrumLine>,
    pub linewidth_hz: f64,
}

impl Spectrum1D {
    pub fn line(&self, transition_id: usize) -> Option<&SpectrumLine> {
        self.lines.iter().find(|l| l.transition_id == transition_id)
    }

    pub fn amplitude(&self, transition_id: usize) -> Option<f64> {
        self.line(transition_id).map(|l| l.amplitude)
    }

    /// Sum of absorptive Lorentzians (FWHM = linewidth) sampled on
    /// `points` evenly spaced frequencies spanning [lo, hi].
    pub fn render(&self, lo: f64, hi: f64, points: usize) -> Vec<(f64, f64)> {
        let hw = self.linewidth_hz / 2.0;
        let step = if points > 1 {
            (hi - lo) / (points - 1) as f64
        } else {
            0.0
        };
        (0..points)
            .map(|k| {
                let f = lo + step * k as f64;
                let y = self
                    .lines
                    .iter()
                    .map(|l| {
                        let x = f - l.freq_hz;
                        l.amplitude * hw * hw / (x * x + hw * hw)
                    })
                    .sum();
                (f, y)
            })
            .collect()
    }

    /// Frequency window covering all lines plus ten linewidths.
    pub fn default_window(&self) -> (f64, f64) {
        let lo = self
            .lines
            .iter()
            .map(|l| l.freq_hz)
            .fold(f64::INFINITY, f64::min);
        let hi = self
            .lines
            .iter()
            .map(|l| l.freq_hz)
            .fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() {
            return (0.0, 1.0);
        }
        let pad = 10.0 * self.linewidth_hz.max(1e-3);
        (lo - pad, hi + pad)
    }
}

fn check_species(model: &SpinModel, species: &Species) -> Result<(), PulseError> {
    if model.system.species_index(species).is_none() {
        return Err(PulseError::UnknownSpecies(species.clone()));
    }
    Ok(())
}

/// Small-angle readout by exact evolution: rotate the observed species by
/// `angle` about x, then project each transition's coherence onto its
/// transverse matrix element, A = 4 Im(ρ'_ul · conj(F_x,ul)).
pub fn readout_spectrum(
    model: &SpinModel,
    state: &DensityState,
    species: &Species,
    angle: f64,
    linewidth_hz: f64,
) -> Result<Spectrum1D, PulseError> {
    check_species(model, species)?;
    if !state.same_basis(&model.eigen) {
        return Err(PulseError::BasisMismatch);
    }
    if angle.abs() > READOUT_WARN_ANGLE {
        log::warn!("readout angle {angle:.4} rad is outside the linear regime");
    }
    let u = hard_propagator(model, species, angle, 0.0);
    let rho = &u * state.matrix() * u.adjoint();
    let fx = model
        .eigen
        .to_eigenbasis(&operators::transverse(&model.system, species, 0.0));

    let lines = model
        .transitions
        .of_species(species)
        .map(|t| {
            let amp = 4.0 * (rho[(t.upper, t.lower)] * fx[(t.upper, t.lower)].conj()).im;
            SpectrumLine {
                freq_hz: t.freq_hz,
                amplitude: amp,
                transition_id: t.id,
                species: species.clone(),
            }
        })
        .collect();
    Ok(Spectrum1D {
        species: species.clone(),
        lines,
        linewidth_hz,
    })
}

/// Linear-response fast path: A = sin(angle) · intensity · (P_upper − P_lower).
/// Coherences in `state` are ignored.
pub fn readout_linear(
    model: &SpinModel,
    state: &DensityState,
    species: &Species,
    angle: f64,
    linewidth_hz: f64,
) -> Result<Spectrum1D, PulseError> {
    check_species(model, species)?;
    if !state.same_basis(&model.eigen) {
        return Err(PulseError::BasisMismatch);
    }
    let s = angle.sin();
    let lines = model
        .transitions
        .of_species(species)
        .map(|t| SpectrumLine {
            freq_hz: t.freq_hz,
            amplitude: s * t.intensity * (state.population(t.upper) - state.population(t.lower)),
            transition_id: t.id,
            species: species.clone(),
        })
        .collect();
    Ok(Spectrum1D {
        species: species.clone(),
        lines,
        linewidth_hz,
    })
}
