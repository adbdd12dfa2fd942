use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use crate::pulse::{crush, subtract_states, CrushMode, DensityState, PulseSpec};
use crate::spin::{LabelMap, Species, SpinModel};

use super::{transition_between, ProtocolError};

/// Angle in radians from `pi`, `pi/2`, `-pi/4`, `3pi/2`, `2*pi`, `90deg`
/// or a plain number.
pub fn parse_angle(text: &str) -> Option<f64> {
    let t = text.trim().to_ascii_lowercase();
    if let Some(deg) = t.strip_suffix("deg") {
        return deg
            .trim()
            .parse::<f64>()
            .ok()
            .map(f64::to_radians)
            .filter(|v| v.is_finite());
    }
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (
            n.trim(),
            d.trim().parse::<f64>().ok().filter(|&d| d != 0.0)?,
        ),
        None => (t.as_str(), 1.0),
    };
    let value = if let Some(coef) = num.strip_suffix("pi") {
        let coef = coef.trim().trim_end_matches('*').trim();
        let c = match coef {
            "" | "+" => 1.0,
            "-" => -1.0,
            c => c.parse::<f64>().ok()?,
        };
        c * PI
    } else {
        num.parse::<f64>().ok()?
    };
    Some(value / den).filter(|v| v.is_finite())
}

#[derive(Debug, Clone, PartialEq)]
pub enum TransitionRef {
    Id(usize),
    /// Pair of computational labels.
    Labels(String, String),
}

impl TransitionRef {
    pub fn resolve(&self, model: &SpinModel, labels: &LabelMap) -> Result<usize, ProtocolError> {
        match self {
            TransitionRef::Id(id) => model
                .transitions
                .get(*id)
                .map(|t| t.id)
                .ok_or(ProtocolError::UnknownTransition(*id)),
            TransitionRef::Labels(a, b) => transition_between(&model.transitions, labels, a, b),
        }
    }
}

impl fmt::Display for TransitionRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransitionRef::Id(id) => write!(f, "{id}"),
            TransitionRef::Labels(a, b) => write!(f, "{a}:{b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Equilibrium,
    Selective {
        transition: TransitionRef,
        angle: f64,
        phase: f64,
        flip_error: Option<f64>,
    },
    Hard {
        species: Species,
        angle: f64,
        phase: f64,
    },
    Crush(CrushMode),
    /// Subtract a stored snapshot from the current state.
    Subtract(String),
    Snapshot(String),
}

/// Line-oriented pulse program. One step per line, `#` starts a comment:
///
/// ```text
/// equilibrium
/// pulse hard H pi/2 0
/// crush all
/// pulse selective 10000:10100 pi/2 pi/2
/// pulse selective 57 pi 0 0.02
/// snapshot after
/// subtract eq
/// ```
///
/// The state starts at equilibrium, stored as snapshot `eq`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProtocolScript {
    pub steps: Vec<(usize, Step)>,
}

#[derive(Debug, Clone)]
pub struct ScriptRun {
    pub state: DensityState,
    pub snapshots: BTreeMap<String, DensityState>,
}

fn script_err(line: usize, message: impl Into<String>) -> ProtocolError {
    ProtocolError::Script {
        line,
        message: message.into(),
    }
}

fn angle_arg(line: usize, word: Option<&str>, what: &str) -> Result<f64, ProtocolError> {
    let w = word.ok_or_else(|| script_err(line, format!("missing {what}")))?;
    parse_angle(w).ok_or_else(|| script_err(line, format!("bad {what} `{w}`")))
}

fn parse_line(line: usize, words: &[&str]) -> Result<Step, ProtocolError> {
    let rest = |n: usize| words.get(n).copied();
    let expect_len = |min: usize, max: usize| {
        if words.len() < min || words.len() > max {
            Err(script_err(
                line,
                format!("expected {min} to {max} words, found {}", words.len()),
            ))
        } else {
            Ok(())
        }
    };
    match words[0] {
        "equilibrium" => {
            expect_len(1, 1)?;
            Ok(Step::Equilibrium)
        }
        "crush" => {
            expect_len(1, 2)?;
            match rest(1).unwrap_or("all") {
                "all" => Ok(Step::Crush(CrushMode::All)),
                "zq" => Ok(Step::Crush(CrushMode::RetainHomonuclearZq)),
                other => Err(script_err(line, format!("unknown crush mode `{other}`"))),
            }
        }
        "snapshot" | "subtract" => {
            expect_len(2, 2)?;
            let tag = words[1].to_string();
            Ok(if words[0] == "snapshot" {
                Step::Snapshot(tag)
            } else {
                Step::Subtract(tag)
            })
        }
        "pulse" => match rest(1) {
            Some("selective") => {
                expect_len(5, 6)?;
                let transition =
                    match words[2].split_once(':') {
                        Some((a, b)) => TransitionRef::Labels(a.to_string(), b.to_string()),
                        None => TransitionRef::Id(words[2].parse().map_err(|_| {
                            script_err(line, format!("bad transition `{}`", words[2]))
                        })?),
                    };
                let flip_error = rest(5)
                    .map(|w| {
                        w.parse::<f64>()
                            .ok()
                            .filter(|v| v.is_finite())
                            .ok_or_else(|| script_err(line, format!("bad flip error `{w}`")))
                    })
                    .transpose()?;
                Ok(Step::Selective {
                    transition,
                    angle: angle_arg(line, rest(3), "angle")?,
                    phase: angle_arg(line, rest(4), "phase")?,
                    flip_error,
                })
            }
            Some("hard") => {
                expect_len(5, 5)?;
                Ok(Step::Hard {
                    species: Species::new(words[2]),
                    angle: angle_arg(line, rest(3), "angle")?,
                    phase: angle_arg(line, rest(4), "phase")?,
                })
            }
            _ => Err(script_err(
                line,
                "expected `pulse selective` or `pulse hard`",
            )),
        },
        other => Err(script_err(line, format!("unknown step `{other}`"))),
    }
}

impl ProtocolScript {
    pub fn parse(text: &str) -> Result<Self, ProtocolError> {
        let mut steps = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let body = raw.split('#').next().unwrap_or("");
            let words: Vec<&str> = body.split_whitespace().collect();
            if words.is_empty() {
                continue;
            }
            steps.push((k + 1, parse_line(k + 1, &words)?));
        }
        Ok(ProtocolScript { steps })
    }

    /// Runs the steps from equilibrium. `flip_error` applies to every pulse
    /// that does not give its own.
    pub fn execute(
        &self,
        model: &SpinModel,
        labels: &LabelMap,
        flip_error: f64,
    ) -> Result<ScriptRun, ProtocolError> {
        let eq = model.equilibrium();
        let mut snapshots = BTreeMap::from([("eq".to_string(), eq.clone())]);
        let mut state = eq.clone();
        for (line, step) in &self.steps {
            let at = |e: ProtocolError| script_err(*line, e.to_string());
            state = match step {
                Step::Equilibrium => eq.clone(),
                Step::Selective {
                    transition,
                    angle,
                    phase,
                    flip_error: own,
                } => {
                    let id = transition.resolve(model, labels).map_err(at)?;
                    PulseSpec::selective(id, *angle, *phase)
                        .with_flip_error(own.unwrap_or(flip_error))
                        .apply(model, &state)
                        .map_err(|e| at(e.into()))?
                }
                Step::Hard {
                    species,
                    angle,
                    phase,
                } => PulseSpec::hard(species.clone(), *angle, *phase)
                    .with_flip_error(flip_error)
                    .apply(model, &state)
                    .map_err(|e| at(e.into()))?,
                Step::Crush(mode) => crush(&state, *mode),
                Step::Subtract(tag) => {
                    let other = snapshots
                        .get(tag)
                        .ok_or_else(|| script_err(*line, format!("no snapshot `{tag}`")))?;
                    subtract_states(&state, other).map_err(|e| at(e.into()))?
                }
                Step::Snapshot(tag) => {
                    snapshots.insert(tag.clone(), state.clone());
                    state
                }
            };
        }
        Ok(ScriptRun { state, snapshots })
    }
}
