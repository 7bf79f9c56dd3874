//! Unknown coupling coefficients `alpha_i(t)` and `beta_ij(t)` of the
//! physical interaction graph, as deterministic signals with closed-form
//! value and derivative bounds.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::GraphTopology;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UncertaintyError {
    #[error("unknown node id {0}")]
    UnknownNode(usize),
    #[error("({0}, {1}) is not an edge of the topology")]
    NotAnEdge(usize, usize),
    #[error("expected {expected} alpha signals, got {got}")]
    AlphaCount { expected: usize, got: usize },
    #[error("no beta signal for directed edge ({0}, {1})")]
    MissingBeta(usize, usize),
    #[error("invalid signal parameters: {0}")]
    InvalidSignal(String),
}

fn default_phase() -> f64 {
    FRAC_PI_2
}

/// A bounded scalar signal with bounded derivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientSignal {
    Constant {
        value: f64,
    },
    /// `base + amplitude * sin(omega * t + phase)`; the default phase of
    /// pi/2 gives `base + amplitude * cos(omega * t)`.
    Sinusoid {
        base: f64,
        amplitude: f64,
        omega: f64,
        #[serde(default = "default_phase")]
        phase: f64,
    },
    /// Moves from `start` toward `target` at speed `rate`, then holds.
    RampSaturated { start: f64, target: f64, rate: f64 },
}

impl CoefficientSignal {
    pub fn constant(value: f64) -> Self {
        Self::Constant { value }
    }

    /// Cosine-phased sinusoid, `base + amplitude * cos(omega * t)`.
    pub fn sinusoid(base: f64, amplitude: f64, omega: f64) -> Self {
        Self::Sinusoid {
            base,
            amplitude,
            omega,
            phase: FRAC_PI_2,
        }
    }

    pub fn validate(&self) -> Result<(), UncertaintyError> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match *self {
            Self::Constant { value } if finite(&[value]) => Ok(()),
            Self::Sinusoid {
                base,
                amplitude,
                omega,
                phase,
            } if finite(&[base, amplitude, omega, phase]) && omega >= 0.0 => Ok(()),
            Self::RampSaturated {
                start,
                target,
                rate,
            } if finite(&[start, target, rate]) && rate >= 0.0 => Ok(()),
            _ => Err(UncertaintyError::InvalidSignal(format!("{self:?}"))),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Self::Constant { value } => value,
            Self::Sinusoid {
                base,
                amplitude,
                omega,
                phase,
            } => base + amplitude * (omega * t + phase).sin(),
            Self::RampSaturated {
                start,
                target,
                rate,
            } => {
                if target >= start {
                    (start + rate * t).min(target)
                } else {
                    (start - rate * t).max(target)
                }
            }
        }
    }

    /// `sup_t |value(t)|`.
    pub fn value_bound(&self) -> f64 {
        match *self {
            Self::Constant { value } => value.abs(),
            Self::Sinusoid {
                base, amplitude, ..
            } => base.abs() + amplitude.abs(),
            Self::RampSaturated { start, target, .. } => start.abs().max(target.abs()),
        }
    }

    /// `sup_t |d/dt value(t)|`.
    pub fn derivative_bound(&self) -> f64 {
        match *self {
            Self::Constant { .. } => 0.0,
            Self::Sinusoid {
                amplitude, omega, ..
            } => amplitude.abs() * omega,
            Self::RampSaturated {
                start,
                target,
                rate,
            } => {
                if start == target {
                    0.0
                } else {
                    rate
                }
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        self.derivative_bound() == 0.0
    }

    /// Same signal with its derivative bound multiplied by `factor`, leaving
    /// the value range untouched.
    pub fn with_derivative_scaled(&self, factor: f64) -> Self {
        match *self {
            Self::Constant { value } => Self::Constant { value },
            Self::Sinusoid {
                base,
                amplitude,
                omega,
                phase,
            } => Self::Sinusoid {
                base,
                amplitude,
                omega: omega * factor,
                phase,
            },
            Self::RampSaturated {
                start,
                target,
                rate,
            } => Self::RampSaturated {
                start,
                target,
                rate: rate * factor,
            },
        }
    }
}

/// The coefficients of the uncertain graph. `beta` is held per directed
/// pair, in the slot order of the topology it was built against.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertainCoefficients {
    alpha: Vec<CoefficientSignal>,
    beta: Vec<CoefficientSignal>,
    directed: Vec<(usize, usize)>,
}

impl UncertainCoefficients {
    /// `beta` must cover exactly the directed versions of the edges of `g`.
    pub fn new(
        g: &GraphTopology,
        alpha: Vec<CoefficientSignal>,
        beta: BTreeMap<(usize, usize), CoefficientSignal>,
    ) -> Result<Self, UncertaintyError> {
        if alpha.len() != g.node_count() {
            return Err(UncertaintyError::AlphaCount {
                expected: g.node_count(),
                got: alpha.len(),
            });
        }
        for &(i, j) in beta.keys() {
            if !g.are_adjacent(i, j) {
                return Err(UncertaintyError::NotAnEdge(i, j));
            }
        }
        let directed = g.directed_edges();
        let mut ordered = Vec::with_capacity(directed.len());
        for &(i, j) in &directed {
            let signal = beta
                .get(&(i, j))
                .ok_or(UncertaintyError::MissingBeta(i, j))?;
            ordered.push(signal.clone());
        }
        for s in alpha.iter().chain(&ordered) {
            s.validate()?;
        }
        Ok(Self {
            alpha,
            beta: ordered,
            directed,
        })
    }

    /// All-constant coefficients; `beta` listed in the order of
    /// `g.directed_edges()`.
    pub fn constant(
        g: &GraphTopology,
        alpha: &[f64],
        beta: &[f64],
    ) -> Result<Self, UncertaintyError> {
        let directed = g.directed_edges();
        if beta.len() != directed.len() {
            return Err(UncertaintyError::InvalidSignal(format!(
                "expected {} beta values, got {}",
                directed.len(),
                beta.len()
            )));
        }
        let map = directed
            .iter()
            .zip(beta)
            .map(|(&e, &b)| (e, CoefficientSignal::constant(b)))
            .collect();
        Self::new(
            g,
            alpha.iter().map(|&a| CoefficientSignal::constant(a)).collect(),
            map,
        )
    }

    pub fn node_count(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha_signal(&self, i: usize) -> Result<&CoefficientSignal, UncertaintyError> {
        i.checked_sub(1)
            .and_then(|i0| self.alpha.get(i0))
            .ok_or(UncertaintyError::UnknownNode(i))
    }

    pub fn beta_signal(&self, i: usize, j: usize) -> Result<&CoefficientSignal, UncertaintyError> {
        self.directed
            .binary_search(&(i, j))
            .map(|s| &self.beta[s])
            .map_err(|_| UncertaintyError::NotAnEdge(i, j))
    }

    /// Directed pairs with their signals, in slot order.
    pub fn beta_entries(&self) -> impl Iterator<Item = ((usize, usize), &CoefficientSignal)> {
        self.directed.iter().copied().zip(&self.beta)
    }

    pub fn alpha_signals(&self) -> &[CoefficientSignal] {
        &self.alpha
    }

    pub fn eval_alpha(&self, i: usize, t: f64) -> Result<f64, UncertaintyError> {
        Ok(self.alpha_signal(i)?.value(t))
    }

    pub fn eval_beta(&self, i: usize, j: usize, t: f64) -> Result<f64, UncertaintyError> {
        Ok(self.beta_signal(i, j)?.value(t))
    }

    pub(crate) fn alpha_at(&self, i0: usize, t: f64) -> f64 {
        self.alpha[i0].value(t)
    }

    pub(crate) fn beta_at_slot(&self, slot: usize, t: f64) -> f64 {
        self.beta[slot].value(t)
    }

    pub(crate) fn alpha_derivative_bound(&self, i0: usize) -> f64 {
        self.alpha[i0].derivative_bound()
    }

    pub(crate) fn beta_derivative_bound(&self, slot: usize) -> f64 {
        self.beta[slot].derivative_bound()
    }

    /// Largest derivative bound across every signal; zero iff all constant.
    pub fn derivative_bound(&self) -> f64 {
        self.alpha
            .iter()
            .chain(&self.beta)
            .map(CoefficientSignal::derivative_bound)
            .fold(0.0, f64::max)
    }

    pub fn is_constant(&self) -> bool {
        self.derivative_bound() == 0.0
    }

    pub fn with_derivative_scaled(&self, factor: f64) -> Self {
        let scale = |s: &CoefficientSignal| s.with_derivative_scaled(factor);
        Self {
            alpha: self.alpha.iter().map(scale).collect(),
            beta: self.beta.iter().map(scale).collect(),
            directed: self.directed.clone(),
        }
    }

    /// Replaces the alpha signal of node `i` (1-based).
    pub fn with_alpha(&self, i: usize, signal: CoefficientSignal) -> Result<Self, UncertaintyError> {
        signal.validate()?;
        let mut out = self.clone();
        let slot = i
            .checked_sub(1)
            .and_then(|i0| out.alpha.get_mut(i0))
            .ok_or(UncertaintyError::UnknownNode(i))?;
        *slot = signal;
        Ok(out)
    }
}
