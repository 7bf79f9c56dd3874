//! One-parameter sweeps over a base scenario.

use std::fmt::Write as _;
use std::str::FromStr;

use adaptive_consensus::analysis::{
    consensus_report, norm2, perturbation_bound, DEFAULT_CONSENSUS_TOLERANCE,
};
use adaptive_consensus::graph::lemma1_certificate;
use adaptive_consensus::sim::{self, SimError};
use adaptive_consensus::Scenario;
use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    /// Multiplies every learning rate.
    GammaScale,
    /// Multiplies every feedback gain.
    KScale,
    /// Speeds up every time-varying coefficient.
    DerivativeScale,
    /// Sets the integration step.
    Step,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 4] = [Self::GammaScale, Self::KScale, Self::DerivativeScale, Self::Step];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::GammaScale => "gamma-scale",
            Self::KScale => "k-scale",
            Self::DerivativeScale => "derivative-scale",
            Self::Step => "step",
        }
    }
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|a| a.as_str()).collect();
                format!("unknown axis '{s}', expected one of {}", names.join(", "))
            })
    }
}

impl std::fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `w_star`, `ultimate_bound` and `lambda_min` are NaN without a controller.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub terminal_e_norm: f64,
    pub settling_time: Option<f64>,
    pub w_star: f64,
    pub ultimate_bound: f64,
    pub lambda_min: f64,
    pub final_gap: f64,
    pub terminal_x: Vec<f64>,
    pub diverged: bool,
}

pub const SWEEP_HEADER: &str =
    "value,terminal_e_norm,settling_time,w_star,ultimate_bound,lambda_min,final_gap,diverged";

fn axis_error(msg: String) -> CliError {
    CliError::Validation {
        field: "sweep".into(),
        message: msg,
    }
}

/// The scenario a sweep row simulates.
pub fn apply_axis(base: &Scenario, axis: SweepAxis, value: f64) -> Result<Scenario, CliError> {
    if !(value.is_finite() && value > 0.0) {
        return Err(axis_error(format!("{axis} value {value} must be positive and finite")));
    }
    let ctrl = || {
        base.controller
            .as_ref()
            .ok_or_else(|| axis_error(format!("{axis} needs the controller enabled")))
    };
    let mut sc = base.clone();
    match axis {
        SweepAxis::GammaScale => {
            sc.controller = Some(ctrl()?.with_rates_scaled(value).map_err(|e| axis_error(e.to_string()))?)
        }
        SweepAxis::KScale => {
            sc.controller = Some(ctrl()?.with_gains_scaled(value).map_err(|e| axis_error(e.to_string()))?)
        }
        SweepAxis::DerivativeScale => {
            sc.coefficients = sc.coefficients.with_derivative_scaled(value)
        }
        SweepAxis::Step => {
            sc.sim.step = value;
            // keep the recording interval of the base scenario
            let interval = base.sim.step * base.sim.stride as f64;
            sc.sim.stride = ((interval / value).round() as usize).max(1);
            sc.sim.validate().map_err(|e| axis_error(e.to_string()))?;
        }
    }
    Ok(sc)
}

fn run_row(sc: &Scenario, value: f64) -> Result<SweepRow, CliError> {
    let mut w_star = f64::NAN;
    let mut lambda_min = f64::NAN;
    let mut ultimate = f64::NAN;
    if let Some(c) = &sc.controller {
        w_star = perturbation_bound(&sc.coefficients, c, &sc.graph).total;
        lambda_min = lemma1_certificate(&sc.graph, c.gains())
            .map_err(|e| axis_error(e.to_string()))?
            .lambda_min;
        ultimate = w_star / lambda_min;
    }
    let (traj, diverged) = match sim::run(sc, &sc.sim) {
        Ok(t) => (t, false),
        Err(SimError::Divergence { partial, .. }) => (*partial, true),
        Err(e) => return Err(axis_error(e.to_string())),
    };
    let report = consensus_report(&traj, &sc.x0, DEFAULT_CONSENSUS_TOLERANCE);
    Ok(SweepRow {
        value,
        terminal_e_norm: norm2(&traj.final_state.error()),
        settling_time: report.settling_time,
        w_star,
        ultimate_bound: ultimate,
        lambda_min,
        final_gap: report.final_gap,
        terminal_x: traj.final_state.x,
        diverged,
    })
}

/// Runs one row per value, in parallel; rows keep the order of `values`.
pub fn sweep(base: &Scenario, axis: SweepAxis, values: &[f64]) -> Result<Vec<SweepRow>, CliError> {
    if values.is_empty() {
        return Err(axis_error("no sweep values given".into()));
    }
    let scenarios = values
        .iter()
        .map(|&v| apply_axis(base, axis, v))
        .collect::<Result<Vec<_>, _>>()?;
    std::thread::scope(|s| {
        let handles: Vec<_> = scenarios
            .iter()
            .zip(values)
            .map(|(sc, &v)| s.spawn(move || run_row(sc, v)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    })
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let settle = r.settling_time.map_or("nan".to_string(), |t| format!("{t:?}"));
        writeln!(
            out,
            "{:?},{:?},{},{:?},{:?},{:?},{:?},{}",
            r.value, r.terminal_e_norm, settle, r.w_star, r.ultimate_bound, r.lambda_min, r.final_gap, r.diverged
        )
        .unwrap();
    }
    out
}
