//! Lyapunov and consensus diagnostics over simulated trajectories.
//!
//! Everything here may use the true coefficients; it runs beside the
//! controller, never inside it.

use serde::Serialize;

use crate::controller::{ControllerConfig, EstimatorState};
use crate::graph::{lemma1_certificate, GainMatrix, GraphError, GraphTopology};
use crate::plant::{check_dim, PlantError, TrueWeights};
use crate::sim::{Scenario, Trajectory};
use crate::uncertainty::UncertainCoefficients;

/// `V = 1/2 sum_i ( e_i^2 + (w_hat_i - w_i)^2 / gamma_i
///                  + sum_{i~j} (w_hat_ij - w_ij)^2 / gamma_ij )`.
pub fn lyapunov_value(
    e: &[f64],
    est: &EstimatorState,
    w: &TrueWeights,
    cfg: &ControllerConfig,
) -> Result<f64, PlantError> {
    let n = cfg.gamma_node().len();
    let m = cfg.gamma_edge().len();
    check_dim("e", n, e.len())?;
    check_dim("node estimates", n, est.node.len())?;
    check_dim("edge estimates", m, est.edge.len())?;
    check_dim("node weights", n, w.node.len())?;
    check_dim("edge weights", m, w.edge.len())?;
    let tracking: f64 = e.iter().map(|v| v * v).sum();
    let node: f64 = (0..n)
        .map(|i| (est.node[i] - w.node[i]).powi(2) / cfg.gamma_node()[i])
        .sum();
    let edge: f64 = (0..m)
        .map(|s| (est.edge[s] - w.edge[s]).powi(2) / cfg.gamma_edge()[s])
        .sum();
    Ok(0.5 * (tracking + node + edge))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationBound {
    /// `w_i^*`, one per node.
    pub per_node: Vec<f64>,
    /// `w^* = sum_i w_i^*`.
    pub total: f64,
}

/// Bounds `|sum (w_hat - w) w' / gamma|` per node by the diameter of the
/// projection set times the coefficient derivative bound over the learning
/// rate, summed over the node estimate and its outgoing edge estimates.
pub fn perturbation_bound(
    coeff: &UncertainCoefficients,
    cfg: &ControllerConfig,
    g: &GraphTopology,
) -> PerturbationBound {
    let range = 2.0 * cfg.projection().outer_radius();
    let per_node: Vec<f64> = (0..g.node_count())
        .map(|i| {
            let own = range * coeff.alpha_derivative_bound(i) / cfg.gamma_node()[i];
            let edges: f64 = g
                .slots(i)
                .map(|s| range * coeff.beta_derivative_bound(s) / cfg.gamma_edge()[s])
                .sum();
            own + edges
        })
        .collect();
    let total = per_node.iter().sum();
    PerturbationBound { per_node, total }
}

/// `w^* / lambda_min(L + K)`.
pub fn ultimate_bound(g: &GraphTopology, k: &GainMatrix, w_star: f64) -> Result<f64, GraphError> {
    Ok(w_star / lemma1_certificate(g, k)?.lambda_min)
}

/// Radius outside which `V' <= -lambda_min ||e||^2 + w^*` is negative,
/// `sqrt(w^* / lambda_min(L + K))`.
pub fn decrease_radius(g: &GraphTopology, k: &GainMatrix, w_star: f64) -> Result<f64, GraphError> {
    Ok(ultimate_bound(g, k, w_star)?.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    #[serde(rename = "V")]
    pub v: f64,
    #[serde(rename = "V_dot")]
    pub v_dot_estimate: f64,
    pub e_norm: f64,
    pub bound: f64,
    pub consensus_gap: f64,
}

/// Per-row diagnostics. Without a controller `V` reduces to `||e||^2 / 2`
/// and the bound is reported as zero.
pub fn diagnostics(sc: &Scenario, traj: &Trajectory) -> Vec<DiagnosticsRecord> {
    let target = crate::plant::reference_fixed_point(&sc.x0);
    let bound = sc
        .controller
        .as_ref()
        .and_then(|c| {
            let w_star = perturbation_bound(&sc.coefficients, c, &sc.graph).total;
            ultimate_bound(&sc.graph, c.gains(), w_star).ok()
        })
        .unwrap_or(0.0);

    let mut out: Vec<DiagnosticsRecord> = traj
        .rows
        .iter()
        .map(|row| {
            let e_norm = norm2(&row.e);
            let v = match &sc.controller {
                Some(c) => lyapunov_value(&row.e, &row.est, &sc.true_weights(row.t), c)
                    .expect("trajectory rows match the scenario"),
                None => 0.5 * e_norm * e_norm,
            };
            DiagnosticsRecord {
                t: row.t,
                v,
                v_dot_estimate: 0.0,
                e_norm,
                bound,
                consensus_gap: consensus_gap(&row.x, target),
            }
        })
        .collect();

    let len = out.len();
    if len >= 2 {
        for k in 0..len {
            let (a, b) = match k {
                0 => (0, 1),
                k if k == len - 1 => (k - 1, k),
                k => (k - 1, k + 1),
            };
            out[k].v_dot_estimate = (out[b].v - out[a].v) / (out[b].t - out[a].t);
        }
    }
    out
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `max_i |x_i - target|`.
pub fn consensus_gap(x: &[f64], target: f64) -> f64 {
    x.iter().fold(0.0, |m, xi| m.max((xi - target).abs()))
}

fn spread(x: &[f64]) -> f64 {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    max - min
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ConsensusAtAverage,
    ConsensusElsewhere,
    NoConsensus,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::ConsensusAtAverage => "consensus-at-average",
            Self::ConsensusElsewhere => "consensus-elsewhere",
            Self::NoConsensus => "no-consensus",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsensusReport {
    pub target: f64,
    pub tolerance: f64,
    pub final_gap: f64,
    /// `max_i x_i - min_i x_i` at the terminal time.
    pub final_spread: f64,
    /// First recorded time after which the gap stays below `tolerance`.
    pub settling_time: Option<f64>,
    pub verdict: Verdict,
}

pub const DEFAULT_CONSENSUS_TOLERANCE: f64 = 1e-2;

pub fn consensus_report(traj: &Trajectory, x0: &[f64], tolerance: f64) -> ConsensusReport {
    let target = crate::plant::reference_fixed_point(x0);
    let last = &traj.final_state.x;
    let final_gap = consensus_gap(last, target);
    let final_spread = spread(last);

    let mut settling_time = None;
    if final_gap < tolerance {
        settling_time = Some(traj.final_state.t);
        for row in traj.rows.iter().rev() {
            if consensus_gap(&row.x, target) < tolerance {
                settling_time = Some(row.t);
            } else {
                break;
            }
        }
    }

    let verdict = if final_gap < tolerance {
        Verdict::ConsensusAtAverage
    } else if final_spread < tolerance {
        Verdict::ConsensusElsewhere
    } else {
        Verdict::NoConsensus
    };
    ConsensusReport {
        target,
        tolerance,
        final_gap,
        final_spread,
        settling_time,
        verdict,
    }
}
