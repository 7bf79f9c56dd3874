//! Rendering of run outputs: trajectory and diagnostics tables plus a JSON
//! summary. Rendering is separate from writing so outputs can be compared
//! byte for byte without touching the file system.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use adaptive_consensus::analysis::{
    consensus_report, diagnostics, norm2, perturbation_bound, ultimate_bound,
    DiagnosticsRecord, DEFAULT_CONSENSUS_TOLERANCE,
};
use adaptive_consensus::graph::lemma1_certificate;
use adaptive_consensus::sim::{self, SimError};
use adaptive_consensus::{Integrator, Scenario, Trajectory};
use serde::Serialize;

use crate::error::CliError;

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const SUMMARY_FILE: &str = "summary.json";

pub const DIAGNOSTICS_HEADER: &str = "t,V,V_dot,e_norm,bound,consensus_gap";

pub fn trajectory_header(n: usize) -> String {
    let mut cols = vec!["t".to_string()];
    for prefix in ["x", "r", "e"] {
        cols.extend((1..=n).map(|i| format!("{prefix}_{i}")));
    }
    cols.extend(["V", "e_norm", "consensus_gap"].map(String::from));
    cols.join(",")
}

/// Shortest decimal text that parses back to the same `f64`.
fn num(out: &mut String, v: f64) {
    write!(out, "{v:?}").unwrap();
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub controller: bool,
    pub integrator: Integrator,
    pub step: f64,
    pub horizon: f64,
    pub stride: usize,
    pub steps: usize,
    pub rows: usize,
    pub target: f64,
    pub tolerance: f64,
    pub verdict: &'static str,
    pub final_time: f64,
    pub final_x: Vec<f64>,
    pub final_gap: f64,
    pub final_spread: f64,
    pub settling_time: Option<f64>,
    pub final_e_norm: f64,
    pub max_e_norm: f64,
    pub lambda_min: Option<f64>,
    pub w_star: Option<f64>,
    pub ultimate_bound: Option<f64>,
    pub max_abs_estimate: Option<f64>,
    pub projection_limit: Option<f64>,
    pub diverged: bool,
    pub divergence_time: Option<f64>,
}

/// Everything a run writes, already rendered.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedRun {
    pub summary: RunSummary,
    pub trajectory_csv: String,
    pub diagnostics_csv: String,
    pub summary_json: String,
}

impl RenderedRun {
    pub fn write_to(&self, dir: &Path) -> Result<(), CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        for (name, body) in [
            (TRAJECTORY_FILE, &self.trajectory_csv),
            (DIAGNOSTICS_FILE, &self.diagnostics_csv),
            (SUMMARY_FILE, &self.summary_json),
        ] {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
        }
        Ok(())
    }

    /// The error this run maps to, if it diverged.
    pub fn divergence(&self) -> Option<CliError> {
        self.summary.divergence_time.map(|t| CliError::Divergence {
            scenario: self.summary.scenario.clone(),
            t,
        })
    }
}

/// Simulates `sc` and renders its outputs. Divergence is not an error at this
/// stage: the partial trajectory is rendered and flagged in the summary.
pub fn render_run(sc: &Scenario) -> Result<RenderedRun, CliError> {
    let (traj, divergence_time) = match sim::run(sc, &sc.sim) {
        Ok(t) => (t, None),
        Err(SimError::Divergence { t, partial }) => (*partial, Some(t)),
        Err(e) => {
            return Err(CliError::Validation {
                field: "scenario".into(),
                message: e.to_string(),
            })
        }
    };
    let diag = diagnostics(sc, &traj);
    let summary = summarize(sc, &traj, &diag, divergence_time);
    Ok(RenderedRun {
        trajectory_csv: trajectory_csv(&traj, &diag),
        diagnostics_csv: diagnostics_csv(&diag),
        summary_json: serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n",
        summary,
    })
}

pub fn trajectory_csv(traj: &Trajectory, diag: &[DiagnosticsRecord]) -> String {
    let n = traj.final_state.x.len();
    let mut out = trajectory_header(n);
    out.push('\n');
    for (row, d) in traj.rows.iter().zip(diag) {
        num(&mut out, row.t);
        for v in row.x.iter().chain(&row.r).chain(&row.e).chain([d.v, d.e_norm, d.consensus_gap].iter()) {
            out.push(',');
            num(&mut out, *v);
        }
        out.push('\n');
    }
    out
}

pub fn diagnostics_csv(diag: &[DiagnosticsRecord]) -> String {
    let mut out = String::from(DIAGNOSTICS_HEADER);
    out.push('\n');
    for d in diag {
        num(&mut out, d.t);
        for v in [d.v, d.v_dot_estimate, d.e_norm, d.bound, d.consensus_gap] {
            out.push(',');
            num(&mut out, v);
        }
        out.push('\n');
    }
    out
}

fn summarize(
    sc: &Scenario,
    traj: &Trajectory,
    diag: &[DiagnosticsRecord],
    divergence_time: Option<f64>,
) -> RunSummary {
    let report = consensus_report(traj, &sc.x0, DEFAULT_CONSENSUS_TOLERANCE);
    let ctrl = sc.controller.as_ref();
    let lambda_min = ctrl.and_then(|c| lemma1_certificate(&sc.graph, c.gains()).ok().map(|x| x.lambda_min));
    let w_star = ctrl.map(|c| perturbation_bound(&sc.coefficients, c, &sc.graph).total);
    let ultimate = ctrl
        .zip(w_star)
        .and_then(|(c, w)| ultimate_bound(&sc.graph, c.gains(), w).ok());
    let max_abs_estimate = ctrl.map(|_| {
        traj.rows
            .iter()
            .map(|r| r.est.max_abs())
            .fold(traj.final_state.est.max_abs(), f64::max)
    });
    RunSummary {
        scenario: sc.name.clone(),
        controller: ctrl.is_some(),
        integrator: sc.sim.integrator,
        step: sc.sim.step,
        horizon: sc.sim.horizon,
        stride: sc.sim.stride,
        steps: traj.steps,
        rows: traj.rows.len(),
        target: report.target,
        tolerance: report.tolerance,
        verdict: report.verdict.as_str(),
        final_time: traj.final_state.t,
        final_x: traj.final_state.x.clone(),
        final_gap: report.final_gap,
        final_spread: report.final_spread,
        settling_time: report.settling_time,
        final_e_norm: norm2(&traj.final_state.error()),
        max_e_norm: diag.iter().map(|d| d.e_norm).fold(0.0, f64::max),
        lambda_min,
        w_star,
        ultimate_bound: ultimate,
        max_abs_estimate,
        projection_limit: ctrl.map(|c| c.projection().outer_radius()),
        diverged: divergence_time.is_some(),
        divergence_time,
    }
}

/// Directory that receives the outputs of scenario `name` under `out`.
pub fn run_dir(out: &Path, name: &str) -> PathBuf {
    out.join(name)
}
