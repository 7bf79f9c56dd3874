//! Fixed-step integration of the coupled closed loop: agents, reference
//! model and parameter estimators.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::{ControllerConfig, DistributedLaw, EstimatorState};
use crate::graph::GraphTopology;
use crate::plant::{
    error_rhs_into, plant_rhs_into, reference_rhs_into, true_weights, ReferenceWeights,
    TrueWeights,
};
use crate::uncertainty::UncertainCoefficients;

/// Any state component above this magnitude is treated as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("state diverged at t = {t}")]
    Divergence { t: f64, partial: Box<Trajectory> },
    #[error("{0} requires the adaptive controller to be enabled")]
    ControllerRequired(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    #[default]
    Rk4,
    Euler,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub step: f64,
    pub horizon: f64,
    pub integrator: Integrator,
    /// Steps between recorded rows.
    pub stride: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            step: 1e-3,
            horizon: 15.0,
            integrator: Integrator::Rk4,
            stride: 10,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(SimError::InvalidConfig(format!(
                "step h = {} must be positive",
                self.step
            )));
        }
        if !(self.horizon.is_finite() && self.horizon >= self.step) {
            return Err(SimError::InvalidConfig(format!(
                "horizon T = {} must be at least h = {}",
                self.horizon, self.step
            )));
        }
        if self.stride == 0 {
            return Err(SimError::InvalidConfig("stride must be >= 1".into()));
        }
        Ok(())
    }

    /// Number of steps, `round(T / h)`.
    pub fn steps(&self) -> usize {
        (self.horizon / self.step).round() as usize
    }
}

/// A fully specified closed-loop experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub graph: GraphTopology,
    pub coefficients: UncertainCoefficients,
    pub x0: Vec<f64>,
    /// Reference initial condition; equal to `x0` unless overridden.
    pub r0: Vec<f64>,
    /// `None` runs the uncontrolled plant.
    pub controller: Option<ControllerConfig>,
    pub initial_estimates: EstimatorState,
    pub reference_weights: Option<ReferenceWeights>,
    pub sim: SimConfig,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), SimError> {
        let g = &self.graph;
        let n = g.node_count();
        let bad = |msg: String| Err(SimError::InvalidScenario(msg));
        if !g.is_connected() {
            return bad("graph is not connected".into());
        }
        if self.coefficients.node_count() != n {
            return bad(format!(
                "coefficients cover {} nodes, graph has {n}",
                self.coefficients.node_count()
            ));
        }
        for (what, v) in [("x0", &self.x0), ("r0", &self.r0)] {
            if v.len() != n {
                return bad(format!("{what} has length {}, expected {n}", v.len()));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return bad(format!("{what} has non-finite entries"));
            }
        }
        if self.initial_estimates.node.len() != n
            || self.initial_estimates.edge.len() != g.slot_count()
        {
            return bad("initial estimates do not match the graph".into());
        }
        if let Some(c) = &self.controller {
            let limit = c.projection().theta_max();
            if self.initial_estimates.max_abs() > limit {
                return bad(format!(
                    "initial estimates must satisfy |w_hat| <= theta_max = {limit}"
                ));
            }
        }
        self.sim.validate()
    }

    pub fn initial_state(&self) -> SimState {
        SimState {
            t: 0.0,
            x: self.x0.clone(),
            r: self.r0.clone(),
            est: self.initial_estimates.clone(),
        }
    }

    pub fn true_weights(&self, t: f64) -> TrueWeights {
        true_weights(
            &self.graph,
            &self.coefficients,
            self.reference_weights.as_ref(),
            t,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub x: Vec<f64>,
    pub r: Vec<f64>,
    pub est: EstimatorState,
}

impl SimState {
    pub fn error(&self) -> Vec<f64> {
        self.x.iter().zip(&self.r).map(|(x, r)| x - r).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub x: Vec<f64>,
    pub r: Vec<f64>,
    pub e: Vec<f64>,
    pub est: EstimatorState,
}

impl From<&SimState> for TrajectoryRow {
    fn from(s: &SimState) -> Self {
        Self {
            t: s.t,
            x: s.x.clone(),
            r: s.r.clone(),
            e: s.error(),
            est: s.est.clone(),
        }
    }
}

/// Rows are spaced `h * stride`; the terminal state is kept separately so
/// the spacing holds even when the step count is not a stride multiple.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub rows: Vec<TrajectoryRow>,
    pub final_state: SimState,
    pub steps: usize,
}

/// Autonomous-in-structure ODE `y' = f(t, y)` with scratch space.
pub trait VectorField {
    fn dim(&self) -> usize;
    fn eval(&mut self, t: f64, y: &[f64], dy: &mut [f64]);
}

/// Reusable stage buffers for one-step methods.
pub struct Stepper {
    method: Integrator,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Stepper {
    pub fn new(method: Integrator, dim: usize) -> Self {
        Self {
            method,
            k: std::array::from_fn(|_| vec![0.0; dim]),
            tmp: vec![0.0; dim],
        }
    }

    /// Advances `y` from `t` to `t + h` in place.
    pub fn step<F: VectorField + ?Sized>(&mut self, f: &mut F, t: f64, y: &mut [f64], h: f64) {
        match self.method {
            Integrator::Euler => {
                f.eval(t, y, &mut self.k[0]);
                for (yi, ki) in y.iter_mut().zip(&self.k[0]) {
                    *yi += h * ki;
                }
            }
            Integrator::Rk4 => {
                let [k1, k2, k3, k4] = &mut self.k;
                let tmp = &mut self.tmp;
                f.eval(t, y, k1);
                for ((ti, yi), ki) in tmp.iter_mut().zip(y.iter()).zip(k1.iter()) {
                    *ti = yi + 0.5 * h * ki;
                }
                f.eval(t + 0.5 * h, tmp, k2);
                for ((ti, yi), ki) in tmp.iter_mut().zip(y.iter()).zip(k2.iter()) {
                    *ti = yi + 0.5 * h * ki;
                }
                f.eval(t + 0.5 * h, tmp, k3);
                for ((ti, yi), ki) in tmp.iter_mut().zip(y.iter()).zip(k3.iter()) {
                    *ti = yi + h * ki;
                }
                f.eval(t + h, tmp, k4);
                for (i, yi) in y.iter_mut().enumerate() {
                    *yi += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
        }
    }
}

/// Layout of the packed state `[x | r | w_hat_node | w_hat_edge]`; the
/// estimator block is absent when the controller is off.
#[derive(Debug, Clone, Copy)]
struct Layout {
    n: usize,
    slots: usize,
    adaptive: bool,
}

impl Layout {
    fn of(sc: &Scenario) -> Self {
        Self {
            n: sc.graph.node_count(),
            slots: sc.graph.slot_count(),
            adaptive: sc.controller.is_some(),
        }
    }

    fn dim(&self) -> usize {
        if self.adaptive {
            3 * self.n + self.slots
        } else {
            2 * self.n
        }
    }

    fn split<'a>(&self, y: &'a [f64]) -> (&'a [f64], &'a [f64], &'a [f64], &'a [f64]) {
        let (x, rest) = y.split_at(self.n);
        let (r, rest) = rest.split_at(self.n);
        if self.adaptive {
            let (node, edge) = rest.split_at(self.n);
            (x, r, node, edge)
        } else {
            (x, r, &[], &[])
        }
    }

    fn split_mut<'a>(
        &self,
        y: &'a mut [f64],
    ) -> (&'a mut [f64], &'a mut [f64], &'a mut [f64], &'a mut [f64]) {
        let (x, rest) = y.split_at_mut(self.n);
        let (r, rest) = rest.split_at_mut(self.n);
        if self.adaptive {
            let (node, edge) = rest.split_at_mut(self.n);
            (x, r, node, edge)
        } else {
            (x, r, &mut [], &mut [])
        }
    }

    fn pack(&self, first: &[f64], r: &[f64], est: &EstimatorState) -> Vec<f64> {
        let mut y = Vec::with_capacity(self.dim());
        y.extend_from_slice(first);
        y.extend_from_slice(r);
        if self.adaptive {
            y.extend_from_slice(&est.node);
            y.extend_from_slice(&est.edge);
        }
        y
    }

    fn unpack(&self, y: &[f64], t: f64, template: &EstimatorState) -> SimState {
        let (x, r, node, edge) = self.split(y);
        let est = if self.adaptive {
            EstimatorState {
                node: node.to_vec(),
                edge: edge.to_vec(),
            }
        } else {
            template.clone()
        };
        SimState {
            t,
            x: x.to_vec(),
            r: r.to_vec(),
            est,
        }
    }
}

/// Closed loop integrated in `(x, r, w_hat)` coordinates.
struct DirectField<'a> {
    sc: &'a Scenario,
    layout: Layout,
    est: EstimatorState,
    rate: EstimatorState,
    u: Vec<f64>,
}

impl<'a> DirectField<'a> {
    fn new(sc: &'a Scenario) -> Self {
        Self {
            sc,
            layout: Layout::of(sc),
            est: EstimatorState::zeros(&sc.graph),
            rate: EstimatorState::zeros(&sc.graph),
            u: vec![0.0; sc.graph.node_count()],
        }
    }
}

impl VectorField for DirectField<'_> {
    fn dim(&self) -> usize {
        self.layout.dim()
    }

    fn eval(&mut self, t: f64, y: &[f64], dy: &mut [f64]) {
        let sc = self.sc;
        let g = &sc.graph;
        let (x, r, node, edge) = self.layout.split(y);
        let (dx, dr, dnode, dedge) = self.layout.split_mut(dy);
        match &sc.controller {
            Some(cfg) => {
                self.est.node.copy_from_slice(node);
                self.est.edge.copy_from_slice(edge);
                cfg.control_into(g, &self.est, x, r, &mut self.u);
                cfg.estimator_rhs_into(g, &self.est, x, r, &mut self.rate);
                dnode.copy_from_slice(&self.rate.node);
                dedge.copy_from_slice(&self.rate.edge);
            }
            None => self.u.fill(0.0),
        }
        plant_rhs_into(g, &sc.coefficients, x, &self.u, t, dx);
        reference_rhs_into(g, r, sc.reference_weights.as_ref(), dr);
    }
}

type WeightModel<'a> =
    dyn Fn(&GraphTopology, &UncertainCoefficients, Option<&ReferenceWeights>, f64) -> TrueWeights + 'a;

/// Closed loop integrated in `(e, r, w_hat)` coordinates using the
/// estimation-error form of the tracking dynamics.
struct ErrorField<'a> {
    sc: &'a Scenario,
    cfg: &'a ControllerConfig,
    weights: &'a WeightModel<'a>,
    layout: Layout,
    est: EstimatorState,
    rate: EstimatorState,
    x: Vec<f64>,
}

impl VectorField for ErrorField<'_> {
    fn dim(&self) -> usize {
        self.layout.dim()
    }

    fn eval(&mut self, t: f64, y: &[f64], dy: &mut [f64]) {
        let sc = self.sc;
        let g = &sc.graph;
        let xi = sc.reference_weights.as_ref();
        let (e, r, node, edge) = self.layout.split(y);
        let (de, dr, dnode, dedge) = self.layout.split_mut(dy);
        for ((x, e), r) in self.x.iter_mut().zip(e).zip(r) {
            *x = e + r;
        }
        self.est.node.copy_from_slice(node);
        self.est.edge.copy_from_slice(edge);
        let w = (self.weights)(g, &sc.coefficients, xi, t);
        error_rhs_into(g, self.cfg.gains().as_slice(), &self.est, &w, &self.x, r, xi, de);
        reference_rhs_into(g, r, xi, dr);
        self.cfg
            .estimator_rhs_into(g, &self.est, &self.x, r, &mut self.rate);
        dnode.copy_from_slice(&self.rate.node);
        dedge.copy_from_slice(&self.rate.edge);
    }
}

fn diverged(y: &[f64]) -> bool {
    y.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT)
}

/// One integrator step of the closed loop from `state`.
pub fn step(sc: &Scenario, state: &SimState, cfg: &SimConfig) -> Result<SimState, SimError> {
    cfg.validate()?;
    let layout = Layout::of(sc);
    let mut field = DirectField::new(sc);
    let mut stepper = Stepper::new(cfg.integrator, layout.dim());
    let mut y = layout.pack(&state.x, &state.r, &state.est);
    stepper.step(&mut field, state.t, &mut y, cfg.step);
    let t = state.t + cfg.step;
    let next = layout.unpack(&y, t, &state.est);
    if diverged(&y) {
        return Err(SimError::Divergence {
            t,
            partial: Box::new(Trajectory {
                rows: vec![TrajectoryRow::from(state)],
                final_state: next,
                steps: 1,
            }),
        });
    }
    Ok(next)
}

/// Integrates the scenario over `[0, T]`. Bit-for-bit deterministic.
pub fn run(sc: &Scenario, cfg: &SimConfig) -> Result<Trajectory, SimError> {
    sc.validate()?;
    cfg.validate()?;
    let layout = Layout::of(sc);
    let mut field = DirectField::new(sc);
    let mut stepper = Stepper::new(cfg.integrator, layout.dim());
    let init = sc.initial_state();
    let mut y = layout.pack(&init.x, &init.r, &init.est);
    let steps = cfg.steps();
    let mut rows = vec![TrajectoryRow::from(&init)];

    for k in 0..steps {
        let t = k as f64 * cfg.step;
        stepper.step(&mut field, t, &mut y, cfg.step);
        let t_next = (k + 1) as f64 * cfg.step;
        if diverged(&y) {
            return Err(SimError::Divergence {
                t: t_next,
                partial: Box::new(Trajectory {
                    rows,
                    final_state: layout.unpack(&y, t_next, &init.est),
                    steps: k + 1,
                }),
            });
        }
        if (k + 1) % cfg.stride == 0 {
            rows.push(TrajectoryRow::from(&layout.unpack(&y, t_next, &init.est)));
        }
    }
    Ok(Trajectory {
        rows,
        final_state: layout.unpack(&y, steps as f64 * cfg.step, &init.est),
        steps,
    })
}

/// Integrates the closed loop twice, once in `(x, r, w_hat)` coordinates and
/// once through the tracking-error form, and returns the sup-norm gap
/// between `x - r` from the first and `e` from the second over every step.
pub fn dual_run_consistency(sc: &Scenario, cfg: &SimConfig) -> Result<f64, SimError> {
    dual_run_consistency_with(sc, cfg, &true_weights)
}

/// As [`dual_run_consistency`], with the ideal weights used by the error
/// form supplied by the caller.
pub fn dual_run_consistency_with(
    sc: &Scenario,
    cfg: &SimConfig,
    weights: &WeightModel<'_>,
) -> Result<f64, SimError> {
    sc.validate()?;
    cfg.validate()?;
    let controller = sc
        .controller
        .as_ref()
        .ok_or(SimError::ControllerRequired("dual-run consistency"))?;
    let layout = Layout::of(sc);
    let n = layout.n;
    let mut direct = DirectField::new(sc);
    let mut error = ErrorField {
        sc,
        cfg: controller,
        weights,
        layout,
        est: EstimatorState::zeros(&sc.graph),
        rate: EstimatorState::zeros(&sc.graph),
        x: vec![0.0; n],
    };
    let mut s1 = Stepper::new(cfg.integrator, layout.dim());
    let mut s2 = Stepper::new(cfg.integrator, layout.dim());
    let init = sc.initial_state();
    let mut y1 = layout.pack(&init.x, &init.r, &init.est);
    let mut y2 = layout.pack(&init.error(), &init.r, &init.est);

    let gap = |y1: &[f64], y2: &[f64]| {
        (0..n)
            .map(|i| ((y1[i] - y1[n + i]) - y2[i]).abs())
            .fold(0.0, f64::max)
    };
    let mut worst = gap(&y1, &y2);
    for k in 0..cfg.steps() {
        let t = k as f64 * cfg.step;
        s1.step(&mut direct, t, &mut y1, cfg.step);
        s2.step(&mut error, t, &mut y2, cfg.step);
        let t_next = (k + 1) as f64 * cfg.step;
        for y in [&y1, &y2] {
            if diverged(y) {
                return Err(SimError::Divergence {
                    t: t_next,
                    partial: Box::new(Trajectory {
                        rows: Vec::new(),
                        final_state: layout.unpack(y, t_next, &init.est),
                        steps: k + 1,
                    }),
                });
            }
        }
        worst = worst.max(gap(&y1, &y2));
    }
    Ok(worst)
}
