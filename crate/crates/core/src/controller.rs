//! Distributed adaptive consensus controller.
//!
//! Each agent applies
//!
//! ```text
//! u_i = -k_i (x_i - r_i) - w_hat_i x_i - sum_{i~j} w_hat_ij x_j
//! ```
//!
//! and adapts its estimates with projected gradient laws
//!
//! ```text
//! w_hat_i'  = gamma_i  Proj(w_hat_i,  x_i (x_i - r_i))
//! w_hat_ij' = gamma_ij Proj(w_hat_ij, x_j (x_i - r_i))
//! ```
//!
//! so agent `i` reads only its own state and reference, its neighbors'
//! states, and the estimates it owns.

use std::fmt;

use thiserror::Error;

use crate::graph::{GainMatrix, GraphError, GraphTopology};
use crate::plant::{check_dim, PlantError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControllerError {
    #[error("at least one feedback gain k_i must be positive")]
    NoPositiveGain,
    #[error("{what} has length {got}, expected {expected}")]
    Length {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("learning rate {what}[{index}] = {value} must be positive and finite")]
    InvalidRate {
        what: &'static str,
        index: usize,
        value: f64,
    },
    #[error("projection bound theta_max = {0} must be positive and finite")]
    InvalidThetaMax(f64),
    #[error("projection width epsilon = {0} must lie in (0, 1)")]
    InvalidEpsilon(f64),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Parameters of the smooth scalar projection operator.
///
/// The convex indicator is `f(theta) = (theta^2 - theta_max^2) /
/// (epsilon * theta_max^2)`; estimates starting in `|theta| <= theta_max`
/// remain in `{f <= 1} = {|theta| <= theta_max * sqrt(1 + epsilon)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionBounds {
    theta_max: f64,
    epsilon: f64,
}

impl ProjectionBounds {
    pub fn new(theta_max: f64, epsilon: f64) -> Result<Self, ControllerError> {
        if !(theta_max.is_finite() && theta_max > 0.0) {
            return Err(ControllerError::InvalidThetaMax(theta_max));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(ControllerError::InvalidEpsilon(epsilon));
        }
        Ok(Self { theta_max, epsilon })
    }

    pub fn theta_max(&self) -> f64 {
        self.theta_max
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `theta_max * sqrt(1 + epsilon)`, the radius of the invariant set.
    pub fn outer_radius(&self) -> f64 {
        self.theta_max * (1.0 + self.epsilon).sqrt()
    }

    pub fn indicator(&self, theta: f64) -> f64 {
        let m2 = self.theta_max * self.theta_max;
        (theta * theta - m2) / (self.epsilon * m2)
    }

    pub fn indicator_gradient(&self, theta: f64) -> f64 {
        2.0 * theta / (self.epsilon * self.theta_max * self.theta_max)
    }

    pub fn apply(&self, theta: f64, y: f64) -> f64 {
        let f = self.indicator(theta);
        if f < 0.0 || self.indicator_gradient(theta) * y <= 0.0 {
            y
        } else {
            y * (1.0 - f)
        }
    }
}

impl Default for ProjectionBounds {
    fn default() -> Self {
        Self {
            theta_max: 10.0,
            epsilon: 0.1,
        }
    }
}

pub fn proj(theta: f64, y: f64, theta_max: f64, epsilon: f64) -> Result<f64, ControllerError> {
    Ok(ProjectionBounds::new(theta_max, epsilon)?.apply(theta, y))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerConfig {
    gains: GainMatrix,
    gamma_node: Vec<f64>,
    /// Slot order.
    gamma_edge: Vec<f64>,
    projection: ProjectionBounds,
}

impl ControllerConfig {
    pub fn new(
        g: &GraphTopology,
        gains: GainMatrix,
        gamma_node: Vec<f64>,
        gamma_edge: Vec<f64>,
        projection: ProjectionBounds,
    ) -> Result<Self, ControllerError> {
        let lengths = [
            ("gains", g.node_count(), gains.len()),
            ("gamma_node", g.node_count(), gamma_node.len()),
            ("gamma_edge", g.slot_count(), gamma_edge.len()),
        ];
        for (what, expected, got) in lengths {
            if expected != got {
                return Err(ControllerError::Length {
                    what,
                    expected,
                    got,
                });
            }
        }
        if !gains.has_positive() {
            return Err(ControllerError::NoPositiveGain);
        }
        for (what, rates) in [("gamma_node", &gamma_node), ("gamma_edge", &gamma_edge)] {
            if let Some((index, &value)) = rates
                .iter()
                .enumerate()
                .find(|(_, v)| !(v.is_finite() && **v > 0.0))
            {
                return Err(ControllerError::InvalidRate { what, index, value });
            }
        }
        Ok(Self {
            gains,
            gamma_node,
            gamma_edge,
            projection,
        })
    }

    /// One learning rate shared by every node and edge estimate.
    pub fn uniform(
        g: &GraphTopology,
        gains: Vec<f64>,
        gamma: f64,
        projection: ProjectionBounds,
    ) -> Result<Self, ControllerError> {
        Self::new(
            g,
            GainMatrix::new(gains)?,
            vec![gamma; g.node_count()],
            vec![gamma; g.slot_count()],
            projection,
        )
    }

    /// Gains `(5, 5, 0, ..., 0)` with every learning rate 5 and the default
    /// projection bounds.
    pub fn default_for(g: &GraphTopology) -> Result<Self, ControllerError> {
        let gains = (0..g.node_count())
            .map(|i| if i < 2 { 5.0 } else { 0.0 })
            .collect();
        Self::uniform(g, gains, 5.0, ProjectionBounds::default())
    }

    pub fn gains(&self) -> &GainMatrix {
        &self.gains
    }

    pub fn gamma_node(&self) -> &[f64] {
        &self.gamma_node
    }

    pub fn gamma_edge(&self) -> &[f64] {
        &self.gamma_edge
    }

    pub fn projection(&self) -> ProjectionBounds {
        self.projection
    }

    pub fn with_gains_scaled(&self, factor: f64) -> Result<Self, ControllerError> {
        let mut out = self.clone();
        out.gains = self.gains.scaled(factor)?;
        if !out.gains.has_positive() {
            return Err(ControllerError::NoPositiveGain);
        }
        Ok(out)
    }

    pub fn with_rates_scaled(&self, factor: f64) -> Result<Self, ControllerError> {
        let mut out = self.clone();
        out.gamma_node.iter_mut().for_each(|g| *g *= factor);
        out.gamma_edge.iter_mut().for_each(|g| *g *= factor);
        for (what, rates) in [("gamma_node", &out.gamma_node), ("gamma_edge", &out.gamma_edge)] {
            if let Some((index, &value)) = rates
                .iter()
                .enumerate()
                .find(|(_, v)| !(v.is_finite() && **v > 0.0))
            {
                return Err(ControllerError::InvalidRate { what, index, value });
            }
        }
        Ok(out)
    }
}

/// Per-agent parameter estimates. `node[i]` belongs to agent `i`; `edge[s]`
/// belongs to the source agent of slot `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    pub node: Vec<f64>,
    pub edge: Vec<f64>,
}

impl EstimatorState {
    pub fn zeros(g: &GraphTopology) -> Self {
        Self {
            node: vec![0.0; g.node_count()],
            edge: vec![0.0; g.slot_count()],
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.node
            .iter()
            .chain(&self.edge)
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    fn check(&self, g: &GraphTopology) -> Result<(), PlantError> {
        check_dim("node estimates", g.node_count(), self.node.len())?;
        check_dim("edge estimates", g.slot_count(), self.edge.len())
    }
}

/// A per-agent feedback law over the network. The distributedness audit is
/// written against this trait so it can be pointed at other laws.
pub trait DistributedLaw {
    fn control_into(
        &self,
        g: &GraphTopology,
        est: &EstimatorState,
        x: &[f64],
        r: &[f64],
        u: &mut [f64],
    );

    fn estimator_rhs_into(
        &self,
        g: &GraphTopology,
        est: &EstimatorState,
        x: &[f64],
        r: &[f64],
        rate: &mut EstimatorState,
    );
}

impl DistributedLaw for ControllerConfig {
    fn control_into(
        &self,
        g: &GraphTopology,
        est: &EstimatorState,
        x: &[f64],
        r: &[f64],
        u: &mut [f64],
    ) {
        let k = self.gains.as_slice();
        for (i, out) in u.iter_mut().enumerate() {
            let coupling: f64 = g.slots(i).map(|s| est.edge[s] * x[g.target(s)]).sum();
            *out = -k[i] * (x[i] - r[i]) - est.node[i] * x[i] - coupling;
        }
    }

    fn estimator_rhs_into(
        &self,
        g: &GraphTopology,
        est: &EstimatorState,
        x: &[f64],
        r: &[f64],
        rate: &mut EstimatorState,
    ) {
        let p = self.projection;
        for i in 0..g.node_count() {
            let e = x[i] - r[i];
            rate.node[i] = self.gamma_node[i] * p.apply(est.node[i], x[i] * e);
            for s in g.slots(i) {
                rate.edge[s] = self.gamma_edge[s] * p.apply(est.edge[s], x[g.target(s)] * e);
            }
        }
    }
}

pub fn control_input(
    cfg: &ControllerConfig,
    est: &EstimatorState,
    g: &GraphTopology,
    x: &[f64],
    r: &[f64],
) -> Result<Vec<f64>, PlantError> {
    check_dim("gains", g.node_count(), cfg.gains.len())?;
    est.check(g)?;
    check_dim("x", g.node_count(), x.len())?;
    check_dim("r", g.node_count(), r.len())?;
    let mut u = vec![0.0; g.node_count()];
    cfg.control_into(g, est, x, r, &mut u);
    Ok(u)
}

pub fn estimator_rhs(
    cfg: &ControllerConfig,
    est: &EstimatorState,
    g: &GraphTopology,
    x: &[f64],
    r: &[f64],
) -> Result<EstimatorState, PlantError> {
    check_dim("gains", g.node_count(), cfg.gains.len())?;
    est.check(g)?;
    check_dim("x", g.node_count(), x.len())?;
    check_dim("r", g.node_count(), r.len())?;
    let mut rate = EstimatorState::zeros(g);
    cfg.estimator_rhs_into(g, est, x, r, &mut rate);
    Ok(rate)
}

/// Input to a law that an agent might read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataSource {
    State(usize),
    Reference(usize),
    NodeEstimate(usize),
    EdgeEstimate(usize, usize),
}

impl fmt::Display for DataSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::State(m) => write!(f, "x_{m}"),
            Self::Reference(m) => write!(f, "r_{m}"),
            Self::NodeEstimate(m) => write!(f, "w_hat_{m}"),
            Self::EdgeEstimate(a, b) => write!(f, "w_hat_{a}{b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditViolation {
    /// 1-based agent whose law read `source`.
    pub agent: usize,
    pub output: &'static str,
    pub source: DataSource,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AuditReport {
    pub probes: usize,
    pub violations: Vec<AuditViolation>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            return write!(f, "distributed: {} probes, no violations", self.probes);
        }
        writeln!(f, "NOT distributed: {} violation(s)", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  agent {} {} reads {}", v.agent, v.output, v.source)?;
        }
        Ok(())
    }
}

struct Probe {
    x: Vec<f64>,
    r: Vec<f64>,
    est: EstimatorState,
}

impl Probe {
    fn base(g: &GraphTopology, variant: usize) -> Self {
        let n = g.node_count();
        let v = variant as f64;
        let x = (0..n)
            .map(|m| 0.31 + 0.173 * m as f64 + 0.047 * (m * m) as f64 + 0.5 * v)
            .collect();
        let r = (0..n)
            .map(|m| -0.29 + 0.061 * m as f64 - 0.013 * (m * m) as f64 - 0.25 * v)
            .collect();
        let est = EstimatorState {
            node: (0..n).map(|m| 0.11 * m as f64 - 0.37 + 0.2 * v).collect(),
            edge: (0..g.slot_count())
                .map(|s| 0.07 * s as f64 - 0.23 + 0.1 * v)
                .collect(),
        };
        Self { x, r, est }
    }

    /// Agent-owned outputs of the law: `u_i`, `w_hat_i'`, `w_hat_ij'`.
    fn outputs<L: DistributedLaw + ?Sized>(
        &self,
        law: &L,
        g: &GraphTopology,
    ) -> (Vec<f64>, EstimatorState) {
        let mut u = vec![0.0; g.node_count()];
        let mut rate = EstimatorState::zeros(g);
        law.control_into(g, &self.est, &self.x, &self.r, &mut u);
        law.estimator_rhs_into(g, &self.est, &self.x, &self.r, &mut rate);
        (u, rate)
    }
}

/// Checks that every agent's control and update laws ignore data that a
/// distributed agent cannot see: states of non-neighbors, other agents'
/// reference signals, and estimates owned by other agents.
///
/// Each candidate source is perturbed in isolation from two generic base
/// points and the agent-owned outputs are compared bit-for-bit.
pub fn distributedness_audit<L: DistributedLaw + ?Sized>(law: &L, g: &GraphTopology) -> AuditReport {
    let n = g.node_count();
    let mut report = AuditReport::default();
    const DELTA: f64 = 0.731;

    for variant in 0..2 {
        let base = Probe::base(g, variant);
        let (u0, rate0) = base.outputs(law, g);

        let mut sources: Vec<(DataSource, usize)> = Vec::new();
        for m in 0..n {
            sources.push((DataSource::State(m + 1), m));
            sources.push((DataSource::Reference(m + 1), m));
            sources.push((DataSource::NodeEstimate(m + 1), m));
            for s in g.slots(m) {
                sources.push((DataSource::EdgeEstimate(m + 1, g.target(s) + 1), s));
            }
        }

        for (source, index) in sources {
            let mut probe = Probe::base(g, variant);
            match source {
                DataSource::State(_) => probe.x[index] += DELTA,
                DataSource::Reference(_) => probe.r[index] += DELTA,
                DataSource::NodeEstimate(_) => probe.est.node[index] += DELTA,
                DataSource::EdgeEstimate(..) => probe.est.edge[index] += DELTA,
            }
            let (u1, rate1) = probe.outputs(law, g);
            report.probes += 1;

            for i in 0..n {
                let agent = i + 1;
                let visible = match source {
                    DataSource::State(m) => m == agent || g.are_adjacent(agent, m),
                    DataSource::Reference(m) | DataSource::NodeEstimate(m) => m == agent,
                    DataSource::EdgeEstimate(a, _) => a == agent,
                };
                if visible {
                    continue;
                }
                let mut record = |output: &'static str| {
                    let v = AuditViolation {
                        agent,
                        output,
                        source,
                    };
                    if !report.violations.contains(&v) {
                        report.violations.push(v);
                    }
                };
                if u1[i].to_bits() != u0[i].to_bits() {
                    record("control");
                }
                if rate1.node[i].to_bits() != rate0.node[i].to_bits() {
                    record("node update");
                }
                if g
                    .slots(i)
                    .any(|s| rate1.edge[s].to_bits() != rate0.edge[s].to_bits())
                {
                    record("edge update");
                }
            }
        }
    }
    report
}
