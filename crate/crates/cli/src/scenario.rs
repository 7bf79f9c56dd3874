//! Scenario files: TOML documents describing one closed-loop experiment.
//!
//! ```toml
//! name = "fig2c"
//! description = "antagonistic coupling, adaptive controller on"
//!
//! [graph]
//! nodes = 3
//! edges = [[1, 2], [2, 3]]
//!
//! [initial]
//! x0 = [0.2, 0.4, 1.2]
//! # r0 defaults to x0
//!
//! [coefficients]
//! alpha = [{ kind = "constant", value = 1.0 }, ...]
//! beta = [{ from = 1, to = 2, kind = "constant", value = -1.0 }, ...]
//!
//! [controller]            # omit, or enabled = false, for the open loop
//! gains = [5.0, 5.0, 0.0]
//! gamma_node = 5.0        # or one rate per node
//! gamma_edge = 5.0        # or [{ from, to, rate }]
//! theta_max = 10.0
//! epsilon = 0.1
//!
//! [sim]
//! step = 0.001
//! horizon = 15.0
//! integrator = "rk4"
//! stride = 10
//!
//! [reference]             # optional edge weights xi_ij
//! weights = [{ from = 1, to = 2, xi = 2.0 }]
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use adaptive_consensus::controller::ControllerConfig;
use adaptive_consensus::{
    CoefficientSignal, EstimatorState, GainMatrix, GraphTopology, Integrator, ProjectionBounds,
    ReferenceWeights, Scenario, SimConfig, UncertainCoefficients,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub graph: GraphSection,
    pub initial: InitialSection,
    pub coefficients: CoefficientSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controller: Option<ControllerSection>,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    pub nodes: usize,
    pub edges: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub x0: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSection {
    pub alpha: Vec<CoefficientSignal>,
    pub beta: Vec<BetaEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaEntry {
    pub from: usize,
    pub to: usize,
    #[serde(flatten)]
    pub signal: CoefficientSignal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NodeRates {
    Uniform(f64),
    PerNode(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EdgeRates {
    Uniform(f64),
    PerEdge(Vec<EdgeValue<RateField>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateField {
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValueField {
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeValue<T> {
    pub from: usize,
    pub to: usize,
    #[serde(flatten)]
    pub field: T,
}

fn default_true() -> bool {
    true
}

fn default_gamma() -> NodeRates {
    NodeRates::Uniform(5.0)
}

fn default_gamma_edge() -> EdgeRates {
    EdgeRates::Uniform(5.0)
}

fn default_theta_max() -> f64 {
    ProjectionBounds::default().theta_max()
}

fn default_epsilon() -> f64 {
    ProjectionBounds::default().epsilon()
}

fn is_true(b: &bool) -> bool {
    *b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    #[serde(default = "default_true", skip_serializing_if = "is_true")]
    pub enabled: bool,
    /// Defaults to `(5, 5, 0, ..., 0)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gains: Option<Vec<f64>>,
    #[serde(default = "default_gamma")]
    pub gamma_node: NodeRates,
    #[serde(default = "default_gamma_edge")]
    pub gamma_edge: EdgeRates,
    #[serde(default = "default_theta_max")]
    pub theta_max: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_node_estimates: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_edge_estimates: Option<Vec<EdgeValue<ValueField>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub step: f64,
    pub horizon: f64,
    pub integrator: Integrator,
    pub stride: usize,
}

impl Default for SimSection {
    fn default() -> Self {
        let d = SimConfig::default();
        Self {
            step: d.step,
            horizon: d.horizon,
            integrator: d.integrator,
            stride: d.stride,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSection {
    pub weights: Vec<WeightEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightEntry {
    pub from: usize,
    pub to: usize,
    pub xi: f64,
}

fn invalid(field: impl Into<String>, err: impl ToString) -> CliError {
    CliError::Validation {
        field: field.into(),
        message: err.to_string(),
    }
}

impl ScenarioFile {
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse {
            origin: origin.to_string(),
            message: e.to_string(),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario documents always serialize")
    }

    /// Builds and validates the in-memory scenario.
    pub fn build(&self) -> Result<Scenario, CliError> {
        let edges: Vec<(usize, usize)> = self.graph.edges.iter().map(|e| (e[0], e[1])).collect();
        let graph = GraphTopology::new(self.graph.nodes, &edges).map_err(|e| invalid("graph", e))?;
        if !graph.is_connected() {
            return Err(invalid("graph", "graph must be connected"));
        }
        let n = graph.node_count();

        let beta: BTreeMap<(usize, usize), CoefficientSignal> = self
            .coefficients
            .beta
            .iter()
            .map(|b| ((b.from, b.to), b.signal.clone()))
            .collect();
        if beta.len() != self.coefficients.beta.len() {
            return Err(invalid("coefficients.beta", "duplicate directed pair"));
        }
        let coefficients =
            UncertainCoefficients::new(&graph, self.coefficients.alpha.clone(), beta)
                .map_err(|e| invalid("coefficients", e))?;

        let x0 = self.initial.x0.clone();
        if x0.len() != n {
            return Err(invalid(
                "initial.x0",
                format!("expected {n} entries, got {}", x0.len()),
            ));
        }
        let r0 = self.initial.r0.clone().unwrap_or_else(|| x0.clone());
        if r0.len() != n {
            return Err(invalid(
                "initial.r0",
                format!("expected {n} entries, got {}", r0.len()),
            ));
        }

        let mut initial_estimates = EstimatorState::zeros(&graph);
        let controller = match &self.controller {
            Some(c) if c.enabled => {
                let (cfg, est) = build_controller(c, &graph)?;
                initial_estimates = est;
                Some(cfg)
            }
            _ => None,
        };

        let reference_weights = match &self.reference {
            Some(r) => {
                let mut map = BTreeMap::new();
                for w in &r.weights {
                    let key = (w.from.min(w.to), w.from.max(w.to));
                    if map.insert(key, w.xi).is_some() {
                        return Err(invalid("reference.weights", "duplicate edge"));
                    }
                }
                Some(
                    ReferenceWeights::new(&graph, &map)
                        .map_err(|e| invalid("reference.weights", e))?,
                )
            }
            None => None,
        };

        let sim = SimConfig {
            step: self.sim.step,
            horizon: self.sim.horizon,
            integrator: self.sim.integrator,
            stride: self.sim.stride,
        };
        sim.validate().map_err(|e| invalid("sim", e))?;

        let scenario = Scenario {
            name: self.name.clone(),
            graph,
            coefficients,
            x0,
            r0,
            controller,
            initial_estimates,
            reference_weights,
            sim,
        };
        scenario.validate().map_err(|e| invalid("scenario", e))?;
        Ok(scenario)
    }

    /// Inverse of [`ScenarioFile::build`].
    pub fn from_scenario(sc: &Scenario, description: &str) -> Self {
        let g = &sc.graph;
        let directed = g.directed_edges();
        let controller = sc.controller.as_ref().map(|c| {
            let node = c.gamma_node();
            let edge = c.gamma_edge();
            let uniform = node.iter().chain(edge).all(|v| *v == node[0]);
            ControllerSection {
                enabled: true,
                gains: Some(c.gains().as_slice().to_vec()),
                gamma_node: if uniform {
                    NodeRates::Uniform(node[0])
                } else {
                    NodeRates::PerNode(node.to_vec())
                },
                gamma_edge: if uniform {
                    EdgeRates::Uniform(node[0])
                } else {
                    EdgeRates::PerEdge(
                        directed
                            .iter()
                            .zip(edge)
                            .map(|(&(from, to), &rate)| EdgeValue {
                                from,
                                to,
                                field: RateField { rate },
                            })
                            .collect(),
                    )
                },
                theta_max: c.projection().theta_max(),
                epsilon: c.projection().epsilon(),
                initial_node_estimates: sc
                    .initial_estimates
                    .node
                    .iter()
                    .any(|v| *v != 0.0)
                    .then(|| sc.initial_estimates.node.clone()),
                initial_edge_estimates: sc
                    .initial_estimates
                    .edge
                    .iter()
                    .any(|v| *v != 0.0)
                    .then(|| {
                        directed
                            .iter()
                            .zip(&sc.initial_estimates.edge)
                            .map(|(&(from, to), &value)| EdgeValue {
                                from,
                                to,
                                field: ValueField { value },
                            })
                            .collect()
                    }),
            }
        });
        Self {
            name: sc.name.clone(),
            description: description.to_string(),
            graph: GraphSection {
                nodes: g.node_count(),
                edges: g.edges().into_iter().map(|(i, j)| [i, j]).collect(),
            },
            initial: InitialSection {
                x0: sc.x0.clone(),
                r0: (sc.r0 != sc.x0).then(|| sc.r0.clone()),
            },
            coefficients: CoefficientSection {
                alpha: sc.coefficients.alpha_signals().to_vec(),
                beta: sc
                    .coefficients
                    .beta_entries()
                    .map(|((from, to), s)| BetaEntry {
                        from,
                        to,
                        signal: s.clone(),
                    })
                    .collect(),
            },
            controller,
            sim: SimSection {
                step: sc.sim.step,
                horizon: sc.sim.horizon,
                integrator: sc.sim.integrator,
                stride: sc.sim.stride,
            },
            reference: sc.reference_weights.as_ref().and_then(|w| {
                let non_unit = w.non_unit(g);
                (!non_unit.is_empty()).then(|| ReferenceSection {
                    weights: non_unit
                        .into_iter()
                        .map(|((from, to), xi)| WeightEntry { from, to, xi })
                        .collect(),
                })
            }),
        }
    }
}

fn build_controller(
    c: &ControllerSection,
    g: &GraphTopology,
) -> Result<(ControllerConfig, EstimatorState), CliError> {
    let n = g.node_count();
    let gains = c
        .gains
        .clone()
        .unwrap_or_else(|| (0..n).map(|i| if i < 2 { 5.0 } else { 0.0 }).collect());
    let gains = GainMatrix::new(gains).map_err(|e| invalid("controller.gains", e))?;

    let gamma_node = match &c.gamma_node {
        NodeRates::Uniform(v) => vec![*v; n],
        NodeRates::PerNode(v) => v.clone(),
    };
    let gamma_edge = match &c.gamma_edge {
        EdgeRates::Uniform(v) => vec![*v; g.slot_count()],
        EdgeRates::PerEdge(list) => slot_values(g, list, "controller.gamma_edge", |f| f.rate)?,
    };
    let projection = ProjectionBounds::new(c.theta_max, c.epsilon)
        .map_err(|e| invalid("controller.theta_max/epsilon", e))?;
    let cfg = ControllerConfig::new(g, gains, gamma_node, gamma_edge, projection).map_err(|e| {
        let field = match &e {
            adaptive_consensus::controller::ControllerError::NoPositiveGain => "controller.gains",
            adaptive_consensus::controller::ControllerError::InvalidRate { what, .. } => {
                if *what == "gamma_node" {
                    "controller.gamma_node"
                } else {
                    "controller.gamma_edge"
                }
            }
            adaptive_consensus::controller::ControllerError::Length { what, .. } => match *what {
                "gains" => "controller.gains",
                "gamma_node" => "controller.gamma_node",
                _ => "controller.gamma_edge",
            },
            _ => "controller",
        };
        invalid(field, e)
    })?;

    let mut est = EstimatorState::zeros(g);
    if let Some(v) = &c.initial_node_estimates {
        if v.len() != n {
            return Err(invalid(
                "controller.initial_node_estimates",
                format!("expected {n} entries, got {}", v.len()),
            ));
        }
        est.node = v.clone();
    }
    if let Some(list) = &c.initial_edge_estimates {
        let mut edge = vec![0.0; g.slot_count()];
        for item in list {
            let slot = g.slot(item.from, item.to).ok_or_else(|| {
                invalid(
                    "controller.initial_edge_estimates",
                    format!("({}, {}) is not an edge", item.from, item.to),
                )
            })?;
            edge[slot] = item.field.value;
        }
        est.edge = edge;
    }
    Ok((cfg, est))
}

fn slot_values<T>(
    g: &GraphTopology,
    list: &[EdgeValue<T>],
    field: &str,
    get: impl Fn(&T) -> f64,
) -> Result<Vec<f64>, CliError> {
    let mut out = vec![f64::NAN; g.slot_count()];
    for item in list {
        let slot = g
            .slot(item.from, item.to)
            .ok_or_else(|| invalid(field, format!("({}, {}) is not an edge", item.from, item.to)))?;
        out[slot] = get(&item.field);
    }
    if let Some(pos) = out.iter().position(|v| v.is_nan()) {
        let (i, j) = g.directed_edges()[pos];
        return Err(invalid(field, format!("missing entry for ({i}, {j})")));
    }
    Ok(out)
}

/// A scenario shipped with the binary.
pub struct Bundled {
    pub name: &'static str,
    pub source: &'static str,
}

/// The eight figure scenarios: open loop `fig1a`-`fig1d` and adaptive
/// `fig2a`-`fig2d`.
pub const FIGURE_SUITE: [Bundled; 8] = [
    Bundled { name: "fig1a", source: include_str!("../scenarios/fig1a.toml") },
    Bundled { name: "fig1b", source: include_str!("../scenarios/fig1b.toml") },
    Bundled { name: "fig1c", source: include_str!("../scenarios/fig1c.toml") },
    Bundled { name: "fig1d", source: include_str!("../scenarios/fig1d.toml") },
    Bundled { name: "fig2a", source: include_str!("../scenarios/fig2a.toml") },
    Bundled { name: "fig2b", source: include_str!("../scenarios/fig2b.toml") },
    Bundled { name: "fig2c", source: include_str!("../scenarios/fig2c.toml") },
    Bundled { name: "fig2d", source: include_str!("../scenarios/fig2d.toml") },
];

/// Additional bundled scenarios outside the figure suite.
pub const EXTRAS: [Bundled; 1] = [Bundled {
    name: "tv2a",
    source: include_str!("../scenarios/tv2a.toml"),
}];

pub fn bundled(name: &str) -> Option<&'static Bundled> {
    FIGURE_SUITE.iter().chain(EXTRAS.iter()).find(|b| b.name == name)
}

/// Loads a scenario from a file path, falling back to a bundled name.
pub fn load_scenario_file(arg: &str) -> Result<ScenarioFile, CliError> {
    let path = Path::new(arg);
    if path.exists() {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        return ScenarioFile::parse(&text, arg);
    }
    match bundled(arg) {
        Some(b) => ScenarioFile::parse(b.source, b.name),
        None => Err(CliError::Io {
            path: arg.to_string(),
            message: "no such file or bundled scenario".into(),
        }),
    }
}

pub fn load_scenario(arg: &str) -> Result<Scenario, CliError> {
    load_scenario_file(arg)?.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_bundled_scenario_builds() {
        for b in FIGURE_SUITE.iter().chain(EXTRAS.iter()) {
            let sc = load_scenario(b.name).unwrap_or_else(|e| panic!("{}: {e}", b.name));
            assert_eq!(sc.name, b.name);
        }
    }

    #[test]
    fn fig1a_contents() {
        let sc = load_scenario("fig1a").unwrap();
        assert_eq!(sc.graph, GraphTopology::line(3).unwrap());
        assert_eq!(sc.x0, vec![0.2, 0.4, 1.2]);
        assert!(sc.controller.is_none());
        let alpha: Vec<f64> = (1..=3).map(|i| sc.coefficients.eval_alpha(i, 0.0).unwrap()).collect();
        assert_eq!(alpha, vec![1.0, 2.0, 1.0]);
        for (i, j) in [(1, 2), (2, 1), (2, 3), (3, 2)] {
            assert_eq!(sc.coefficients.eval_beta(i, j, 0.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn fig2c_contents() {
        let sc = load_scenario("fig2c").unwrap();
        let c = sc.controller.as_ref().unwrap();
        assert_eq!(c.gains().as_slice(), &[5.0, 5.0, 0.0]);
        assert!(c.gamma_node().iter().chain(c.gamma_edge()).all(|g| *g == 5.0));
        assert_eq!(sc.initial_estimates, EstimatorState::zeros(&sc.graph));
        assert_eq!(sc.coefficients.eval_beta(1, 2, 0.0).unwrap(), -1.0);
        assert_eq!(sc.coefficients.eval_beta(2, 1, 0.0).unwrap(), -1.0);
    }

    fn with_fig2a(edit: impl Fn(&mut ScenarioFile)) -> Result<Scenario, CliError> {
        let mut f = load_scenario_file("fig2a").unwrap();
        edit(&mut f);
        f.build()
    }

    fn field_of(r: Result<Scenario, CliError>) -> String {
        match r {
            Err(CliError::Validation { field, .. }) => field,
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn validation_errors_name_the_field() {
        assert_eq!(
            field_of(with_fig2a(|f| f.controller.as_mut().unwrap().gains = Some(vec![0.0; 3]))),
            "controller.gains"
        );
        assert_eq!(
            field_of(with_fig2a(|f| f.controller.as_mut().unwrap().gamma_node = NodeRates::Uniform(-1.0))),
            "controller.gamma_node"
        );
        assert_eq!(field_of(with_fig2a(|f| f.sim.step = 0.0)), "sim");
        assert_eq!(field_of(with_fig2a(|f| f.graph.edges = vec![[1, 2]])), "graph");
        assert_eq!(field_of(with_fig2a(|f| f.initial.x0.pop().map(|_| ()).unwrap())), "initial.x0");
        assert_eq!(
            field_of(with_fig2a(|f| f.coefficients.beta.pop().map(|_| ()).unwrap())),
            "coefficients"
        );
    }

    #[test]
    fn disabled_controller_may_have_zero_gains() {
        let sc = with_fig2a(|f| {
            let c = f.controller.as_mut().unwrap();
            c.enabled = false;
            c.gains = Some(vec![0.0; 3]);
        })
        .unwrap();
        assert!(sc.controller.is_none());
    }

    #[test]
    fn parse_errors_are_reported() {
        assert!(matches!(
            ScenarioFile::parse("name = 3", "inline"),
            Err(CliError::Parse { .. })
        ));
        assert!(matches!(
            load_scenario("definitely-not-a-scenario"),
            Err(CliError::Io { .. })
        ));
    }
}
