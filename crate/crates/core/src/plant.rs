//! Continuous-time vector fields of the uncertain agents, the Laplacian
//! reference model, and the tracking-error dynamics.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::controller::EstimatorState;
use crate::graph::{GainMatrix, GraphError, GraphTopology};
use crate::uncertainty::UncertainCoefficients;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlantError {
    #[error("{what} has length {got}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("reference weight on ({0}, {1}): not an edge")]
    WeightNotAnEdge(usize, usize),
    #[error("reference weight on ({i}, {j}) = {value} must be positive and finite")]
    InvalidWeight { i: usize, j: usize, value: f64 },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub(crate) fn check_dim(what: &'static str, expected: usize, got: usize) -> Result<(), PlantError> {
    if expected == got {
        Ok(())
    } else {
        Err(PlantError::DimensionMismatch {
            what,
            expected,
            got,
        })
    }
}

/// Symmetric positive edge weights `xi_ij` for the weighted reference
/// model. The diagonal `xi_ii` is always the row sum and never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceWeights {
    per_edge: Vec<f64>,
}

impl ReferenceWeights {
    /// Unit weights; reproduces the unweighted Laplacian.
    pub fn unit(g: &GraphTopology) -> Self {
        Self {
            per_edge: vec![1.0; g.edge_count()],
        }
    }

    /// Weights keyed by unordered 1-based pairs; unlisted edges get 1.
    pub fn new(g: &GraphTopology, weights: &BTreeMap<(usize, usize), f64>) -> Result<Self, PlantError> {
        let mut out = Self::unit(g);
        for (&(i, j), &value) in weights {
            let slot = g.slot(i, j).ok_or(PlantError::WeightNotAnEdge(i, j))?;
            if !value.is_finite() || value <= 0.0 {
                return Err(PlantError::InvalidWeight { i, j, value });
            }
            out.per_edge[g.slot_edge(slot)] = value;
        }
        Ok(out)
    }

    /// Weight of an unordered edge, 1-based ids.
    pub fn get(&self, g: &GraphTopology, i: usize, j: usize) -> Option<f64> {
        g.slot(i, j).map(|s| self.per_edge[g.slot_edge(s)])
    }

    pub(crate) fn at_slot(&self, g: &GraphTopology, slot: usize) -> f64 {
        self.per_edge[g.slot_edge(slot)]
    }

    /// `xi_ii = sum_{i~j} xi_ij`, 1-based id.
    pub fn diagonal(&self, g: &GraphTopology, i: usize) -> Result<f64, GraphError> {
        g.check_node(i)?;
        Ok(g.slots(i - 1).map(|s| self.at_slot(g, s)).sum())
    }

    /// Undirected edges (1-based) whose weight differs from 1.
    pub fn non_unit(&self, g: &GraphTopology) -> BTreeMap<(usize, usize), f64> {
        g.edges()
            .into_iter()
            .zip(&self.per_edge)
            .filter(|(_, &w)| w != 1.0)
            .map(|(e, &w)| (e, w))
            .collect()
    }
}

fn xi_at(g: &GraphTopology, xi: Option<&ReferenceWeights>, slot: usize) -> f64 {
    xi.map_or(1.0, |w| w.at_slot(g, slot))
}

/// The ideal weights `w_i = d_i - alpha_i` and `w_ij = beta_ij - 1` (with
/// `xi` in place of unit weights when the reference model is weighted).
#[derive(Debug, Clone, PartialEq)]
pub struct TrueWeights {
    pub node: Vec<f64>,
    /// Slot order.
    pub edge: Vec<f64>,
}

pub fn true_weights(
    g: &GraphTopology,
    coeff: &UncertainCoefficients,
    xi: Option<&ReferenceWeights>,
    t: f64,
) -> TrueWeights {
    let n = g.node_count();
    let mut node = Vec::with_capacity(n);
    let mut edge = vec![0.0; g.slot_count()];
    for i in 0..n {
        let mut d = 0.0;
        for s in g.slots(i) {
            let w = xi_at(g, xi, s);
            d += w;
            edge[s] = coeff.beta_at_slot(s, t) - w;
        }
        node.push(d - coeff.alpha_at(i, t));
    }
    TrueWeights { node, edge }
}

/// `x_i' = -alpha_i(t) x_i + sum_{i~j} beta_ij(t) x_j + u_i`.
pub fn plant_rhs(
    g: &GraphTopology,
    coeff: &UncertainCoefficients,
    x: &[f64],
    u: &[f64],
    t: f64,
) -> Result<Vec<f64>, PlantError> {
    let n = g.node_count();
    check_dim("coefficients", n, coeff.node_count())?;
    check_dim("x", n, x.len())?;
    check_dim("u", n, u.len())?;
    let mut dx = vec![0.0; n];
    plant_rhs_into(g, coeff, x, u, t, &mut dx);
    Ok(dx)
}

pub(crate) fn plant_rhs_into(
    g: &GraphTopology,
    coeff: &UncertainCoefficients,
    x: &[f64],
    u: &[f64],
    t: f64,
    dx: &mut [f64],
) {
    for (i, out) in dx.iter_mut().enumerate() {
        let coupling: f64 = g
            .slots(i)
            .map(|s| coeff.beta_at_slot(s, t) * x[g.target(s)])
            .sum();
        *out = -coeff.alpha_at(i, t) * x[i] + coupling + u[i];
    }
}

/// `r_i' = -sum_{i~j} xi_ij (r_i - r_j)`, i.e. `-L r` for unit weights.
pub fn reference_rhs(
    g: &GraphTopology,
    r: &[f64],
    xi: Option<&ReferenceWeights>,
) -> Result<Vec<f64>, PlantError> {
    check_dim("r", g.node_count(), r.len())?;
    let mut dr = vec![0.0; r.len()];
    reference_rhs_into(g, r, xi, &mut dr);
    Ok(dr)
}

pub(crate) fn reference_rhs_into(
    g: &GraphTopology,
    r: &[f64],
    xi: Option<&ReferenceWeights>,
    dr: &mut [f64],
) {
    for (i, out) in dr.iter_mut().enumerate() {
        *out = -g
            .slots(i)
            .map(|s| xi_at(g, xi, s) * (r[i] - r[g.target(s)]))
            .sum::<f64>();
    }
}

/// Consensus value the reference model converges to: the mean of `x0`.
pub fn reference_fixed_point(x0: &[f64]) -> f64 {
    if x0.is_empty() {
        return 0.0;
    }
    x0.iter().sum::<f64>() / x0.len() as f64
}

/// Tracking-error dynamics written in terms of the estimation errors
/// `w_hat - w`:
///
/// `e_i' = -k_i e_i - sum_{i~j} xi_ij (e_i - e_j) - (w_hat_i - w_i) x_i
///         - sum_{i~j} (w_hat_ij - w_ij) x_j`
///
/// with `e = x - r`. Along any state this equals the closed-loop plant
/// field under the adaptive input minus the reference field.
#[allow(clippy::too_many_arguments)]
pub fn error_rhs(
    g: &GraphTopology,
    coeff: &UncertainCoefficients,
    gains: &GainMatrix,
    est: &EstimatorState,
    x: &[f64],
    r: &[f64],
    xi: Option<&ReferenceWeights>,
    t: f64,
) -> Result<Vec<f64>, PlantError> {
    let n = g.node_count();
    check_dim("coefficients", n, coeff.node_count())?;
    check_dim("gains", n, gains.len())?;
    check_dim("node estimates", n, est.node.len())?;
    check_dim("edge estimates", g.slot_count(), est.edge.len())?;
    check_dim("x", n, x.len())?;
    check_dim("r", n, r.len())?;
    let w = true_weights(g, coeff, xi, t);
    let mut de = vec![0.0; n];
    error_rhs_into(g, gains.as_slice(), est, &w, x, r, xi, &mut de);
    Ok(de)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn error_rhs_into(
    g: &GraphTopology,
    k: &[f64],
    est: &EstimatorState,
    w: &TrueWeights,
    x: &[f64],
    r: &[f64],
    xi: Option<&ReferenceWeights>,
    de: &mut [f64],
) {
    for (i, out) in de.iter_mut().enumerate() {
        let ei = x[i] - r[i];
        let mut acc = -k[i] * ei - (est.node[i] - w.node[i]) * x[i];
        for s in g.slots(i) {
            let j = g.target(s);
            let ej = x[j] - r[j];
            acc -= xi_at(g, xi, s) * (ei - ej);
            acc -= (est.edge[s] - w.edge[s]) * x[j];
        }
        *out = acc;
    }
}

/// Ground-truth comparators that need the unknown coefficients.
///
/// Nothing here is available to an implementable controller; these exist so
/// the adaptive law can be checked against the input it is trying to
/// reproduce.
pub mod oracle {
    use super::*;

    /// `u_i = -(d_i - alpha_i) x_i + sum_{i~j} (1 - beta_ij) x_j`, the input
    /// that turns the uncertain plant into the reference model exactly.
    pub fn ideal_control(
        g: &GraphTopology,
        coeff: &UncertainCoefficients,
        x: &[f64],
        xi: Option<&ReferenceWeights>,
        t: f64,
    ) -> Result<Vec<f64>, PlantError> {
        let n = g.node_count();
        check_dim("coefficients", n, coeff.node_count())?;
        check_dim("x", n, x.len())?;
        let w = true_weights(g, coeff, xi, t);
        Ok((0..n)
            .map(|i| {
                -w.node[i] * x[i] - g.slots(i).map(|s| w.edge[s] * x[g.target(s)]).sum::<f64>()
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> GraphTopology {
        GraphTopology::line(3).unwrap()
    }

    fn case(alpha: [f64; 3], beta: [f64; 4]) -> UncertainCoefficients {
        UncertainCoefficients::constant(&line(), &alpha, &beta).unwrap()
    }

    const X0: [f64; 3] = [0.2, 0.4, 1.2];

    #[test]
    fn plant_case_a_and_c() {
        let g = line();
        let a = case([1.0, 2.0, 1.0], [1.0; 4]);
        let dx = plant_rhs(&g, &a, &X0, &[0.0; 3], 0.0).unwrap();
        assert!((dx[0] - 0.2).abs() < 1e-15);
        let c = case([1.0, 2.0, 1.0], [-1.0, -1.0, 1.0, 1.0]);
        let dx = plant_rhs(&g, &c, &X0, &[0.0; 3], 0.0).unwrap();
        assert!((dx[0] + 0.6).abs() < 1e-15);
    }

    #[test]
    fn plant_consensus_equilibrium() {
        let g = line();
        let a = case([1.0, 2.0, 1.0], [1.0; 4]);
        let dx = plant_rhs(&g, &a, &[0.7; 3], &[0.0; 3], 5.0).unwrap();
        assert!(dx.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn plant_dimension_mismatch() {
        let g = line();
        let a = case([1.0, 2.0, 1.0], [1.0; 4]);
        assert!(matches!(
            plant_rhs(&g, &a, &[0.0; 2], &[0.0; 3], 0.0),
            Err(PlantError::DimensionMismatch { what: "x", .. })
        ));
    }

    #[test]
    fn reference_examples() {
        let g = line();
        assert!(reference_rhs(&g, &[0.3; 3], None)
            .unwrap()
            .iter()
            .all(|v| *v == 0.0));
        let dr = reference_rhs(&g, &X0, None).unwrap();
        let expected = [0.2, 0.6, -0.8];
        for (a, b) in dr.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        let mut w = BTreeMap::new();
        w.insert((1, 2), 2.0);
        let xi = ReferenceWeights::new(&g, &w).unwrap();
        assert_eq!(xi.diagonal(&g, 2).unwrap(), 3.0);
        let dr = reference_rhs(&g, &[0.0, 1.0, 0.0], Some(&xi)).unwrap();
        assert_eq!(dr, vec![2.0, -3.0, 1.0]);
    }

    #[test]
    fn reference_weight_validation() {
        let g = line();
        let mut w = BTreeMap::new();
        w.insert((1, 3), 2.0);
        assert_eq!(
            ReferenceWeights::new(&g, &w),
            Err(PlantError::WeightNotAnEdge(1, 3))
        );
        let mut w = BTreeMap::new();
        w.insert((2, 1), 0.0);
        assert!(ReferenceWeights::new(&g, &w).is_err());
    }

    #[test]
    fn fixed_point_is_mean() {
        assert!((reference_fixed_point(&X0) - 0.6).abs() < 1e-15);
        assert_eq!(reference_fixed_point(&[2.5; 4]), 2.5);
        assert_eq!(reference_fixed_point(&[-1.0, 1.0]), 0.0);
    }

    #[test]
    fn ideal_control_examples() {
        let g = line();
        let a = case([1.0, 2.0, 1.0], [1.0; 4]);
        let u = oracle::ideal_control(&g, &a, &X0, None, 0.0).unwrap();
        assert_eq!(u, vec![0.0; 3]);

        let d = case([1.0, 1.5, 1.0], [1.0; 4]);
        let u = oracle::ideal_control(&g, &d, &X0, None, 0.0).unwrap();
        assert!((u[1] + 0.5 * X0[1]).abs() < 1e-15);

        let c = case([1.0, 2.0, 1.0], [-1.0, -1.0, 1.0, 1.0]);
        let u = oracle::ideal_control(&g, &c, &X0, None, 0.0).unwrap();
        assert!((u[0] - 2.0 * X0[1]).abs() < 1e-15);
    }

    #[test]
    fn error_rhs_with_exact_estimates() {
        let g = line();
        let b = case([1.0, 1.1, 1.0], [1.0, 0.1, 1.0, 1.0]);
        let w = true_weights(&g, &b, None, 0.0);
        let est = EstimatorState {
            node: w.node.clone(),
            edge: w.edge.clone(),
        };
        let k = GainMatrix::new(vec![5.0, 5.0, 0.0]).unwrap();
        let de = error_rhs(&g, &b, &k, &est, &X0, &X0, None, 0.0).unwrap();
        assert!(de.iter().all(|v| v.abs() < 1e-15));

        let r = [0.0, 0.1, 0.5];
        let e: Vec<f64> = X0.iter().zip(r).map(|(x, r)| x - r).collect();
        let de = error_rhs(&g, &b, &k, &est, &X0, &r, None, 0.0).unwrap();
        let lk = g.laplacian() + k.to_matrix();
        for i in 0..3 {
            let expected: f64 = -(0..3).map(|j| lk[(i, j)] * e[j]).sum::<f64>();
            assert!((de[i] - expected).abs() < 1e-14);
        }
    }
}
