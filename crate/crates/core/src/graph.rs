//! Undirected interaction graphs and their spectral objects.
//!
//! Node ids are 1-based everywhere in the public surface. Internally the
//! neighbor lists are stored in compressed-row form; every directed pair
//! `(i, j)` with `i ~ j` owns one *slot*, and per-edge quantities elsewhere in
//! the crate (coupling coefficients, edge estimates, learning rates) are
//! stored in slot order.

use std::collections::{BTreeSet, VecDeque};
use std::ops::Range;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("graph must have at least one node")]
    Empty,
    #[error("self-loop at node {node}")]
    SelfLoop { node: usize },
    #[error("duplicate edge ({i}, {j})")]
    DuplicateEdge { i: usize, j: usize },
    #[error("node id {node} out of range 1..={n}")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("graph is not connected")]
    Disconnected,
    #[error("gain vector has length {got}, expected {expected}")]
    GainLength { expected: usize, got: usize },
    #[error("gain k_{node} = {value} must be finite and nonnegative")]
    InvalidGain { node: usize, value: f64 },
    #[error("at least one gain must be strictly positive")]
    ZeroGain,
    #[error("vector has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Scale-aware threshold below which an eigenvalue is treated as zero.
pub fn zero_tolerance(n: usize) -> f64 {
    1e-10 * n.max(1) as f64
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphTopology {
    n: usize,
    /// Undirected edges, 0-based, `i < j`, sorted.
    edges: Vec<(usize, usize)>,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    /// Undirected edge index owning each directed slot.
    slot_edge: Vec<usize>,
}

impl GraphTopology {
    /// Builds a graph on nodes `1..=n` from 1-based unordered pairs.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut set = BTreeSet::new();
        for &(i, j) in edges {
            for node in [i, j] {
                if node == 0 || node > n {
                    return Err(GraphError::NodeOutOfRange { node, n });
                }
            }
            if i == j {
                return Err(GraphError::SelfLoop { node: i });
            }
            let key = (i.min(j) - 1, i.max(j) - 1);
            if !set.insert(key) {
                return Err(GraphError::DuplicateEdge { i, j });
            }
        }
        let edges: Vec<(usize, usize)> = set.into_iter().collect();

        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for (idx, &(a, b)) in edges.iter().enumerate() {
            adj[a].push((b, idx));
            adj[b].push((a, idx));
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::with_capacity(2 * edges.len());
        let mut slot_edge = Vec::with_capacity(2 * edges.len());
        offsets.push(0);
        for list in &mut adj {
            list.sort_unstable();
            for &(j, idx) in list.iter() {
                targets.push(j);
                slot_edge.push(idx);
            }
            offsets.push(targets.len());
        }
        Ok(Self {
            n,
            edges,
            offsets,
            targets,
            slot_edge,
        })
    }

    /// Path graph `1 - 2 - ... - n`.
    pub fn line(n: usize) -> Result<Self, GraphError> {
        let edges: Vec<_> = (1..n).map(|i| (i, i + 1)).collect();
        Self::new(n, &edges)
    }

    pub fn complete(n: usize) -> Result<Self, GraphError> {
        let mut edges = Vec::new();
        for i in 1..=n {
            for j in i + 1..=n {
                edges.push((i, j));
            }
        }
        Self::new(n, &edges)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Number of directed slots, i.e. twice the edge count.
    pub fn slot_count(&self) -> usize {
        self.targets.len()
    }

    /// Undirected edges as sorted 1-based pairs with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|&(a, b)| (a + 1, b + 1)).collect()
    }

    /// Directed pairs `(i, j)` in slot order, 1-based.
    pub fn directed_edges(&self) -> Vec<(usize, usize)> {
        (0..self.n)
            .flat_map(|i| self.slots(i).map(move |s| (i + 1, self.targets[s] + 1)))
            .collect()
    }

    /// Slot index of the directed pair `(i, j)` (1-based ids), if `i ~ j`.
    pub fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if i == 0 || j == 0 || i > self.n || j > self.n {
            return None;
        }
        let range = self.slots(i - 1);
        self.targets[range.clone()]
            .binary_search(&(j - 1))
            .ok()
            .map(|k| range.start + k)
    }

    /// Undirected edge index that owns a slot.
    pub fn slot_edge(&self, slot: usize) -> usize {
        self.slot_edge[slot]
    }

    pub fn degree(&self, i: usize) -> Result<usize, GraphError> {
        self.check_node(i)?;
        Ok(self.degree0(i - 1))
    }

    pub fn neighbors(&self, i: usize) -> Result<Vec<usize>, GraphError> {
        self.check_node(i)?;
        Ok(self.targets[self.slots(i - 1)].iter().map(|j| j + 1).collect())
    }

    pub fn are_adjacent(&self, i: usize, j: usize) -> bool {
        self.slot(i, j).is_some()
    }

    pub(crate) fn check_node(&self, i: usize) -> Result<(), GraphError> {
        if i == 0 || i > self.n {
            Err(GraphError::NodeOutOfRange { node: i, n: self.n })
        } else {
            Ok(())
        }
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<(), GraphError> {
        if len == self.n {
            Ok(())
        } else {
            Err(GraphError::DimensionMismatch {
                expected: self.n,
                got: len,
            })
        }
    }

    pub(crate) fn degree0(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub(crate) fn slots(&self, i: usize) -> Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    /// 0-based neighbor of a slot.
    pub(crate) fn target(&self, slot: usize) -> usize {
        self.targets[slot]
    }

    pub fn degree_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| {
            if i == j {
                self.degree0(i) as f64
            } else {
                0.0
            }
        })
    }

    pub fn adjacency(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for &(i, j) in &self.edges {
            a[(i, j)] = 1.0;
            a[(j, i)] = 1.0;
        }
        a
    }

    /// `L = D - A` in exact integer arithmetic, row-major.
    pub fn laplacian_int(&self) -> Vec<Vec<i64>> {
        let mut l = vec![vec![0i64; self.n]; self.n];
        for (i, row) in l.iter_mut().enumerate() {
            row[i] = self.degree0(i) as i64;
        }
        for &(i, j) in &self.edges {
            l[i][j] -= 1;
            l[j][i] -= 1;
        }
        l
    }

    pub fn laplacian(&self) -> DMatrix<f64> {
        self.degree_matrix() - self.adjacency()
    }

    /// Breadth-first reachability from node 1.
    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = queue.pop_front() {
            for s in self.slots(i) {
                let j = self.targets[s];
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    queue.push_back(j);
                }
            }
        }
        count == self.n
    }

    /// Laplacian eigenvalues in ascending order.
    pub fn laplacian_spectrum(&self) -> Vec<f64> {
        sorted_eigenvalues(self.laplacian())
    }

    /// Second-smallest Laplacian eigenvalue (0 for a single node).
    pub fn algebraic_connectivity(&self) -> f64 {
        self.laplacian_spectrum().get(1).copied().unwrap_or(0.0)
    }
}

fn sorted_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut values: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

/// Diagonal of the pinning-gain matrix `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix(Vec<f64>);

impl GainMatrix {
    pub fn new(k: Vec<f64>) -> Result<Self, GraphError> {
        for (idx, &value) in k.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(GraphError::InvalidGain {
                    node: idx + 1,
                    value,
                });
            }
        }
        Ok(Self(k))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn has_positive(&self) -> bool {
        self.0.iter().any(|&k| k > 0.0)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self, GraphError> {
        Self::new(self.0.iter().map(|k| k * factor).collect())
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.0))
    }
}

/// Positive-definiteness witness for `L + K`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lemma1Certificate {
    pub lambda_min: f64,
    pub positive_definite: bool,
    /// Unit eigenvector for `lambda_min`.
    pub eigenvector: Vec<f64>,
}

/// Smallest eigenvalue of `L + K` together with its eigenvector.
///
/// Requires a connected graph and at least one strictly positive gain; under
/// those hypotheses `L + K` is positive definite and hence nonsingular.
pub fn lemma1_certificate(
    g: &GraphTopology,
    k: &GainMatrix,
) -> Result<Lemma1Certificate, GraphError> {
    if k.len() != g.node_count() {
        return Err(GraphError::GainLength {
            expected: g.node_count(),
            got: k.len(),
        });
    }
    if !g.is_connected() {
        return Err(GraphError::Disconnected);
    }
    if !k.has_positive() {
        return Err(GraphError::ZeroGain);
    }
    let (lambda_min, eigenvector) = min_eigenpair(g.laplacian() + k.to_matrix());
    Ok(Lemma1Certificate {
        lambda_min,
        positive_definite: lambda_min > zero_tolerance(g.node_count()),
        eigenvector,
    })
}

/// `lambda_min(L + K)` without the hypothesis checks; used for diagnostics
/// and negative controls.
pub fn lambda_min_shifted(g: &GraphTopology, k: &GainMatrix) -> Result<f64, GraphError> {
    if k.len() != g.node_count() {
        return Err(GraphError::GainLength {
            expected: g.node_count(),
            got: k.len(),
        });
    }
    Ok(min_eigenpair(g.laplacian() + k.to_matrix()).0)
}

fn min_eigenpair(m: DMatrix<f64>) -> (f64, Vec<f64>) {
    let eig = SymmetricEigen::new(m);
    let (idx, &lambda) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty matrix");
    let v = eig.eigenvectors.column(idx);
    (lambda, v.iter().copied().collect())
}

/// `sum_{i~j} (x_i - x_j)^2 + sum_i k_i x_i^2`, the edge expansion of
/// `x' (L + K) x`.
pub fn quadratic_form_expansion(
    g: &GraphTopology,
    k: &GainMatrix,
    x: &[f64],
) -> Result<f64, GraphError> {
    g.check_len(x.len())?;
    if k.len() != g.node_count() {
        return Err(GraphError::GainLength {
            expected: g.node_count(),
            got: k.len(),
        });
    }
    let edges: f64 = g.edges.iter().map(|&(i, j)| (x[i] - x[j]).powi(2)).sum();
    let pins: f64 = k.as_slice().iter().zip(x).map(|(k, x)| k * x * x).sum();
    Ok(edges + pins)
}
