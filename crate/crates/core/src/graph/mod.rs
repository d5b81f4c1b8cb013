//! Communication graphs, time-varying graph sequences and the weight
//! matrices built on top of them.

use std::collections::BTreeSet;

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

mod connectivity;
mod spectral;
mod weights;

pub use connectivity::{b_connectivity_check, ConnectivityReport};
pub use spectral::{second_eigenvalue_modulus, stationary_distribution};
pub use weights::{
    lazy_metropolis_weights, metropolis_weights, validate_weight_schedule, WeightReport, WeightSchedule, WeightScheme,
    WeightViolation, WeightViolationKind,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("edge ({from}, {to}) references a node outside 0..{n}")]
    NodeOutOfRange { from: usize, to: usize, n: usize },
    #[error("self-loop at node {0}; diagonal mass belongs to the weight matrix")]
    SelfLoop(usize),
    #[error("operation requires an undirected graph")]
    Directed,
    #[error("graph sequence is empty")]
    EmptySequence,
    #[error("graphs in a sequence must share the node count ({expected} vs {found})")]
    SizeMismatch { expected: usize, found: usize },
    #[error("matrix is not square or has wrong size: {0}")]
    BadMatrix(String),
    #[error("matrix is reducible; no unique positive stationary distribution")]
    Reducible,
    #[error("power iteration did not reach residual {residual:e} within {iterations} iterations")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("window length B must be at least 1")]
    ZeroWindow,
}

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, GraphError> {
        let n = rows.len();
        if n == 0 {
            return Err(GraphError::BadMatrix("empty".into()));
        }
        let mut data = Vec::with_capacity(n * n);
        for (i, r) in rows.into_iter().enumerate() {
            if r.len() != n {
                return Err(GraphError::BadMatrix(format!(
                    "row {i} has {} entries, expected {n}",
                    r.len()
                )));
            }
            data.extend(r);
        }
        Ok(Self { n, data })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    /// Smallest strictly positive entry.
    pub fn min_positive(&self) -> Option<f64> {
        self.data.iter().copied().filter(|&v| v > 0.0).reduce(f64::min)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }
}

impl TryFrom<Vec<Vec<f64>>> for Matrix {
    type Error = GraphError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, GraphError> {
        Self::from_rows(rows)
    }
}

impl From<Matrix> for Vec<Vec<f64>> {
    fn from(m: Matrix) -> Self {
        m.to_rows()
    }
}

/// A communication graph. An edge `(j, i)` means `j` can send to `i`.
/// Undirected graphs store both orientations. Self-loops are never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    directed: bool,
}

impl Graph {
    fn build(n: usize, edges: impl IntoIterator<Item = (usize, usize)>, directed: bool) -> Result<Self, GraphError> {
        let mut set = BTreeSet::new();
        for (from, to) in edges {
            if from >= n || to >= n {
                return Err(GraphError::NodeOutOfRange { from, to, n });
            }
            if from == to {
                return Err(GraphError::SelfLoop(from));
            }
            set.insert((from, to));
            if !directed {
                set.insert((to, from));
            }
        }
        Ok(Self {
            n,
            edges: set,
            directed,
        })
    }

    pub fn directed(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, GraphError> {
        Self::build(n, edges, true)
    }

    pub fn undirected(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, GraphError> {
        Self::build(n, edges, false)
    }

    pub fn empty(n: usize, directed: bool) -> Self {
        Self {
            n,
            edges: BTreeSet::new(),
            directed,
        }
    }

    /// Undirected cycle; a single edge for two nodes.
    pub fn ring(n: usize) -> Self {
        let edges: Vec<_> = match n {
            0 | 1 => vec![],
            2 => vec![(0, 1)],
            _ => (0..n).map(|i| (i, (i + 1) % n)).collect(),
        };
        Self::undirected(n, edges).expect("ring edges are in range")
    }

    pub fn path(n: usize) -> Self {
        Self::undirected(n, (1..n).map(|i| (i - 1, i))).expect("path edges are in range")
    }

    pub fn complete(n: usize) -> Self {
        Self::undirected(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)))).expect("complete edges are in range")
    }

    /// `0 → 1 → … → n-1 → 0`.
    pub fn directed_cycle(n: usize) -> Self {
        let edges: Vec<_> = if n < 2 {
            vec![]
        } else {
            (0..n).map(|i| (i, (i + 1) % n)).collect()
        };
        Self::directed(n, edges).expect("cycle edges are in range")
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edges.contains(&(from, to))
    }

    /// Every stored `(from, to)` pair.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    /// Each undirected edge once, as `(a, b)` with `a < b`. For directed
    /// graphs this is every stored edge.
    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        if self.directed {
            self.edges.iter().copied().collect()
        } else {
            self.edges.iter().copied().filter(|&(a, b)| a < b).collect()
        }
    }

    pub fn in_neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges
            .iter()
            .filter(move |&&(_, to)| to == i)
            .map(|&(from, _)| from)
    }

    pub fn out_degree(&self, j: usize) -> usize {
        self.edges.range((j, 0)..(j + 1, 0)).count()
    }

    pub fn in_degree(&self, i: usize) -> usize {
        self.in_neighbors(i).count()
    }

    /// Number of neighbours of `i` in an undirected graph.
    pub fn degree(&self, i: usize) -> usize {
        self.out_degree(i)
    }

    /// Every node has the same in- and out-degree.
    pub fn is_regular(&self) -> bool {
        let d = self.out_degree(0);
        (0..self.n).all(|i| self.out_degree(i) == d && self.in_degree(i) == d)
    }

    /// Union of edge sets; directed if either input is.
    pub fn union(&self, other: &Graph) -> Graph {
        let mut edges = self.edges.clone();
        edges.extend(other.edges.iter().copied());
        Graph {
            n: self.n,
            edges,
            directed: self.directed || other.directed,
        }
    }
}

/// A periodic sequence of graphs `𝒢_k = graphs[k mod period]`; a static
/// sequence has period one.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSequence {
    graphs: Vec<Graph>,
}

impl GraphSequence {
    pub fn periodic(graphs: Vec<Graph>) -> Result<Self, GraphError> {
        let first = graphs.first().ok_or(GraphError::EmptySequence)?;
        let n = first.node_count();
        if let Some(g) = graphs.iter().find(|g| g.node_count() != n) {
            return Err(GraphError::SizeMismatch {
                expected: n,
                found: g.node_count(),
            });
        }
        Ok(Self { graphs })
    }

    pub fn fixed(graph: Graph) -> Self {
        Self { graphs: vec![graph] }
    }

    /// Random gossip: at each of the first `len` steps exactly one edge of
    /// `base`, drawn uniformly, is active. The draw at step `k` depends only
    /// on `(seed, k)` (ChaCha8 stream `k`).
    pub fn gossip(base: &Graph, seed: u64, len: usize) -> Result<Self, GraphError> {
        if base.is_directed() {
            return Err(GraphError::Directed);
        }
        let edges = base.edge_list();
        let n = base.node_count();
        if edges.is_empty() || len == 0 {
            return Ok(Self::fixed(Graph::empty(n, false)));
        }
        let graphs = (0..len)
            .map(|k| {
                let e = edges[gossip_draw(seed, k as u64, edges.len())];
                Graph::undirected(n, [e]).expect("edge of base graph")
            })
            .collect();
        Self::periodic(graphs)
    }

    pub fn graph_at(&self, k: usize) -> &Graph {
        &self.graphs[k % self.graphs.len()]
    }

    pub fn period(&self) -> usize {
        self.graphs.len()
    }

    pub fn graphs(&self) -> &[Graph] {
        &self.graphs
    }

    pub fn node_count(&self) -> usize {
        self.graphs[0].node_count()
    }

    pub fn is_directed(&self) -> bool {
        self.graphs.iter().any(Graph::is_directed)
    }

    pub fn is_static(&self) -> bool {
        self.graphs.windows(2).all(|w| w[0] == w[1])
    }
}

/// Index in `0..len` for step `k` of a seeded gossip process.
pub(crate) fn gossip_draw(seed: u64, k: u64, len: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    (rng.next_u64() % len as u64) as usize
}

pub(crate) fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub(crate) fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}
