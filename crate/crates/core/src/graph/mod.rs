//! Stochastic blockmodel sampling and adjacency structure.

mod io;

pub use io::{
    load_edge_list, load_labeled_graph, load_labels, read_edge_list, read_labels, write_edge_list, IngestReport,
};

use ndarray::Array2;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

const PI_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("invalid SBM parameters: {0}")]
    Parameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid adjacency matrix: {0}")]
    Adjacency(String),
    #[error("invalid labels: {0}")]
    Labels(String),
    #[error("{path}: line {line}: {message}")]
    Ingest { path: String, line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Parameters of SBM([n], B, π): block count, block connection
/// probabilities and membership prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSbmParams", into = "RawSbmParams")]
pub struct SbmParams {
    block_probs: Array2<f64>,
    prior: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawSbmParams {
    b: Vec<Vec<f64>>,
    pi: Vec<f64>,
}

impl TryFrom<RawSbmParams> for SbmParams {
    type Error = GraphError;

    fn try_from(raw: RawSbmParams) -> Result<Self, Self::Error> {
        let k = raw.b.len();
        if raw.b.iter().any(|row| row.len() != k) {
            return Err(GraphError::Parameter("B must be square".into()));
        }
        let flat: Vec<f64> = raw.b.into_iter().flatten().collect();
        SbmParams::from_row_major(k, &flat, raw.pi)
    }
}

impl From<SbmParams> for RawSbmParams {
    fn from(p: SbmParams) -> Self {
        RawSbmParams {
            b: p.block_probs.rows().into_iter().map(|r| r.to_vec()).collect(),
            pi: p.prior,
        }
    }
}

impl SbmParams {
    pub fn new(block_probs: Array2<f64>, prior: Vec<f64>) -> Result<Self, GraphError> {
        let k = prior.len();
        if k == 0 {
            return Err(GraphError::Parameter("block count K must be at least 1".into()));
        }
        if block_probs.dim() != (k, k) {
            return Err(GraphError::Parameter(format!(
                "B has shape {:?} but pi has length {k}",
                block_probs.dim()
            )));
        }
        for ((a, b), &p) in block_probs.indexed_iter() {
            if !(0.0..=1.0).contains(&p) {
                return Err(GraphError::Parameter(format!("B[{a}][{b}] = {p} is not in [0, 1]")));
            }
            if block_probs[[b, a]] != p {
                return Err(GraphError::Parameter(format!("B is not symmetric at ({a}, {b})")));
            }
        }
        if let Some(p) = prior.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(GraphError::Parameter(format!("pi entry {p} is negative or non-finite")));
        }
        let total: f64 = prior.iter().sum();
        if (total - 1.0).abs() > PI_SUM_TOLERANCE {
            return Err(GraphError::Parameter(format!("pi sums to {total}, expected 1")));
        }
        Ok(SbmParams { block_probs, prior })
    }

    /// Builds parameters from a row-major `K*K` list, as given on the command line.
    pub fn from_row_major(k: usize, b: &[f64], prior: Vec<f64>) -> Result<Self, GraphError> {
        if b.len() != k * k {
            return Err(GraphError::Parameter(format!(
                "B has {} entries, expected K*K = {}",
                b.len(),
                k * k
            )));
        }
        let block_probs =
            Array2::from_shape_vec((k, k), b.to_vec()).map_err(|e| GraphError::Parameter(e.to_string()))?;
        Self::new(block_probs, prior)
    }

    /// The two-block model used throughout the simulation experiments:
    /// B = [[0.3, 0.1], [0.1, 0.2]], π = [0.4, 0.6].
    pub fn two_block_reference() -> Self {
        Self::from_row_major(2, &[0.3, 0.1, 0.1, 0.2], vec![0.4, 0.6]).expect("reference parameters are valid")
    }

    pub fn blocks(&self) -> usize {
        self.prior.len()
    }

    pub fn block_probs(&self) -> &Array2<f64> {
        &self.block_probs
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    /// Expected edge density πᵀBπ.
    pub fn expected_density(&self) -> f64 {
        let k = self.blocks();
        (0..k)
            .flat_map(|a| (0..k).map(move |b| (a, b)))
            .map(|(a, b)| self.prior[a] * self.prior[b] * self.block_probs[[a, b]])
            .sum()
    }
}

/// Symmetric, hollow, binary adjacency matrix of an undirected simple graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    entries: Array2<u8>,
}

impl AdjacencyMatrix {
    /// Validates symmetry, hollowness and binary entries.
    pub fn new(entries: Array2<u8>) -> Result<Self, GraphError> {
        let (rows, cols) = entries.dim();
        if rows != cols {
            return Err(GraphError::Adjacency(format!("matrix is {rows}x{cols}, not square")));
        }
        for ((i, j), &v) in entries.indexed_iter() {
            if v > 1 {
                return Err(GraphError::Adjacency(format!("entry ({i}, {j}) = {v} is not binary")));
            }
            if i == j && v != 0 {
                return Err(GraphError::Adjacency(format!("self-loop at vertex {i}")));
            }
            if entries[[j, i]] != v {
                return Err(GraphError::Adjacency(format!("asymmetric at ({i}, {j})")));
            }
        }
        Ok(AdjacencyMatrix { entries })
    }

    pub fn empty(n: usize) -> Self {
        AdjacencyMatrix {
            entries: Array2::zeros((n, n)),
        }
    }

    /// Builds a graph from undirected 0-based edges; loops are ignored and
    /// duplicates collapse.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, GraphError> {
        let mut adj = Self::empty(n);
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(GraphError::Domain(format!("edge ({u}, {v}) out of range for n = {n}")));
            }
            if u != v {
                adj.entries[[u, v]] = 1;
                adj.entries[[v, u]] = 1;
            }
        }
        Ok(adj)
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.entries[[u, v]] == 1
    }

    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }

    /// Edges `(u, v)` with `u < v` in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n();
        (0..n).flat_map(move |u| ((u + 1)..n).filter(move |&v| self.has_edge(u, v)).map(move |v| (u, v)))
    }

    pub fn entries(&self) -> &Array2<u8> {
        &self.entries
    }

    /// Dense real copy of the matrix.
    pub fn to_matrix<T: Scalar>(&self) -> Array2<T> {
        self.entries.mapv(|v| if v == 1 { T::one() } else { T::zero() })
    }
}

/// Adjacency matrix with one class label in `1..=K` per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledGraph {
    adjacency: AdjacencyMatrix,
    labels: Vec<usize>,
}

impl LabeledGraph {
    pub fn new(adjacency: AdjacencyMatrix, labels: Vec<usize>) -> Result<Self, GraphError> {
        if labels.len() != adjacency.n() {
            return Err(GraphError::Labels(format!(
                "{} labels for {} vertices",
                labels.len(),
                adjacency.n()
            )));
        }
        if let Some(i) = labels.iter().position(|&l| l == 0) {
            return Err(GraphError::Labels(format!(
                "vertex {i} has label 0; classes start at 1"
            )));
        }
        Ok(LabeledGraph { adjacency, labels })
    }

    pub fn adjacency(&self) -> &AdjacencyMatrix {
        &self.adjacency
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn classes(&self) -> usize {
        self.labels.iter().copied().max().unwrap_or(0)
    }

    pub fn into_parts(self) -> (AdjacencyMatrix, Vec<usize>) {
        (self.adjacency, self.labels)
    }
}

/// Draws a graph from SBM([n], B, π).
///
/// Labels are drawn first, one per vertex in order, then each pair `i < j`
/// in row-major order receives an edge with probability `B[Y_i][Y_j]`.
/// Labels are returned 1-based.
pub fn sample_sbm<R: Rng + ?Sized>(params: &SbmParams, n: usize, rng: &mut R) -> Result<LabeledGraph, GraphError> {
    if n == 0 {
        return Err(GraphError::Domain("vertex count must be at least 1".into()));
    }
    let membership = WeightedIndex::new(params.prior()).map_err(|e| GraphError::Parameter(format!("pi: {e}")))?;
    let blocks: Vec<usize> = (0..n).map(|_| membership.sample(rng)).collect();

    let probs = params.block_probs();
    let mut entries = Array2::<u8>::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let p = probs[[blocks[i], blocks[j]]];
            if rng.random::<f64>() < p {
                entries[[i, j]] = 1;
                entries[[j, i]] = 1;
            }
        }
    }

    let labels = blocks.into_iter().map(|b| b + 1).collect();
    LabeledGraph::new(AdjacencyMatrix { entries }, labels)
}
