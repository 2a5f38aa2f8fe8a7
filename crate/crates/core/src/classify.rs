//! k-nearest-neighbour vertex classification with leave-one-out error.
//!
//! Distances are Euclidean. Neighbours at equal distance are ranked by
//! ascending index. A vote tie goes to the tied class whose nearest member is
//! closest, then to the smallest class id.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Embedding;
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum ClassifyError {
    #[error("k = {k} out of range 1..={m}")]
    NeighborCount { k: usize, m: usize },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("{points} points but {labels} labels")]
    LengthMismatch { points: usize, labels: usize },
    #[error("query has dimension {query}, training points have {train}")]
    DimensionMismatch { query: usize, train: usize },
    #[error("no labels")]
    EmptyLabels,
}

/// An embedding paired with one class label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalDataset<T> {
    embedding: Embedding<T>,
    labels: Vec<usize>,
}

impl<T: Scalar> EvalDataset<T> {
    pub fn new(embedding: Embedding<T>, labels: Vec<usize>) -> Result<Self, ClassifyError> {
        if embedding.n() != labels.len() {
            return Err(ClassifyError::LengthMismatch {
                points: embedding.n(),
                labels: labels.len(),
            });
        }
        Ok(EvalDataset { embedding, labels })
    }

    pub fn embedding(&self) -> &Embedding<T> {
        &self.embedding
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub error_rate: f64,
    pub misclassified: usize,
    pub n_evaluated: usize,
    pub k: usize,
    pub chance_error: f64,
}

fn squared_distance<T: Scalar>(a: ArrayView1<'_, T>, b: ArrayView1<'_, T>) -> T {
    a.iter()
        .zip(b.iter())
        .fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
}

fn by_distance_then_index<T: Scalar>(a: &(T, usize), b: &(T, usize)) -> Ordering {
    a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1))
}

/// Majority label among `neighbors`, sorted nearest first.
fn vote<T: Scalar>(neighbors: &[(T, usize)], labels: &[usize]) -> usize {
    // class -> (votes, rank of nearest member)
    let mut tally: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for (rank, &(_, idx)) in neighbors.iter().enumerate() {
        let entry = tally.entry(labels[idx]).or_insert((0, rank));
        entry.0 += 1;
    }
    let top = tally.values().map(|&(votes, _)| votes).max().unwrap_or(0);
    tally
        .iter()
        .filter(|(_, &(votes, _))| votes == top)
        .min_by(|(ca, &(_, ra)), (cb, &(_, rb))| {
            let (da, db) = (neighbors[ra].0, neighbors[rb].0);
            da.partial_cmp(&db).unwrap_or(Ordering::Equal).then(ca.cmp(cb))
        })
        .map(|(&class, _)| class)
        .expect("at least one neighbour")
}

/// The `k` nearest of `candidates` (distance, index), nearest first.
fn nearest<T: Scalar>(mut candidates: Vec<(T, usize)>, k: usize) -> Vec<(T, usize)> {
    if k < candidates.len() {
        candidates.select_nth_unstable_by(k - 1, by_distance_then_index);
        candidates.truncate(k);
    }
    candidates.sort_by(by_distance_then_index);
    candidates
}

/// Predicts the label of `query` from its `k` nearest training points.
pub fn knn_predict<T: Scalar>(
    train_points: &Array2<T>,
    train_labels: &[usize],
    query: ArrayView1<'_, T>,
    k: usize,
) -> Result<usize, ClassifyError> {
    let m = train_points.nrows();
    if m == 0 {
        return Err(ClassifyError::EmptyTrainingSet);
    }
    if train_labels.len() != m {
        return Err(ClassifyError::LengthMismatch {
            points: m,
            labels: train_labels.len(),
        });
    }
    if query.len() != train_points.ncols() {
        return Err(ClassifyError::DimensionMismatch {
            query: query.len(),
            train: train_points.ncols(),
        });
    }
    if k == 0 || k > m {
        return Err(ClassifyError::NeighborCount { k, m });
    }
    let candidates = train_points
        .rows()
        .into_iter()
        .enumerate()
        .map(|(i, row)| (squared_distance(row, query), i))
        .collect();
    Ok(vote(&nearest(candidates, k), train_labels))
}

/// Leave-one-out error of the `k`-NN classifier: each point is predicted
/// from the other `n - 1`.
pub fn loocv_error<T: Scalar>(data: &EvalDataset<T>, k: usize) -> Result<ErrorReport, ClassifyError> {
    let points = data.embedding.positions();
    let labels = &data.labels;
    let n = labels.len();
    if n == 0 {
        return Err(ClassifyError::EmptyLabels);
    }
    if k == 0 || k + 1 > n {
        return Err(ClassifyError::NeighborCount {
            k,
            m: n.saturating_sub(1),
        });
    }
    let misclassified = (0..n)
        .into_par_iter()
        .filter(|&i| {
            let query = points.row(i);
            let candidates = (0..n)
                .filter(|&j| j != i)
                .map(|j| (squared_distance(points.row(j), query), j))
                .collect();
            vote(&nearest(candidates, k), labels) != labels[i]
        })
        .count();
    Ok(ErrorReport {
        error_rate: misclassified as f64 / n as f64,
        misclassified,
        n_evaluated: n,
        k,
        chance_error: chance_error(labels)?,
    })
}

/// Error of always guessing the modal class: `1 - max_class_count / n`.
pub fn chance_error(labels: &[usize]) -> Result<f64, ClassifyError> {
    if labels.is_empty() {
        return Err(ClassifyError::EmptyLabels);
    }
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_default() += 1;
    }
    let modal = counts.values().copied().max().unwrap_or(0);
    Ok(1.0 - modal as f64 / labels.len() as f64)
}
