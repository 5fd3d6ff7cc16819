//! Datasets, the Euclidean metric, and the parametric graph families.
//!
//! Graphs are built once as a σ-independent skeleton (the mutual k-nearest
//! neighbor edge set with cached distances). Gaussian weights are evaluated
//! on that skeleton for any bandwidth σ, so the support never changes with σ.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Above this many points the dense distance matrix is not cached.
pub const DEFAULT_DISTANCE_CACHE_CAP: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("index {index} out of range for {len} points")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid problem instance: {0}")]
    InvalidInstance(String),
}

/// A set of real feature vectors of a common dimension, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    dim: usize,
    values: Vec<f64>,
    classes: Option<Vec<u32>>,
}

impl Dataset {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, GraphError> {
        let dim = rows.first().ok_or(GraphError::EmptyDataset)?.len();
        if dim == 0 {
            return Err(GraphError::InvalidParameter("dim must be positive".into()));
        }
        let mut values = Vec::with_capacity(rows.len() * dim);
        for row in &rows {
            if row.len() != dim {
                return Err(GraphError::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Ok(Self {
            dim,
            values,
            classes: None,
        })
    }

    pub fn from_flat(dim: usize, values: Vec<f64>) -> Result<Self, GraphError> {
        if dim == 0 {
            return Err(GraphError::InvalidParameter("dim must be positive".into()));
        }
        if values.is_empty() {
            return Err(GraphError::EmptyDataset);
        }
        if values.len() % dim != 0 {
            return Err(GraphError::DimensionMismatch {
                expected: dim,
                found: values.len() % dim,
            });
        }
        Ok(Self {
            dim,
            values,
            classes: None,
        })
    }

    /// Attaches one class id per point.
    pub fn with_classes(mut self, classes: Vec<u32>) -> Result<Self, GraphError> {
        if classes.len() != self.len() {
            return Err(GraphError::InvalidParameter(format!(
                "{} class labels for {} points",
                classes.len(),
                self.len()
            )));
        }
        self.classes = Some(classes);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    pub fn classes(&self) -> Option<&[u32]> {
        self.classes.as_deref()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// New dataset holding the given points (and classes) in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self, GraphError> {
        let mut values = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            if i >= self.len() {
                return Err(GraphError::IndexOutOfRange {
                    index: i,
                    len: self.len(),
                });
            }
            values.extend_from_slice(self.point(i));
        }
        let mut out = Self::from_flat(self.dim, values)?;
        if let Some(c) = &self.classes {
            out.classes = Some(indices.iter().map(|&i| c[i]).collect());
        }
        Ok(out)
    }
}

/// One semi-supervised binary task: labeled set `L`, unlabeled set `U`, and
/// held-out targets on `U` used only for evaluating the loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub dataset: Dataset,
    pub labeled: Vec<usize>,
    pub labels: Vec<u8>,
    pub unlabeled: Vec<usize>,
    pub targets: Vec<u8>,
}

impl ProblemInstance {
    pub fn new(
        dataset: Dataset,
        labeled: Vec<usize>,
        labels: Vec<u8>,
        unlabeled: Vec<usize>,
        targets: Vec<u8>,
    ) -> Result<Self, GraphError> {
        let n = dataset.len();
        if labeled.is_empty() || unlabeled.is_empty() {
            return Err(GraphError::InvalidInstance(
                "labeled and unlabeled sets must be nonempty".into(),
            ));
        }
        if labeled.len() != labels.len() || unlabeled.len() != targets.len() {
            return Err(GraphError::InvalidInstance(
                "label vectors must match their index sets".into(),
            ));
        }
        if labels.iter().chain(&targets).any(|&y| y > 1) {
            return Err(GraphError::InvalidInstance("labels must be 0 or 1".into()));
        }
        let mut seen = vec![false; n];
        for &i in labeled.iter().chain(&unlabeled) {
            if i >= n {
                return Err(GraphError::IndexOutOfRange { index: i, len: n });
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(GraphError::InvalidInstance(format!(
                    "index {i} appears twice across L and U"
                )));
            }
        }
        if labeled.len() + unlabeled.len() != n {
            return Err(GraphError::InvalidInstance(
                "L and U must cover every point of the dataset".into(),
            ));
        }
        Ok(Self {
            dataset,
            labeled,
            labels,
            unlabeled,
            targets,
        })
    }

    pub fn n(&self) -> usize {
        self.dataset.len()
    }

    /// Labels as reals, aligned with `labeled`.
    pub fn label_values(&self) -> Vec<f64> {
        self.labels.iter().map(|&y| f64::from(y)).collect()
    }
}

fn check_index(dataset: &Dataset, i: usize) -> Result<(), GraphError> {
    if i >= dataset.len() {
        Err(GraphError::IndexOutOfRange {
            index: i,
            len: dataset.len(),
        })
    } else {
        Ok(())
    }
}

#[inline]
pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Euclidean distance between points `u` and `v`.
pub fn pairwise_distance(dataset: &Dataset, u: usize, v: usize) -> Result<f64, GraphError> {
    check_index(dataset, u)?;
    check_index(dataset, v)?;
    Ok(euclidean(dataset.point(u), dataset.point(v)))
}

/// Pairwise distances, either a cached dense matrix or computed on demand.
#[derive(Debug, Clone)]
pub enum DistanceTable<'a> {
    Dense { n: usize, values: Vec<f64> },
    OnDemand(&'a Dataset),
}

impl<'a> DistanceTable<'a> {
    pub fn new(dataset: &'a Dataset, cache_cap: usize) -> Self {
        let n = dataset.len();
        if n > cache_cap {
            return Self::OnDemand(dataset);
        }
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = euclidean(dataset.point(i), dataset.point(j));
                values[i * n + j] = d;
                values[j * n + i] = d;
            }
        }
        Self::Dense { n, values }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            Self::Dense { n, values } => values[i * n + j],
            Self::OnDemand(ds) => euclidean(ds.point(i), ds.point(j)),
        }
    }
}

/// Indices of the `k` nearest other points of `i`, ties broken by smaller index.
fn nearest(table: &DistanceTable<'_>, n: usize, i: usize, k: usize) -> Vec<usize> {
    let mut order: Vec<(f64, usize)> = (0..n)
        .filter(|&j| j != i)
        .map(|j| (table.get(i, j), j))
        .collect();
    let by_key = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < order.len() {
        order.select_nth_unstable_by(k - 1, by_key);
        order.truncate(k);
    }
    order.sort_unstable_by(by_key);
    order.into_iter().map(|(_, j)| j).collect()
}

/// The mutual k-nearest-neighbor skeleton: `(u, v)` is an edge iff each
/// endpoint is among the other's `k` nearest neighbors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutualKnnGraph {
    k: usize,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl MutualKnnGraph {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    /// Neighbors of `u` with their distances, sorted by neighbor index.
    pub fn neighbors(&self, u: usize) -> &[(usize, f64)] {
        &self.adjacency[u]
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Undirected edges `(u, v, d)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(u, nb)| {
            nb.iter()
                .filter(move |&&(v, _)| u < v)
                .map(move |&(v, d)| (u, v, d))
        })
    }

    pub fn max_distance(&self) -> f64 {
        self.edges().map(|(_, _, d)| d).fold(0.0, f64::max)
    }

    /// Nodes reachable from `sources` through edges accepted by `keep`.
    pub fn reachable_from(
        &self,
        sources: &[usize],
        mut keep: impl FnMut(usize, usize, f64) -> bool,
    ) -> Vec<bool> {
        let mut seen = vec![false; self.node_count()];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for &s in sources {
            if !seen[s] {
                seen[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            for &(v, d) in &self.adjacency[u] {
                if !seen[v] && keep(u, v, d) {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }
}

/// Builds the mutual k-NN skeleton, caching the distance matrix when
/// `n <= DEFAULT_DISTANCE_CACHE_CAP`.
pub fn build_mutual_knn(dataset: &Dataset, k: usize) -> Result<MutualKnnGraph, GraphError> {
    build_mutual_knn_with_cap(dataset, k, DEFAULT_DISTANCE_CACHE_CAP)
}

pub fn build_mutual_knn_with_cap(
    dataset: &Dataset,
    k: usize,
    cache_cap: usize,
) -> Result<MutualKnnGraph, GraphError> {
    let n = dataset.len();
    if k == 0 || k >= n {
        return Err(GraphError::InvalidParameter(format!(
            "k must satisfy 0 < k < n, got k={k}, n={n}"
        )));
    }
    let table = DistanceTable::new(dataset, cache_cap);
    let lists: Vec<Vec<usize>> = (0..n).map(|i| nearest(&table, n, i, k)).collect();
    let mut member = vec![Vec::<usize>::new(); n];
    for (i, list) in lists.iter().enumerate() {
        let mut sorted = list.clone();
        sorted.sort_unstable();
        member[i] = sorted;
    }
    let mut adjacency = vec![Vec::new(); n];
    for (u, nb) in member.iter().enumerate() {
        for &v in nb {
            if u < v && member[v].binary_search(&u).is_ok() {
                let d = table.get(u, v);
                adjacency[u].push((v, d));
                adjacency[v].push((u, d));
            }
        }
    }
    for list in &mut adjacency {
        list.sort_unstable_by_key(|&(v, _)| v);
    }
    Ok(MutualKnnGraph { k, adjacency })
}

/// The complete graph, i.e. the mutual k-NN graph with `k = n - 1`.
pub fn build_complete(dataset: &Dataset) -> Result<MutualKnnGraph, GraphError> {
    build_mutual_knn(dataset, dataset.len().saturating_sub(1).max(1))
}

/// Unweighted thresholded nearest-neighbor graph `G(k, r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdGraph {
    pub k: usize,
    pub r: f64,
    /// Undirected edges `(u, v)` with `u < v`, sorted.
    pub edges: Vec<(usize, usize)>,
}

pub fn build_threshold_graph(
    dataset: &Dataset,
    k: usize,
    r: f64,
) -> Result<ThresholdGraph, GraphError> {
    if !(r > 0.0) {
        return Err(GraphError::InvalidParameter(format!(
            "threshold r must be positive, got {r}"
        )));
    }
    let skeleton = build_mutual_knn(dataset, k)?;
    Ok(threshold_skeleton(&skeleton, r))
}

/// Applies the distance threshold to an existing skeleton.
pub fn threshold_skeleton(skeleton: &MutualKnnGraph, r: f64) -> ThresholdGraph {
    let edges = skeleton
        .edges()
        .filter(|&(_, _, d)| d <= r)
        .map(|(u, v, _)| (u, v))
        .collect();
    ThresholdGraph {
        k: skeleton.k(),
        r,
        edges,
    }
}

fn check_sigma(sigma: f64) -> Result<(), GraphError> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(GraphError::InvalidParameter(format!(
            "bandwidth must be positive and finite, got {sigma}"
        )))
    }
}

/// `exp(-d²/σ²)`.
pub fn gaussian_weight(d: f64, sigma: f64) -> Result<f64, GraphError> {
    check_sigma(sigma)?;
    Ok(weight(d, sigma))
}

/// `∂w/∂σ = 2 w d² / σ³`.
pub fn gaussian_weight_derivative(d: f64, sigma: f64) -> Result<f64, GraphError> {
    check_sigma(sigma)?;
    Ok(weight_derivative(d, sigma))
}

#[inline]
pub(crate) fn weight(d: f64, sigma: f64) -> f64 {
    (-(d * d) / (sigma * sigma)).exp()
}

#[inline]
pub(crate) fn weight_derivative(d: f64, sigma: f64) -> f64 {
    2.0 * weight(d, sigma) * d * d / (sigma * sigma * sigma)
}
