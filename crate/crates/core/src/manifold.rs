//! Discrete Laplace-Beltrami operator over a point cloud.
//!
//! Each point is connected to its `k` nearest neighbours (a directed
//! relation), edges get heat-kernel weights `-exp(-d^2 / t)`, the diagonal
//! balances each row, and the directed matrix is averaged with its
//! transpose. The mass matrix is the diagonal of the result.

use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use crate::linalg::CsrMatrix;
use crate::{Error, Result};

/// Directed k-nearest-neighbour graph.
///
/// `neighbors(i)` lists the `k` closest other points to `i` in ascending
/// distance, ties broken by ascending index.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyGraph {
    k: usize,
    neighbors: Vec<usize>,
    sq_distances: Vec<f64>,
}

impl AdjacencyGraph {
    /// Builds a graph from explicit neighbour lists. Each list must have
    /// the same length `k`, must not contain its own index, and must be
    /// sorted by distance.
    pub fn from_lists(lists: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let n = lists.len();
        let k = lists.first().map_or(0, Vec::len);
        if k == 0 {
            return Err(Error::Parameter("graph needs at least one neighbour per point".into()));
        }
        let mut neighbors = Vec::with_capacity(n * k);
        let mut sq_distances = Vec::with_capacity(n * k);
        for (i, list) in lists.into_iter().enumerate() {
            if list.len() != k {
                return Err(Error::Parameter(format!(
                    "point {i} has {} neighbours, expected {k}",
                    list.len()
                )));
            }
            for (j, d2) in list {
                if j == i || j >= n || !(d2 >= 0.0) {
                    return Err(Error::Parameter(format!("invalid neighbour {j} of point {i}")));
                }
                neighbors.push(j);
                sq_distances.push(d2);
            }
        }
        Ok(Self {
            k,
            neighbors,
            sq_distances,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.neighbors.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i * self.k..(i + 1) * self.k]
    }

    /// Squared Euclidean distances matching [`neighbors`](Self::neighbors).
    pub fn sq_distances(&self, i: usize) -> &[f64] {
        &self.sq_distances[i * self.k..(i + 1) * self.k]
    }

    /// Mean of all stored squared neighbour distances.
    pub fn mean_sq_distance(&self) -> f64 {
        self.sq_distances.iter().sum::<f64>() / self.sq_distances.len() as f64
    }

    /// Whether the undirected version of the graph is connected.
    pub fn is_connected(&self) -> bool {
        let n = self.len();
        let mut adj = alloc::vec![Vec::new(); n];
        for i in 0..n {
            for &j in self.neighbors(i) {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        let mut seen = alloc::vec![false; n];
        let mut stack = alloc::vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    stack.push(j);
                }
            }
        }
        count == n
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Exact k-nearest-neighbour search by exhaustive scan.
pub fn knn_graph<P: AsRef<[f64]>>(points: &[P], k: usize) -> Result<AdjacencyGraph> {
    let n = points.len();
    if k == 0 || k >= n {
        return Err(Error::Parameter(format!(
            "k must satisfy 1 <= k < n, got k = {k}, n = {n}"
        )));
    }
    let by_distance = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    let mut neighbors = Vec::with_capacity(n * k);
    let mut sq_distances = Vec::with_capacity(n * k);
    let mut candidates: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for i in 0..n {
        let p = points[i].as_ref();
        candidates.clear();
        candidates.extend(
            (0..n)
                .filter(|&j| j != i)
                .map(|j| (squared_distance(p, points[j].as_ref()), j)),
        );
        if k < candidates.len() {
            candidates.select_nth_unstable_by(k - 1, by_distance);
            candidates.truncate(k);
        }
        candidates.sort_unstable_by(by_distance);
        for &(d2, j) in &candidates {
            neighbors.push(j);
            sq_distances.push(d2);
        }
    }
    Ok(AdjacencyGraph {
        k,
        neighbors,
        sq_distances,
    })
}

/// Heat-kernel edge weight `-exp(-d2 / t)`.
pub fn kernel_weight(sq_distance: f64, t: f64) -> f64 {
    -libm::exp(-sq_distance / t)
}

/// Kernel bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    /// Mean squared distance over all stored KNN edges.
    Auto,
    Fixed(f64),
}

impl Bandwidth {
    pub fn resolve(self, graph: &AdjacencyGraph) -> Result<f64> {
        let t = match self {
            Bandwidth::Auto => graph.mean_sq_distance(),
            Bandwidth::Fixed(t) => t,
        };
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Parameter(format!("bandwidth must be positive, got {t}")));
        }
        Ok(t)
    }
}

impl FromStr for Bandwidth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Bandwidth::Auto);
        }
        s.parse::<f64>()
            .map(Bandwidth::Fixed)
            .map_err(|_| Error::Parameter(format!("bandwidth must be `auto` or a number, got `{s}`")))
    }
}

/// How the diagonal of the symmetric weight matrix is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OperatorMode {
    /// Diagonal taken from the directed matrix, untouched by averaging.
    Paper,
    /// Diagonal recomputed after averaging so every row sums to zero.
    #[default]
    Balanced,
}

impl FromStr for OperatorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "paper" => Ok(OperatorMode::Paper),
            "balanced" => Ok(OperatorMode::Balanced),
            _ => Err(Error::Parameter(format!("unknown mode `{s}`"))),
        }
    }
}

impl fmt::Display for OperatorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OperatorMode::Paper => "paper",
            OperatorMode::Balanced => "balanced",
        })
    }
}

/// Directed weight matrix: kernel weights on `j in N_i`, and a diagonal
/// that makes each row sum to zero.
pub fn weight_tilde(graph: &AdjacencyGraph, t: f64) -> Result<CsrMatrix> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Parameter(format!("bandwidth must be positive, got {t}")));
    }
    let rows = (0..graph.len())
        .map(|i| {
            let mut row: Vec<(usize, f64)> = graph
                .neighbors(i)
                .iter()
                .zip(graph.sq_distances(i))
                .map(|(&j, &d2)| (j, kernel_weight(d2, t)))
                .collect();
            let diag = -row.iter().map(|(_, w)| w).sum::<f64>();
            row.push((i, diag));
            row
        })
        .collect();
    Ok(CsrMatrix::from_rows(graph.len(), rows))
}

/// Symmetric weight matrix `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    pub entries: CsrMatrix,
    pub t: f64,
    pub mode: OperatorMode,
}

/// `W = (W~ + W~^T) / 2`; in balanced mode the diagonal is then reset to
/// the negated sum of the row's off-diagonal entries.
pub fn symmetrize(w_tilde: &CsrMatrix, t: f64, mode: OperatorMode) -> WeightMatrix {
    let n = w_tilde.dim();
    let wt = w_tilde.transpose();
    let rows = (0..n)
        .map(|i| {
            let mut row: Vec<(usize, f64)> = Vec::new();
            let (mut a, mut b) = (w_tilde.row(i).peekable(), wt.row(i).peekable());
            // merge two sorted rows
            loop {
                let next = match (a.peek(), b.peek()) {
                    (None, None) => break,
                    (Some(&(j, v)), None) => {
                        a.next();
                        (j, v, 0.0)
                    }
                    (None, Some(&(j, v))) => {
                        b.next();
                        (j, 0.0, v)
                    }
                    (Some(&(ja, va)), Some(&(jb, vb))) => match ja.cmp(&jb) {
                        Ordering::Less => {
                            a.next();
                            (ja, va, 0.0)
                        }
                        Ordering::Greater => {
                            b.next();
                            (jb, 0.0, vb)
                        }
                        Ordering::Equal => {
                            a.next();
                            b.next();
                            (ja, va, vb)
                        }
                    },
                };
                let (j, v, vt) = next;
                row.push((j, if j == i { v } else { (v + vt) / 2.0 }));
            }
            if mode == OperatorMode::Balanced {
                let off: f64 = row.iter().filter(|(j, _)| *j != i).map(|(_, v)| v).sum();
                for e in row.iter_mut().filter(|(j, _)| *j == i) {
                    e.1 = -off;
                }
            }
            row
        })
        .collect();
    WeightMatrix {
        entries: CsrMatrix::from_rows(n, rows),
        t,
        mode,
    }
}

/// Diagonal mass matrix `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct MassMatrix {
    pub diag: Vec<f64>,
}

pub fn mass_matrix(w: &WeightMatrix) -> Result<MassMatrix> {
    let diag = w.entries.diagonal();
    if let Some((index, &value)) = diag.iter().enumerate().find(|(_, a)| !(**a > 1e-300)) {
        return Err(Error::SingularMass { index, value });
    }
    Ok(MassMatrix { diag })
}

/// The assembled operator pair together with the graph it was built on.
#[derive(Debug, Clone)]
pub struct LaplaceOperator {
    pub graph: AdjacencyGraph,
    pub weights: WeightMatrix,
    pub mass: MassMatrix,
}

impl LaplaceOperator {
    pub fn build<P: AsRef<[f64]>>(points: &[P], k: usize, bandwidth: Bandwidth, mode: OperatorMode) -> Result<Self> {
        let graph = knn_graph(points, k)?;
        Self::from_graph(graph, bandwidth, mode)
    }

    pub fn from_graph(graph: AdjacencyGraph, bandwidth: Bandwidth, mode: OperatorMode) -> Result<Self> {
        let t = bandwidth.resolve(&graph)?;
        let weights = symmetrize(&weight_tilde(&graph, t)?, t, mode);
        let mass = mass_matrix(&weights)?;
        Ok(Self { graph, weights, mass })
    }
}
