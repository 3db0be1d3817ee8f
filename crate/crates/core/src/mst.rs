//! Minimal spanning trees, the mst-spectrum, path-max queries and the
//! spanning-tree criterion for ultrametricity.

use serde::Serialize;
use thiserror::Error;

use crate::metric::{FiniteMetricSpace, Tolerance};
use crate::partition::{Partition, PartitionError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MstError {
    #[error("path query needs two distinct vertices, got {0} twice")]
    SameVertex(usize),
    #[error("vertex {v} out of range for a tree on {n} points")]
    OutOfRange { v: usize, n: usize },
    #[error("edge scan order does not span the space")]
    NotSpanning,
    #[error(transparent)]
    Partition(#[from] PartitionError),
}

struct DisjointSets {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets { parent: (0..n).collect(), rank: vec![0; n] }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MstEdge {
    pub i: usize,
    pub j: usize,
    #[serde(rename = "len")]
    pub length: f64,
}

/// A spanning tree of minimum total length. Edges are stored with `i < j`
/// in the order Kruskal accepted them.
#[derive(Debug, Clone, PartialEq)]
pub struct MstTree {
    n: usize,
    edges: Vec<MstEdge>,
}

/// Tree edge lengths in non-increasing order.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct MstSpectrum(Vec<f64>);

impl MstSpectrum {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// 1-based `sigma_k`, the k-th longest edge.
    pub fn sigma(&self, k: usize) -> f64 {
        assert!(k >= 1 && k <= self.0.len(), "sigma_{k} undefined for {} edges", self.0.len());
        self.0[k - 1]
    }

    /// Index of an entry within `tol` of `v`, if any.
    pub fn position_of(&self, v: f64, tol: Tolerance) -> Option<usize> {
        self.0.iter().position(|&s| tol.eq(s, v))
    }

    pub fn is_strictly_decreasing(&self, tol: Tolerance) -> bool {
        self.0.windows(2).all(|w| w[0] > w[1] + tol.get())
    }
}

/// Kruskal over all pairs, ties in length broken by lexicographic `(i, j)`.
pub fn build_mst(x: &FiniteMetricSpace) -> MstTree {
    let order: Vec<(usize, usize)> = x.pairs().map(|(i, j, _)| (i, j)).collect();
    build_mst_with_scan_order(x, &order).expect("all pairs span the space")
}

/// Kruskal that scans equal-length edges in the order they appear in
/// `order`. The scan is a stable sort of `order` by length.
pub fn build_mst_with_scan_order(
    x: &FiniteMetricSpace,
    order: &[(usize, usize)],
) -> Result<MstTree, MstError> {
    let n = x.n();
    let mut scan: Vec<(usize, usize, f64)> = Vec::with_capacity(order.len());
    for &(a, b) in order {
        for v in [a, b] {
            if v >= n {
                return Err(MstError::OutOfRange { v, n });
            }
        }
        if a != b {
            let (i, j) = (a.min(b), a.max(b));
            scan.push((i, j, x.dist(i, j)));
        }
    }
    scan.sort_by(|p, q| p.2.total_cmp(&q.2));
    let mut sets = DisjointSets::new(n);
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    for (i, j, length) in scan {
        if sets.union(i, j) {
            edges.push(MstEdge { i, j, length });
            if edges.len() + 1 == n {
                break;
            }
        }
    }
    if edges.len() + 1 != n {
        return Err(MstError::NotSpanning);
    }
    Ok(MstTree { n, edges })
}

pub fn spectrum(x: &FiniteMetricSpace) -> MstSpectrum {
    build_mst(x).spectrum()
}

/// Both ultrametric detectors must agree on valid input; this one checks
/// every distance against the largest edge on its tree path.
pub fn is_ultrametric_via_mst(x: &FiniteMetricSpace, tol: Tolerance) -> bool {
    let tree = build_mst(x);
    let n = x.n();
    (0..n).all(|v| {
        let maxes = tree.path_maxima_from(v);
        (v + 1..n).all(|w| tol.eq(x.dist(v, w), maxes[w]))
    })
}

impl MstTree {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[MstEdge] {
        &self.edges
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    pub fn spectrum(&self) -> MstSpectrum {
        let mut s: Vec<f64> = self.edges.iter().map(|e| e.length).collect();
        s.sort_by(|a, b| b.total_cmp(a));
        MstSpectrum(s)
    }

    fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.i].push((e.j, e.length));
            adj[e.j].push((e.i, e.length));
        }
        adj
    }

    /// Largest edge on the tree path from `v` to every vertex (0 at `v`).
    fn path_maxima_from(&self, v: usize) -> Vec<f64> {
        let adj = self.adjacency();
        let mut best = vec![f64::NAN; self.n];
        best[v] = 0.0;
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            for &(w, len) in &adj[u] {
                if best[w].is_nan() {
                    best[w] = best[u].max(len);
                    stack.push(w);
                }
            }
        }
        best
    }

    /// Maximum edge length on the unique tree path between `v` and `w`.
    pub fn path_max(&self, v: usize, w: usize) -> Result<f64, MstError> {
        for u in [v, w] {
            if u >= self.n {
                return Err(MstError::OutOfRange { v: u, n: self.n });
            }
        }
        if v == w {
            return Err(MstError::SameVertex(v));
        }
        Ok(self.path_maxima_from(v)[w])
    }

    /// Drops the `m - 1` longest edges and returns the components as a
    /// partition. Equal lengths are removed in lexicographic `(i, j)` order.
    pub fn split_by_top_edges(&self, m: usize) -> Result<Partition, MstError> {
        if m == 0 || m > self.n {
            return Err(PartitionError::BadBlockCount { m, n: self.n }.into());
        }
        let mut by_length: Vec<&MstEdge> = self.edges.iter().collect();
        by_length.sort_by(|a, b| b.length.total_cmp(&a.length).then((a.i, a.j).cmp(&(b.i, b.j))));
        let mut sets = DisjointSets::new(self.n);
        for e in &by_length[m - 1..] {
            sets.union(e.i, e.j);
        }
        let roots: Vec<usize> = (0..self.n).map(|v| sets.find(v)).collect();
        Ok(Partition::canonical(&roots))
    }
}
