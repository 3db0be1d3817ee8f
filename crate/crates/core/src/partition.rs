//! Partitions of a finite metric space into `m` blocks, their `(alpha, d)`
//! statistics, the cloud of all such pairs and its Pareto-extreme subset.
//!
//! A partition is stored as its restricted growth string: `block_of[i]` is
//! the block index of point `i`, `block_of[0] == 0`, and every entry is at
//! most one more than the maximum of the entries before it. This is the
//! canonical representative, so every set partition appears exactly once.

use std::cmp::Ordering;
use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::metric::{FiniteMetricSpace, Tolerance};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PartitionError {
    #[error("block count {m} is outside [1, {n}]")]
    BadBlockCount { m: usize, n: usize },
    #[error("enumerating partitions of {n} points exceeds the cap of {cap}; raise the cap explicitly")]
    CapExceeded { n: usize, cap: usize },
    #[error("invalid partition: {0}")]
    Invalid(String),
}

/// Largest `n` for which full partition enumeration is allowed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationCap(pub usize);

impl EnumerationCap {
    pub const DEFAULT: EnumerationCap = EnumerationCap(12);

    pub fn check(self, n: usize) -> Result<(), PartitionError> {
        if n > self.0 {
            Err(PartitionError::CapExceeded { n, cap: self.0 })
        } else {
            Ok(())
        }
    }
}

impl Default for EnumerationCap {
    fn default() -> Self {
        EnumerationCap::DEFAULT
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    block_of: Vec<usize>,
    m: usize,
}

impl Partition {
    /// Builds a partition from a restricted growth string.
    pub fn from_rgs(block_of: Vec<usize>) -> Result<Self, PartitionError> {
        let mut max = None::<usize>;
        for (i, &b) in block_of.iter().enumerate() {
            let limit = max.map_or(0, |m| m + 1);
            if b > limit {
                return Err(PartitionError::Invalid(format!(
                    "entry {i} is {b}, exceeds running max + 1 = {limit}"
                )));
            }
            max = Some(max.map_or(b, |m| m.max(b)));
        }
        let m = max.map_or(0, |m| m + 1);
        Ok(Partition { block_of, m })
    }

    /// Builds a partition of `{0..n}` from explicit blocks, in any order.
    pub fn from_blocks(n: usize, blocks: &[Vec<usize>]) -> Result<Self, PartitionError> {
        let mut raw = vec![usize::MAX; n];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(PartitionError::Invalid(format!("block {b} is empty")));
            }
            for &i in block {
                if i >= n {
                    return Err(PartitionError::Invalid(format!("point {i} out of range")));
                }
                if raw[i] != usize::MAX {
                    return Err(PartitionError::Invalid(format!("point {i} in two blocks")));
                }
                raw[i] = b;
            }
        }
        if let Some(i) = raw.iter().position(|&b| b == usize::MAX) {
            return Err(PartitionError::Invalid(format!("point {i} not covered")));
        }
        Ok(Self::canonical(&raw))
    }

    /// Relabels arbitrary block ids into restricted-growth form.
    pub(crate) fn canonical(raw: &[usize]) -> Self {
        let mut map: Vec<(usize, usize)> = Vec::new();
        let block_of = raw
            .iter()
            .map(|&r| match map.iter().find(|(k, _)| *k == r) {
                Some(&(_, v)) => v,
                None => {
                    map.push((r, map.len()));
                    map.len() - 1
                }
            })
            .collect();
        Partition { block_of, m: map.len() }
    }

    pub fn n(&self) -> usize {
        self.block_of.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn block_of(&self) -> &[usize] {
        &self.block_of
    }

    /// Blocks ordered by their smallest element; members ascending.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut blocks = vec![Vec::new(); self.m];
        for (i, &b) in self.block_of.iter().enumerate() {
            blocks[b].push(i);
        }
        blocks
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let blocks: Vec<String> = self
            .blocks()
            .iter()
            .map(|b| b.iter().map(usize::to_string).collect::<Vec<_>>().join(","))
            .collect();
        write!(f, "{{{}}}", blocks.join(" | "))
    }
}

/// Restricted-growth-string enumerator over partitions of `{0..n}` into
/// exactly `m` blocks, in lexicographic order.
#[derive(Debug, Clone)]
pub struct Partitions {
    rgs: Vec<usize>,
    // prefix_max[i] = max(rgs[0..=i])
    prefix_max: Vec<usize>,
    m: usize,
    started: bool,
    done: bool,
}

impl Partitions {
    fn new(n: usize, m: usize) -> Self {
        let mut it = Partitions {
            rgs: vec![0; n],
            prefix_max: vec![0; n],
            m,
            started: false,
            done: false,
        };
        it.fill_suffix(1);
        it
    }

    /// Smallest completion of positions `from..n` that still reaches `m` blocks.
    fn fill_suffix(&mut self, from: usize) {
        let n = self.rgs.len();
        let mut max = if from == 0 { 0 } else { self.prefix_max[from - 1] };
        for pos in from..n {
            let remaining = n - pos;
            let missing = self.m - 1 - max;
            let v = if remaining <= missing { max + 1 } else { 0 };
            self.rgs[pos] = v;
            max = max.max(v);
            self.prefix_max[pos] = max;
        }
    }

    fn advance(&mut self) -> bool {
        let n = self.rgs.len();
        for pos in (1..n).rev() {
            let before = self.prefix_max[pos - 1];
            let v = self.rgs[pos] + 1;
            if v > before + 1 || v >= self.m {
                continue;
            }
            let new_max = before.max(v);
            // remaining positions after `pos` must be able to open the missing blocks
            if n - 1 - pos < self.m - 1 - new_max {
                continue;
            }
            self.rgs[pos] = v;
            self.prefix_max[pos] = new_max;
            self.fill_suffix(pos + 1);
            return true;
        }
        false
    }
}

impl Iterator for Partitions {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        if self.done {
            return None;
        }
        if self.started && !self.advance() {
            self.done = true;
            return None;
        }
        self.started = true;
        Some(Partition {
            block_of: self.rgs.clone(),
            m: self.m,
        })
    }
}

/// Every partition of `{0..n}` into exactly `m` non-empty blocks, each once.
pub fn enumerate_partitions(
    n: usize,
    m: usize,
    cap: EnumerationCap,
) -> Result<Partitions, PartitionError> {
    if m == 0 || m > n {
        return Err(PartitionError::BadBlockCount { m, n });
    }
    cap.check(n)?;
    Ok(Partitions::new(n, m))
}

/// Minimum distance between distinct blocks. Infinite for a single block,
/// as a dedicated variant that never enters floating-point arithmetic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Alpha {
    Finite(f64),
    Infinite,
}

impl Alpha {
    pub fn finite(self) -> Option<f64> {
        match self {
            Alpha::Finite(a) => Some(a),
            Alpha::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Alpha::Infinite)
    }

    /// Total order with `Infinite` above every finite value.
    pub fn cmp_total(self, other: Alpha) -> Ordering {
        match (self, other) {
            (Alpha::Finite(a), Alpha::Finite(b)) => a.total_cmp(&b),
            (Alpha::Finite(_), Alpha::Infinite) => Ordering::Less,
            (Alpha::Infinite, Alpha::Finite(_)) => Ordering::Greater,
            (Alpha::Infinite, Alpha::Infinite) => Ordering::Equal,
        }
    }

    fn approx_eq(self, other: Alpha, tol: Tolerance) -> bool {
        match (self, other) {
            (Alpha::Finite(a), Alpha::Finite(b)) => tol.eq(a, b),
            (Alpha::Infinite, Alpha::Infinite) => true,
            _ => false,
        }
    }

    /// `self >= other - tol`.
    fn approx_ge(self, other: Alpha, tol: Tolerance) -> bool {
        match (self, other) {
            (Alpha::Finite(a), Alpha::Finite(b)) => tol.le(b, a),
            (Alpha::Infinite, _) => true,
            (Alpha::Finite(_), Alpha::Infinite) => false,
        }
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Alpha::Finite(a) => write!(f, "{a}"),
            Alpha::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Alpha {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Alpha::Finite(a) => s.serialize_f64(*a),
            Alpha::Infinite => s.serialize_str("inf"),
        }
    }
}

/// `(alpha(D), diam D)` of one partition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdPoint {
    pub alpha: Alpha,
    pub d: f64,
}

impl AdPoint {
    pub fn new(alpha: f64, d: f64) -> Self {
        AdPoint { alpha: Alpha::Finite(alpha), d }
    }

    /// `self` dominates `other`: larger-or-equal alpha and smaller-or-equal d,
    /// with tolerance.
    pub fn dominates(&self, other: &AdPoint, tol: Tolerance) -> bool {
        self.alpha.approx_ge(other.alpha, tol) && tol.le(self.d, other.d)
    }

    pub fn approx_eq(&self, other: &AdPoint, tol: Tolerance) -> bool {
        self.alpha.approx_eq(other.alpha, tol) && tol.eq(self.d, other.d)
    }
}

/// Largest block diameter and smallest cross-block distance of `part`.
pub fn partition_stats(x: &FiniteMetricSpace, part: &Partition) -> AdPoint {
    debug_assert_eq!(x.n(), part.n());
    let block_of = part.block_of();
    let mut d = 0.0_f64;
    let mut alpha = f64::INFINITY;
    for (i, j, dist) in x.pairs() {
        if block_of[i] == block_of[j] {
            d = d.max(dist);
        } else {
            alpha = alpha.min(dist);
        }
    }
    let alpha = if part.m() <= 1 { Alpha::Infinite } else { Alpha::Finite(alpha) };
    AdPoint { alpha, d }
}

/// Statistics of every partition in `D_m(X)`, one entry per partition.
pub fn all_partition_stats(
    x: &FiniteMetricSpace,
    m: usize,
    cap: EnumerationCap,
) -> Result<Vec<AdPoint>, PartitionError> {
    Ok(enumerate_partitions(x.n(), m, cap)?
        .map(|p| partition_stats(x, &p))
        .collect())
}

/// The finite set `AD_m(X)` of `(alpha, d)` pairs, deduplicated, with its
/// Pareto-extreme subset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdCloud {
    pub m: usize,
    pub points: Vec<AdPoint>,
    pub extremes: Vec<AdPoint>,
}

impl AdCloud {
    pub fn from_points(m: usize, raw: &[AdPoint], tol: Tolerance) -> Self {
        let points = dedup_points(raw, tol);
        let extremes = extreme_points(&points, tol);
        AdCloud { m, points, extremes }
    }

    pub fn is_extreme(&self, p: &AdPoint) -> bool {
        self.extremes.iter().any(|e| e == p)
    }
}

pub fn ad_cloud(
    x: &FiniteMetricSpace,
    m: usize,
    cap: EnumerationCap,
    tol: Tolerance,
) -> Result<AdCloud, PartitionError> {
    let raw = all_partition_stats(x, m, cap)?;
    Ok(AdCloud::from_points(m, &raw, tol))
}

fn cmp_points(a: &AdPoint, b: &AdPoint) -> Ordering {
    a.alpha.cmp_total(b.alpha).then(a.d.total_cmp(&b.d))
}

/// Sorted by `(alpha, d)`; points equal within `tol` in both coordinates
/// collapse onto the first one seen.
fn dedup_points(raw: &[AdPoint], tol: Tolerance) -> Vec<AdPoint> {
    let mut sorted = raw.to_vec();
    sorted.sort_by(cmp_points);
    let mut out: Vec<AdPoint> = Vec::with_capacity(sorted.len());
    for p in sorted {
        // near-equal alphas may interleave in sort order, so look back over
        // the run of approximately equal alphas
        let dup = out
            .iter()
            .rev()
            .take_while(|q| q.alpha.approx_eq(p.alpha, tol))
            .any(|q| tol.eq(q.d, p.d));
        if !dup {
            out.push(p);
        }
    }
    out
}

/// Maximal elements under "larger alpha, smaller d", sorted by ascending
/// alpha (and therefore strictly ascending d).
///
/// Sweeps by descending alpha and keeps each point whose d is a strict
/// running minimum. A kept point also evicts earlier kept points whose alpha
/// is within `tol` of its own, since it dominates them.
pub fn extreme_points(points: &[AdPoint], tol: Tolerance) -> Vec<AdPoint> {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| b.alpha.cmp_total(a.alpha).then(a.d.total_cmp(&b.d)));
    let mut kept: Vec<AdPoint> = Vec::new();
    let mut running_min = f64::INFINITY;
    for p in sorted {
        if p.d < running_min - tol.get() {
            while kept.last().is_some_and(|k| p.alpha.approx_ge(k.alpha, tol)) {
                kept.pop();
            }
            running_min = p.d;
            kept.push(p);
        }
    }
    kept.reverse();
    kept
}

/// `alpha_m^-`, `alpha_m^+`, `d_m^-`, `d_m^+` of `X` for `m >= 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Collective {
    pub alpha_minus: f64,
    pub alpha_plus: f64,
    pub d_minus: f64,
    pub d_plus: f64,
}

impl Collective {
    pub fn from_points(points: &[AdPoint]) -> Option<Self> {
        let mut out = Collective {
            alpha_minus: f64::INFINITY,
            alpha_plus: f64::NEG_INFINITY,
            d_minus: f64::INFINITY,
            d_plus: f64::NEG_INFINITY,
        };
        for p in points {
            let a = p.alpha.finite()?;
            out.alpha_minus = out.alpha_minus.min(a);
            out.alpha_plus = out.alpha_plus.max(a);
            out.d_minus = out.d_minus.min(p.d);
            out.d_plus = out.d_plus.max(p.d);
        }
        if points.is_empty() {
            None
        } else {
            Some(out)
        }
    }
}

pub fn collective_characteristics(
    x: &FiniteMetricSpace,
    m: usize,
    cap: EnumerationCap,
) -> Result<Collective, PartitionError> {
    if m < 2 || m > x.n() {
        return Err(PartitionError::BadBlockCount { m, n: x.n() });
    }
    let raw = all_partition_stats(x, m, cap)?;
    Ok(Collective::from_points(&raw).expect("m >= 2 gives finite alphas"))
}
