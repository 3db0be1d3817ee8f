//! Finite metric spaces: validation, loading, generation and the direct
//! ultrametric test.

// Symmetric matrices read most clearly with explicit (i, j) indices.
#![allow(clippy::needless_range_loop)]

use std::collections::HashSet;
use std::fmt;
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Comparison slack applied to every inequality test on distances.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Tolerance(f64);

impl Tolerance {
    pub const DEFAULT: Tolerance = Tolerance(1e-9);

    pub fn new(tol: f64) -> Result<Self, MetricError> {
        if tol.is_finite() && tol >= 0.0 {
            Ok(Tolerance(tol))
        } else {
            Err(MetricError::BadTolerance(tol))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// `a <= b` up to the tolerance.
    pub fn le(self, a: f64, b: f64) -> bool {
        a <= b + self.0
    }

    pub fn eq(self, a: f64, b: f64) -> bool {
        (a - b).abs() <= self.0
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::DEFAULT
    }
}

impl fmt::Display for Tolerance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("empty distance matrix")]
    Empty,
    #[error("row {row} has {len} entries, expected {n}")]
    NotSquare { row: usize, len: usize, n: usize },
    #[error("{labels} labels given for {n} points")]
    LabelCount { labels: usize, n: usize },
    #[error("non-finite distance at ({i}, {j})")]
    NonFinite { i: usize, j: usize },
    #[error("nonzero diagonal entry at ({i}, {i})")]
    NonzeroDiagonal { i: usize },
    #[error("negative distance at ({i}, {j})")]
    NegativeDistance { i: usize, j: usize },
    #[error("matrix is not symmetric at ({i}, {j})")]
    NotSymmetric { i: usize, j: usize },
    #[error("points {i} and {j} coincide (zero distance)")]
    DuplicatePoints { i: usize, j: usize },
    #[error("triangle inequality violated at ({i}, {j}, {via}): |{i}{j}| > |{i}{via}| + |{via}{j}|")]
    TriangleViolation { i: usize, j: usize, via: usize },
    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),
    #[error("operation needs at least two points")]
    SinglePoint,
    #[error("invalid tolerance {0}")]
    BadTolerance(f64),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

/// A validated finite metric space with labelled points.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetricSpace {
    n: usize,
    dist: Vec<f64>,
    labels: Vec<String>,
}

/// On-disk JSON shape of a space. `labels` may be omitted on input.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    pub dist: Vec<Vec<f64>>,
}

pub fn default_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("x{i}")).collect()
}

impl FiniteMetricSpace {
    /// Checks every metric axiom and builds the space.
    ///
    /// Checks run in a fixed order (shape, finiteness, diagonal, sign,
    /// symmetry, distinctness, triangle inequality, labels) and the first
    /// offending entry is reported.
    pub fn validate(
        matrix: &[Vec<f64>],
        labels: Option<Vec<String>>,
        tol: Tolerance,
    ) -> Result<Self, MetricError> {
        let n = matrix.len();
        if n == 0 {
            return Err(MetricError::Empty);
        }
        for (row, r) in matrix.iter().enumerate() {
            if r.len() != n {
                return Err(MetricError::NotSquare { row, len: r.len(), n });
            }
        }
        for (i, r) in matrix.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                if !v.is_finite() {
                    return Err(MetricError::NonFinite { i, j });
                }
            }
        }
        for (i, r) in matrix.iter().enumerate() {
            if r[i] != 0.0 {
                return Err(MetricError::NonzeroDiagonal { i });
            }
        }
        for (i, r) in matrix.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                if v < 0.0 {
                    return Err(MetricError::NegativeDistance { i, j });
                }
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                if matrix[i][j] != matrix[j][i] {
                    return Err(MetricError::NotSymmetric { i, j });
                }
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                if matrix[i][j] == 0.0 {
                    return Err(MetricError::DuplicatePoints { i, j });
                }
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                for via in 0..n {
                    if via == i || via == j {
                        continue;
                    }
                    if !tol.le(matrix[i][j], matrix[i][via] + matrix[via][j]) {
                        return Err(MetricError::TriangleViolation { i, j, via });
                    }
                }
            }
        }
        let labels = match labels {
            Some(l) => {
                if l.len() != n {
                    return Err(MetricError::LabelCount { labels: l.len(), n });
                }
                let mut seen = HashSet::new();
                for s in &l {
                    if !seen.insert(s.as_str()) {
                        return Err(MetricError::DuplicateLabel(s.clone()));
                    }
                }
                l
            }
            None => default_labels(n),
        };
        let dist = matrix.iter().flatten().copied().collect();
        Ok(FiniteMetricSpace { n, dist, labels })
    }

    /// Simplex `lambda * Delta` on `n` points.
    pub fn simplex(n: usize, lambda: f64) -> Result<Self, MetricError> {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { lambda }).collect())
            .collect();
        Self::validate(&rows, None, Tolerance::DEFAULT)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.dist.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    /// Unordered pairs `i < j` with their distance.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| (i + 1..self.n).map(move |j| (i, j, self.dist(i, j))))
    }

    /// Largest pairwise distance; 0 for a single point.
    pub fn diam(&self) -> f64 {
        self.pairs().map(|(_, _, d)| d).fold(0.0, f64::max)
    }

    /// Smallest distance between distinct points.
    pub fn epsilon(&self) -> Result<f64, MetricError> {
        if self.n < 2 {
            return Err(MetricError::SinglePoint);
        }
        Ok(self.pairs().map(|(_, _, d)| d).fold(f64::INFINITY, f64::min))
    }

    /// All non-zero distances equal (within `tol`). A single point counts.
    pub fn is_simplex(&self, tol: Tolerance) -> bool {
        match self.epsilon() {
            Ok(eps) => tol.eq(eps, self.diam()),
            Err(_) => true,
        }
    }

    /// Strong triangle inequality `|xz| <= max(|xy|, |yz|)` over all triples.
    pub fn is_ultrametric_direct(&self, tol: Tolerance) -> bool {
        let n = self.n;
        (0..n).all(|x| {
            (0..n).all(|y| {
                (0..n).all(|z| tol.le(self.dist(x, z), self.dist(x, y).max(self.dist(y, z))))
            })
        })
    }

    pub fn to_record(&self) -> SpaceRecord {
        SpaceRecord {
            labels: Some(self.labels.clone()),
            dist: self.rows(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_record()).expect("space serializes")
    }

    pub fn from_json_str(s: &str, tol: Tolerance) -> Result<Self, MetricError> {
        let rec: SpaceRecord =
            serde_json::from_str(s).map_err(|e| MetricError::Parse(e.to_string()))?;
        Self::validate(&rec.dist, rec.labels, tol)
    }

    /// CSV matrix: an optional label row followed by `n` rows of `n` numbers.
    ///
    /// The first row is taken as labels when any of its fields fails to
    /// parse as a number.
    pub fn from_csv_reader<R: Read>(reader: R, tol: Tolerance) -> Result<Self, MetricError> {
        let (rows, labels) = parse_csv(reader)?;
        Self::validate(&rows, labels, tol)
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.labels.join(",");
        out.push('\n');
        for row in self.dist.chunks(self.n) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Loads a `.json` file as JSON and anything else as CSV.
    pub fn load(path: &Path, tol: Tolerance) -> Result<Self, MetricError> {
        let bytes = std::fs::read(path).map_err(|e| MetricError::Io(e.to_string()))?;
        let is_json = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"));
        if is_json {
            let s = std::str::from_utf8(&bytes).map_err(|e| MetricError::Parse(e.to_string()))?;
            Self::from_json_str(s, tol)
        } else {
            Self::from_csv_reader(bytes.as_slice(), tol)
        }
    }
}

type ParsedCsv = (Vec<Vec<f64>>, Option<Vec<String>>);

fn parse_csv<R: Read>(reader: R) -> Result<ParsedCsv, MetricError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| MetricError::Parse(e.to_string()))?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        records.push(rec);
    }
    if records.is_empty() {
        return Err(MetricError::Parse("no rows".into()));
    }
    let mut labels = None;
    if records[0].iter().any(|f| f.parse::<f64>().is_err()) {
        labels = Some(records[0].iter().map(str::to_owned).collect::<Vec<_>>());
        records.remove(0);
        if records.is_empty() {
            return Err(MetricError::Parse("label row without data".into()));
        }
    }
    let mut rows = Vec::with_capacity(records.len());
    for (r, rec) in records.iter().enumerate() {
        let row = rec
            .iter()
            .enumerate()
            .map(|(c, f)| {
                f.parse::<f64>().map_err(|_| {
                    MetricError::Parse(format!("row {r}, column {c}: {f:?} is not a number"))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok((rows, labels))
}

/// All-pairs shortest-path closure (Floyd–Warshall) of a symmetric matrix.
///
/// The result satisfies the triangle inequality exactly in floating point up
/// to one rounding per comparison.
pub fn metric_closure(rows: &mut [Vec<f64>]) {
    let n = rows.len();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = rows[i][k] + rows[k][j];
                if via < rows[i][j] {
                    rows[i][j] = via;
                }
            }
        }
    }
}

// Entries below this after closure are re-drawn.
const MIN_GENERATED_DISTANCE: f64 = 1e-6;
const MIN_MERGE_GAP: f64 = 1e-6;

/// Random metric space on `n` points, deterministic in `seed`.
///
/// Off-diagonal entries are drawn uniformly from (0, 1], then repaired by
/// shortest-path closure.
pub fn gen_random_metric(n: usize, seed: u64) -> FiniteMetricSpace {
    assert!(n >= 1, "need at least one point");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let v = 1.0 - rng.gen::<f64>();
                rows[i][j] = v;
                rows[j][i] = v;
            }
        }
        metric_closure(&mut rows);
        let collapsed = (0..n).any(|i| (i + 1..n).any(|j| rows[i][j] < MIN_GENERATED_DISTANCE));
        if collapsed {
            continue;
        }
        symmetrize(&mut rows);
        return FiniteMetricSpace::validate(&rows, None, Tolerance::DEFAULT)
            .expect("closure output is a metric");
    }
}

/// Random ultrametric on `n` points, deterministic in `seed`.
///
/// Builds a random binary merge tree over the leaves. Merge heights are drawn
/// from (0, 1], sorted, and pushed apart to a gap of at least 1e-6, so the
/// heights are strictly increasing. The distance between two leaves is the
/// height at which their clusters merge.
pub fn gen_random_ultrametric(n: usize, seed: u64) -> FiniteMetricSpace {
    assert!(n >= 1, "need at least one point");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut heights: Vec<f64> = (0..n.saturating_sub(1)).map(|_| 1.0 - rng.gen::<f64>()).collect();
    heights.sort_by(f64::total_cmp);
    for k in 1..heights.len() {
        if heights[k] < heights[k - 1] + MIN_MERGE_GAP {
            heights[k] = heights[k - 1] + MIN_MERGE_GAP;
        }
    }
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut rows = vec![vec![0.0; n]; n];
    for &h in &heights {
        clusters.shuffle(&mut rng);
        let a = clusters.pop().expect("at least two clusters");
        let b = clusters.pop().expect("at least two clusters");
        for &i in &a {
            for &j in &b {
                rows[i][j] = h;
                rows[j][i] = h;
            }
        }
        clusters.push(a.into_iter().chain(b).collect());
    }
    FiniteMetricSpace::validate(&rows, None, Tolerance::DEFAULT)
        .expect("merge-tree distances form an ultrametric")
}

// Floyd–Warshall keeps the matrix symmetric in exact arithmetic, but the two
// triangles can pick different (equal-length) paths with different rounding.
fn symmetrize(rows: &mut [Vec<f64>]) {
    let n = rows.len();
    for i in 0..n {
        for j in i + 1..n {
            let v = rows[i][j].min(rows[j][i]);
            rows[i][j] = v;
            rows[j][i] = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x3() -> FiniteMetricSpace {
        FiniteMetricSpace::validate(
            &[vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 2.0], vec![2.0, 2.0, 0.0]],
            Some(vec!["a".into(), "b".into(), "c".into()]),
            Tolerance::DEFAULT,
        )
        .unwrap()
    }

    #[test]
    fn validates_two_points() {
        let x = FiniteMetricSpace::validate(&[vec![0.0, 1.0], vec![1.0, 0.0]], None, Tolerance::DEFAULT)
            .unwrap();
        assert_eq!(x.n(), 2);
        assert_eq!(x.diam(), 1.0);
    }

    #[test]
    fn rejects_bad_matrices() {
        let t = Tolerance::DEFAULT;
        let v = |m: &[Vec<f64>]| FiniteMetricSpace::validate(m, None, t).unwrap_err();
        assert_eq!(v(&[vec![0.0, 1.0], vec![2.0, 0.0]]), MetricError::NotSymmetric { i: 0, j: 1 });
        assert_eq!(
            v(&[vec![0.0, 1.0, 3.0], vec![1.0, 0.0, 1.0], vec![3.0, 1.0, 0.0]]),
            MetricError::TriangleViolation { i: 0, j: 2, via: 1 }
        );
        assert_eq!(v(&[vec![1.0]]), MetricError::NonzeroDiagonal { i: 0 });
        assert_eq!(v(&[vec![0.0, -1.0], vec![-1.0, 0.0]]), MetricError::NegativeDistance { i: 0, j: 1 });
        assert_eq!(v(&[vec![0.0, 0.0], vec![0.0, 0.0]]), MetricError::DuplicatePoints { i: 0, j: 1 });
        assert_eq!(v(&[vec![0.0, 1.0]]), MetricError::NotSquare { row: 0, len: 2, n: 1 });
        assert_eq!(v(&[]), MetricError::Empty);
        let err = FiniteMetricSpace::validate(
            &[vec![0.0, 1.0], vec![1.0, 0.0]],
            Some(vec!["a".into(), "a".into()]),
            t,
        )
        .unwrap_err();
        assert_eq!(err, MetricError::DuplicateLabel("a".into()));
    }

    #[test]
    fn triangle_slack_uses_tolerance() {
        let m = [vec![0.0, 1.0, 2.0 + 1e-12], vec![1.0, 0.0, 1.0], vec![2.0 + 1e-12, 1.0, 0.0]];
        assert!(FiniteMetricSpace::validate(&m, None, Tolerance::DEFAULT).is_ok());
        assert!(FiniteMetricSpace::validate(&m, None, Tolerance::new(0.0).unwrap()).is_err());
    }

    #[test]
    fn diam_and_epsilon() {
        let single = FiniteMetricSpace::validate(&[vec![0.0]], None, Tolerance::DEFAULT).unwrap();
        assert_eq!(single.diam(), 0.0);
        assert_eq!(single.epsilon(), Err(MetricError::SinglePoint));
        let x = x3();
        assert_eq!(x.diam(), 2.0);
        assert_eq!(x.epsilon().unwrap(), 1.0);
        let s = FiniteMetricSpace::simplex(4, 3.0).unwrap();
        assert_eq!(s.epsilon().unwrap(), 3.0);
        assert_eq!(s.diam(), 3.0);
        assert!(s.is_simplex(Tolerance::DEFAULT));
        assert!(!x.is_simplex(Tolerance::DEFAULT));
    }

    #[test]
    fn direct_ultrametric_check() {
        let t = Tolerance::DEFAULT;
        assert!(x3().is_ultrametric_direct(t));
        let bad = FiniteMetricSpace::validate(
            &[vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]],
            None,
            t,
        )
        .unwrap();
        assert!(!bad.is_ultrametric_direct(t));
        assert!(FiniteMetricSpace::simplex(5, 0.7).unwrap().is_ultrametric_direct(t));
    }

    #[test]
    fn csv_with_and_without_labels() {
        let t = Tolerance::DEFAULT;
        let x = FiniteMetricSpace::from_csv_reader("a,b,c\n0,1,2\n1,0,2\n2,2,0\n".as_bytes(), t).unwrap();
        assert_eq!(x, x3());
        let y = FiniteMetricSpace::from_csv_reader("0, 1.5\n1.5, 0\n".as_bytes(), t).unwrap();
        assert_eq!(y.labels(), &["x0".to_string(), "x1".to_string()]);
        assert_eq!(y.dist(0, 1), 1.5);
        assert!(matches!(
            FiniteMetricSpace::from_csv_reader("".as_bytes(), t),
            Err(MetricError::Parse(_))
        ));
        assert!(matches!(
            FiniteMetricSpace::from_csv_reader("0,1\n1,zz\n".as_bytes(), t),
            Err(MetricError::Parse(_))
        ));
    }

    #[test]
    fn json_round_trip() {
        let x = x3();
        let back = FiniteMetricSpace::from_json_str(&x.to_json(), Tolerance::DEFAULT).unwrap();
        assert_eq!(back, x);
        let unlabeled =
            FiniteMetricSpace::from_json_str(r#"{"dist": [[0, 2], [2, 0]]}"#, Tolerance::DEFAULT).unwrap();
        assert_eq!(unlabeled.labels()[1], "x1");
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(gen_random_metric(1, 9).n(), 1);
        assert_eq!(gen_random_metric(5, 42), gen_random_metric(5, 42));
        assert_ne!(gen_random_metric(5, 42), gen_random_metric(5, 43));
        assert_eq!(gen_random_ultrametric(6, 1), gen_random_ultrametric(6, 1));
        let x = gen_random_metric(6, 7);
        assert!(FiniteMetricSpace::validate(&x.rows(), None, Tolerance::DEFAULT).is_ok());
    }

    #[test]
    fn two_point_ultrametric_uses_single_height() {
        let x = gen_random_ultrametric(2, 5);
        assert!(x.dist(0, 1) > 0.0 && x.dist(0, 1) <= 1.0);
        assert!(gen_random_ultrametric(8, 3).is_ultrametric_direct(Tolerance::DEFAULT));
    }
}
