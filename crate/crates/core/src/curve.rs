//! Exact piecewise-linear form of `lambda -> 2 d_GH(lambda * Delta_m, X)`.

use std::fmt::Write as _;

use serde::Serialize;

use crate::gh::{extreme_value, h, GhError};
use crate::metric::{FiniteMetricSpace, Tolerance};
use crate::partition::{self, AdPoint, EnumerationCap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Slope {
    Down,
    Flat,
    Up,
}

impl Slope {
    pub fn as_f64(self) -> f64 {
        match self {
            Slope::Down => -1.0,
            Slope::Flat => 0.0,
            Slope::Up => 1.0,
        }
    }
}

/// Continuous piecewise-linear function on `lambda >= 0`.
///
/// `slopes[k]` applies between `breakpoints[k]` and `breakpoints[k + 1]`;
/// `tail` applies after the last breakpoint. The first breakpoint sits at
/// `lambda = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewiseLinearCurve {
    breakpoints: Vec<(f64, f64)>,
    slopes: Vec<Slope>,
    tail: Slope,
}

impl PiecewiseLinearCurve {
    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    pub fn slopes(&self) -> &[Slope] {
        &self.slopes
    }

    pub fn tail(&self) -> Slope {
        self.tail
    }

    /// Segment slopes followed by the tail.
    pub fn all_slopes(&self) -> impl Iterator<Item = Slope> + '_ {
        self.slopes.iter().copied().chain(std::iter::once(self.tail))
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        let k = self.breakpoints.partition_point(|&(l, _)| l <= lambda);
        let k = k.saturating_sub(1);
        let (l0, v0) = self.breakpoints[k];
        let slope = self.slopes.get(k).copied().unwrap_or(self.tail);
        v0 + slope.as_f64() * (lambda - l0)
    }

    /// `lambda,value` rows, preceded by a comment line naming `m` and `diam X`.
    pub fn to_csv(&self, m: usize, diam: f64) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# m={m} diam={diam} tail_slope={}", self.tail.as_f64());
        out.push_str("lambda,value\n");
        for &(l, v) in &self.breakpoints {
            let _ = writeln!(out, "{l},{v}");
        }
        out
    }

    /// Human-readable list of segments.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for (k, &(l, v)) in self.breakpoints.iter().enumerate() {
            let (end, slope) = match self.breakpoints.get(k + 1) {
                Some(&(r, _)) => (format!("{r}"), self.slopes[k]),
                None => ("inf".to_string(), self.tail),
            };
            let shape = match slope {
                Slope::Down => "falling (slope -1)",
                Slope::Flat => "constant",
                Slope::Up => "rising (slope +1)",
            };
            let _ = writeln!(out, "[{l}, {end}): {shape}, starts at {v}");
        }
        out
    }
}

/// Slope of `max(diam - lambda, min_e h_e(lambda))` at a point that is not
/// a crossing of any two pieces.
fn slope_at(extremes: &[AdPoint], diam: f64, lambda: f64) -> Slope {
    let mut best = f64::INFINITY;
    let mut best_slope = Slope::Flat;
    for p in extremes {
        let v = h(p.alpha, p.d, lambda);
        let rising = p.alpha.finite().is_some_and(|a| lambda - a > p.d);
        if v < best || (v == best && !rising) {
            best = v;
            best_slope = if rising { Slope::Up } else { Slope::Flat };
        }
    }
    if diam - lambda > best {
        Slope::Down
    } else {
        best_slope
    }
}

/// Builds the curve from the Pareto-extreme points of the `(alpha, d)` cloud.
///
/// Every piece is one of `d_j` (constant), `lambda - alpha_i` (slope +1) or
/// `diam - lambda` (slope -1), so the kinks are among the pairwise
/// crossings `alpha_i + d_j`, `diam - d_j` and `(diam + alpha_i) / 2`. The
/// function is linear between consecutive candidates; collinear neighbours
/// are merged afterwards.
pub fn curve_from_extremes(extremes: &[AdPoint], diam: f64, tol: Tolerance) -> PiecewiseLinearCurve {
    assert!(!extremes.is_empty(), "extreme set is never empty");
    let mut cands = vec![0.0];
    for p in extremes {
        cands.push(diam - p.d);
        if let Some(a) = p.alpha.finite() {
            cands.push((diam + a) / 2.0);
            cands.extend(extremes.iter().map(|q| a + q.d));
        }
    }
    cands.retain(|&l| l >= 0.0 && l.is_finite());
    cands.sort_by(f64::total_cmp);
    cands.dedup_by(|b, a| *b - *a <= tol.get());

    let mut breakpoints: Vec<(f64, f64)> = Vec::with_capacity(cands.len());
    let mut slopes: Vec<Slope> = Vec::with_capacity(cands.len());
    for (k, &l) in cands.iter().enumerate() {
        let next = cands.get(k + 1).copied().unwrap_or(l + 2.0);
        let slope = slope_at(extremes, diam, (l + next) / 2.0);
        if let Some(&last) = slopes.last() {
            if last == slope {
                continue;
            }
        }
        breakpoints.push((l, extreme_value(extremes, diam, l)));
        slopes.push(slope);
    }
    let tail = slopes.pop().expect("at least one segment");
    PiecewiseLinearCurve { breakpoints, slopes, tail }
}

pub fn curve(
    x: &FiniteMetricSpace,
    m: usize,
    cap: EnumerationCap,
    tol: Tolerance,
) -> Result<PiecewiseLinearCurve, GhError> {
    if m == 0 || m > x.n() {
        return Err(partition::PartitionError::BadBlockCount { m, n: x.n() }.into());
    }
    let cloud = partition::ad_cloud(x, m, cap, tol)?;
    Ok(curve_from_extremes(&cloud.extremes, x.diam(), tol))
}
