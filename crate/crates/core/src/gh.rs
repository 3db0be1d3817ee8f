//! Gromov–Hausdorff distance from a finite metric space `X` to the simplex
//! `lambda * Delta_m`, by every available route.
//!
//! Every value here is the doubled distance `2 * d_GH(lambda * Delta_m, X)`.

use std::fmt;
use std::str::FromStr;

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::metric::{FiniteMetricSpace, MetricError, Tolerance};
use crate::mst::{self, MstSpectrum};
use crate::partition::{
    self, AdPoint, Alpha, Collective, EnumerationCap, PartitionError,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GhError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error("lambda must be a positive finite number, got {0}")]
    BadLambda(f64),
    #[error("space is not ultrametric")]
    NotUltrametric,
    #[error("no closed form for m = {m} with n = {n}; use the extreme-point route")]
    NoClosedForm { m: usize, n: usize },
    #[error("collective thresholds out of order: a = {a} is not below b = {b}")]
    CollectiveOrder { a: f64, b: f64 },
    #[error("the {0} route needs a finite simplex size m <= n")]
    NeedsFiniteM(Route),
}

/// Cardinality of the simplex: a concrete `m`, or any cardinality above `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimplexSize {
    Finite(usize),
    GreaterThanN,
}

impl FromStr for SimplexSize {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s.eq_ignore_ascii_case(">n") {
            return Ok(SimplexSize::GreaterThanN);
        }
        match s.parse::<usize>() {
            Ok(0) | Err(_) => Err(format!("expected a positive integer or \">n\", got {s:?}")),
            Ok(m) => Ok(SimplexSize::Finite(m)),
        }
    }
}

impl fmt::Display for SimplexSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimplexSize::Finite(m) => write!(f, "{m}"),
            SimplexSize::GreaterThanN => f.write_str(">n"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Route {
    BruteForce,
    ExtremePoints,
    Collective,
    OnePoint,
    EqualCardinality,
    LargeSimplex,
    Ultrametric,
}

impl Route {
    pub fn as_str(self) -> &'static str {
        match self {
            Route::BruteForce => "bruteforce",
            Route::ExtremePoints => "extreme",
            Route::Collective => "collective",
            Route::OnePoint => "one-point",
            Route::EqualCardinality => "equal-card",
            Route::LargeSimplex => "large-simplex",
            Route::Ultrametric => "ultrametric",
        }
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Route {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimate {
    Exact(f64),
    /// Two-sided bound; the true value lies in `[lower, upper]`.
    Interval { lower: f64, upper: f64 },
}

impl Serialize for Estimate {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match *self {
            Estimate::Exact(v) => s.serialize_f64(v),
            Estimate::Interval { lower, upper } => {
                let mut map = s.serialize_map(Some(2))?;
                map.serialize_entry("lower", &lower)?;
                map.serialize_entry("upper", &upper)?;
                map.end()
            }
        }
    }
}

/// A doubled distance together with the route that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GhValue {
    pub estimate: Estimate,
    pub route: Route,
}

impl GhValue {
    fn exact(value: f64, route: Route) -> Self {
        GhValue { estimate: Estimate::Exact(value), route }
    }

    pub fn as_exact(&self) -> Option<f64> {
        match self.estimate {
            Estimate::Exact(v) => Some(v),
            Estimate::Interval { .. } => None,
        }
    }

    /// How far `v` lies from this estimate: `|value - v|` when exact, the
    /// distance to the interval otherwise (0 inside).
    pub fn discrepancy(&self, v: f64) -> f64 {
        match self.estimate {
            Estimate::Exact(x) => (x - v).abs(),
            Estimate::Interval { lower, upper } => (lower - v).max(v - upper).max(0.0),
        }
    }

    pub fn halved(&self) -> Estimate {
        match self.estimate {
            Estimate::Exact(v) => Estimate::Exact(v / 2.0),
            Estimate::Interval { lower, upper } => Estimate::Interval {
                lower: lower / 2.0,
                upper: upper / 2.0,
            },
        }
    }
}

impl fmt::Display for Estimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Estimate::Exact(v) => write!(f, "{v}"),
            Estimate::Interval { lower, upper } => write!(f, "[{lower}, {upper}]"),
        }
    }
}

fn check_lambda(lambda: f64) -> Result<(), GhError> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(GhError::BadLambda(lambda))
    }
}

fn check_m(x: &FiniteMetricSpace, m: usize) -> Result<(), GhError> {
    if m == 0 || m > x.n() {
        Err(PartitionError::BadBlockCount { m, n: x.n() }.into())
    } else {
        Ok(())
    }
}

/// The angle `max(d, lambda - alpha)`; just `d` when alpha is infinite.
pub fn h(alpha: Alpha, d: f64, lambda: f64) -> f64 {
    match alpha {
        Alpha::Finite(a) => d.max(lambda - a),
        Alpha::Infinite => d,
    }
}

/// Minimum of `max(diam D, lambda - alpha(D), diam X - lambda)` over the
/// given per-partition statistics.
pub fn bruteforce_from_stats(stats: &[AdPoint], diam: f64, lambda: f64) -> f64 {
    stats
        .iter()
        .map(|p| h(p.alpha, p.d, lambda).max(diam - lambda))
        .fold(f64::INFINITY, f64::min)
}

/// `max(diam X - lambda, min over extremes of h)`.
pub fn extreme_value(extremes: &[AdPoint], diam: f64, lambda: f64) -> f64 {
    let envelope = extremes
        .iter()
        .map(|p| h(p.alpha, p.d, lambda))
        .fold(f64::INFINITY, f64::min);
    envelope.max(diam - lambda)
}

/// Infimum over every partition of `X` into `m` blocks.
pub fn gh_bruteforce(
    x: &FiniteMetricSpace,
    m: usize,
    lambda: f64,
    cap: EnumerationCap,
) -> Result<GhValue, GhError> {
    check_lambda(lambda)?;
    check_m(x, m)?;
    let stats = partition::all_partition_stats(x, m, cap)?;
    Ok(GhValue::exact(
        bruteforce_from_stats(&stats, x.diam(), lambda),
        Route::BruteForce,
    ))
}

/// Evaluates only the Pareto-extreme `(alpha, d)` pairs.
pub fn gh_extreme(
    x: &FiniteMetricSpace,
    m: usize,
    lambda: f64,
    cap: EnumerationCap,
    tol: Tolerance,
) -> Result<GhValue, GhError> {
    check_lambda(lambda)?;
    check_m(x, m)?;
    let cloud = partition::ad_cloud(x, m, cap, tol)?;
    Ok(GhValue::exact(
        extreme_value(&cloud.extremes, x.diam(), lambda),
        Route::ExtremePoints,
    ))
}

/// `m = 1`: half the diameter, independent of lambda.
pub fn gh_one_point(x: &FiniteMetricSpace, lambda: f64) -> Result<GhValue, GhError> {
    check_lambda(lambda)?;
    Ok(GhValue::exact(x.diam(), Route::OnePoint))
}

/// `m > n`: `max(lambda, diam X - lambda)`.
pub fn gh_large_simplex(x: &FiniteMetricSpace, lambda: f64) -> Result<GhValue, GhError> {
    check_lambda(lambda)?;
    Ok(GhValue::exact(lambda.max(x.diam() - lambda), Route::LargeSimplex))
}

/// `m = n`: `max(lambda - eps(X), diam X - lambda)`.
pub fn gh_equal_card(x: &FiniteMetricSpace, lambda: f64) -> Result<GhValue, GhError> {
    check_lambda(lambda)?;
    let eps = x.epsilon()?;
    Ok(GhValue::exact(
        (lambda - eps).max(x.diam() - lambda),
        Route::EqualCardinality,
    ))
}

/// Which of the collective-characteristic cases applies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum CollectiveCase {
    /// `2 d_m^+ > diam X - alpha_m`, with thresholds `a < b`.
    Split { a: f64, b: f64 },
    /// `2 d_m^+ <= diam X - alpha_m`.
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollectiveBranch {
    /// `lambda <= a`
    Low,
    /// `a < lambda < b`, interval-valued
    Middle,
    /// `lambda >= b`
    High,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollectiveAnalysis {
    pub chars: Collective,
    pub diam: f64,
    pub case: CollectiveCase,
}

impl CollectiveAnalysis {
    /// Classifies the case and computes the thresholds. Fails when case 1
    /// triggers but `a < b` does not hold.
    pub fn new(chars: Collective, diam: f64) -> Result<Self, GhError> {
        let Collective { alpha_minus, alpha_plus, d_minus, d_plus } = chars;
        let case = if 2.0 * d_plus > diam - alpha_plus {
            let a = (alpha_minus + d_minus)
                .max((diam + alpha_minus) / 2.0)
                .max(diam - d_plus);
            let b = alpha_plus + d_plus;
            if a.partial_cmp(&b) != Some(std::cmp::Ordering::Less) {
                return Err(GhError::CollectiveOrder { a, b });
            }
            CollectiveCase::Split { a, b }
        } else {
            CollectiveCase::Direct
        };
        Ok(CollectiveAnalysis { chars, diam, case })
    }

    pub fn branch(&self, lambda: f64) -> CollectiveBranch {
        match self.case {
            CollectiveCase::Direct => CollectiveBranch::Direct,
            CollectiveCase::Split { a, .. } if lambda <= a => CollectiveBranch::Low,
            CollectiveCase::Split { b, .. } if lambda >= b => CollectiveBranch::High,
            CollectiveCase::Split { .. } => CollectiveBranch::Middle,
        }
    }

    pub fn evaluate(&self, lambda: f64) -> GhValue {
        let c = &self.chars;
        let diam = self.diam;
        let estimate = match self.branch(lambda) {
            CollectiveBranch::Direct => Estimate::Exact((diam - lambda).max(lambda - c.alpha_plus)),
            CollectiveBranch::Low => Estimate::Exact((diam - lambda).max(c.d_minus)),
            CollectiveBranch::High => Estimate::Exact(lambda - c.alpha_plus),
            CollectiveBranch::Middle => Estimate::Interval {
                lower: (diam - lambda).max(c.d_minus).max(lambda - c.alpha_plus),
                upper: c.d_plus.min(lambda - c.alpha_minus),
            },
        };
        GhValue { estimate, route: Route::Collective }
    }
}

pub fn collective_analysis(
    x: &FiniteMetricSpace,
    m: usize,
    cap: EnumerationCap,
) -> Result<CollectiveAnalysis, GhError> {
    let chars = partition::collective_characteristics(x, m, cap)?;
    CollectiveAnalysis::new(chars, x.diam())
}

/// Case formulas in terms of `alpha_m^+-` and `d_m^+-`; needs `2 <= m <= n`.
pub fn gh_collective(
    x: &FiniteMetricSpace,
    m: usize,
    lambda: f64,
    cap: EnumerationCap,
) -> Result<GhValue, GhError> {
    check_lambda(lambda)?;
    Ok(collective_analysis(x, m, cap)?.evaluate(lambda))
}

/// Closed form for an ultrametric space with `n` points from its spectrum.
/// `sigma_1` is read as `diam X`, which also covers `n = 1`.
pub fn ultra_closed_form(
    sigma: &MstSpectrum,
    diam: f64,
    n: usize,
    m: SimplexSize,
    lambda: f64,
) -> f64 {
    match m {
        SimplexSize::Finite(1) => diam,
        SimplexSize::Finite(m) if m < n => {
            (diam - lambda).max(sigma.sigma(m)).max(lambda - sigma.sigma(m - 1))
        }
        SimplexSize::Finite(m) => {
            debug_assert_eq!(m, n);
            (diam - lambda).max(lambda - sigma.sigma(n - 1))
        }
        SimplexSize::GreaterThanN => (diam - lambda).max(lambda),
    }
}

/// Spectrum formula; rejects spaces that fail the spanning-tree ultrametric
/// criterion.
pub fn gh_ultra(
    x: &FiniteMetricSpace,
    m: SimplexSize,
    lambda: f64,
    tol: Tolerance,
) -> Result<GhValue, GhError> {
    check_lambda(lambda)?;
    if let SimplexSize::Finite(k) = m {
        check_m(x, k)?;
    }
    if !mst::is_ultrametric_via_mst(x, tol) {
        return Err(GhError::NotUltrametric);
    }
    let sigma = mst::spectrum(x);
    Ok(GhValue::exact(
        ultra_closed_form(&sigma, x.diam(), x.n(), m, lambda),
        Route::Ultrametric,
    ))
}

/// Route requested by the caller; `Auto` picks the cheapest exact one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RouteChoice {
    #[default]
    Auto,
    Ultrametric,
    ClosedForm,
    Extreme,
    Collective,
    BruteForce,
}

impl FromStr for RouteChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "auto" => RouteChoice::Auto,
            "ultra" | "ultrametric" => RouteChoice::Ultrametric,
            "closed" | "closed-form" => RouteChoice::ClosedForm,
            "extreme" => RouteChoice::Extreme,
            "collective" => RouteChoice::Collective,
            "bruteforce" | "brute-force" => RouteChoice::BruteForce,
            _ => return Err(format!("unknown route {s:?}")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispatchOptions {
    pub route: RouteChoice,
    pub verify: bool,
    pub cap: EnumerationCap,
    pub tol: Tolerance,
}

impl Default for DispatchOptions {
    fn default() -> Self {
        DispatchOptions {
            route: RouteChoice::Auto,
            verify: false,
            cap: EnumerationCap::DEFAULT,
            tol: Tolerance::DEFAULT,
        }
    }
}

/// Result of [`gh_dispatch`]; serializes to the JSON result record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispatchReport {
    pub value: GhValue,
    /// Set when a cross-check ran and agreed within tolerance.
    pub verified: bool,
    /// Distance from the cross-check value; `None` when no check ran.
    pub discrepancy: Option<f64>,
}

impl DispatchReport {
    pub fn check_ran(&self) -> bool {
        self.discrepancy.is_some()
    }
}

impl Serialize for DispatchReport {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(4))?;
        map.serialize_entry("two_d_gh", &self.value.estimate)?;
        map.serialize_entry("route", &self.value.route)?;
        map.serialize_entry("verified", &self.verified)?;
        map.serialize_entry("discrepancy", &self.discrepancy)?;
        map.end()
    }
}

fn closed_form(x: &FiniteMetricSpace, m: SimplexSize, lambda: f64) -> Result<GhValue, GhError> {
    match m {
        SimplexSize::Finite(1) => gh_one_point(x, lambda),
        SimplexSize::Finite(k) if k == x.n() => gh_equal_card(x, lambda),
        SimplexSize::Finite(k) => Err(GhError::NoClosedForm { m: k, n: x.n() }),
        SimplexSize::GreaterThanN => gh_large_simplex(x, lambda),
    }
}

fn finite_or(m: SimplexSize, route: Route) -> Result<usize, GhError> {
    match m {
        SimplexSize::Finite(k) => Ok(k),
        SimplexSize::GreaterThanN => Err(GhError::NeedsFiniteM(route)),
    }
}

/// Picks a route, evaluates it, and with `verify` cross-checks the result
/// against brute force (or the large-simplex formula when `m > n`).
pub fn gh_dispatch(
    x: &FiniteMetricSpace,
    m: SimplexSize,
    lambda: f64,
    opts: DispatchOptions,
) -> Result<DispatchReport, GhError> {
    check_lambda(lambda)?;
    if let SimplexSize::Finite(k) = m {
        check_m(x, k)?;
    }
    let DispatchOptions { route, verify, cap, tol } = opts;
    let value = match route {
        RouteChoice::Auto => {
            if mst::is_ultrametric_via_mst(x, tol) {
                gh_ultra(x, m, lambda, tol)?
            } else {
                match closed_form(x, m, lambda) {
                    Err(GhError::NoClosedForm { m, .. }) => gh_extreme(x, m, lambda, cap, tol)?,
                    other => other?,
                }
            }
        }
        RouteChoice::Ultrametric => gh_ultra(x, m, lambda, tol)?,
        RouteChoice::ClosedForm => closed_form(x, m, lambda)?,
        RouteChoice::Extreme => {
            gh_extreme(x, finite_or(m, Route::ExtremePoints)?, lambda, cap, tol)?
        }
        RouteChoice::Collective => {
            gh_collective(x, finite_or(m, Route::Collective)?, lambda, cap)?
        }
        RouteChoice::BruteForce => {
            gh_bruteforce(x, finite_or(m, Route::BruteForce)?, lambda, cap)?
        }
    };
    let mut report = DispatchReport { value, verified: false, discrepancy: None };
    if verify {
        let reference = match m {
            SimplexSize::Finite(k) if cap.check(x.n()).is_ok() => {
                Some(gh_bruteforce(x, k, lambda, cap)?)
            }
            SimplexSize::Finite(_) => None,
            SimplexSize::GreaterThanN => Some(gh_large_simplex(x, lambda)?),
        };
        if let Some(reference) = reference.and_then(|r| r.as_exact()) {
            let disc = value.discrepancy(reference);
            report.discrepancy = Some(disc);
            report.verified = disc <= tol.get();
        }
    }
    Ok(report)
}
