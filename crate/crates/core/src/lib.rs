//! Gromov–Hausdorff distances between a finite metric space and simplexes.
//!
//! A simplex `lambda * Delta_m` is the `m`-point space with every non-zero
//! distance equal to `lambda`. This crate computes
//! `2 d_GH(lambda * Delta_m, X)` for a finite metric space `X` by several
//! independent routes so they can be checked against each other:
//!
//! * [`gh::gh_bruteforce`]: infimum over every partition of `X` into `m`
//!   blocks;
//! * [`gh::gh_extreme`]: the same infimum restricted to the Pareto-extreme
//!   `(alpha, d)` pairs;
//! * [`gh::gh_collective`]: case formulas in the collective characteristics
//!   `alpha_m^+-`, `d_m^+-`, one branch of which is only a two-sided bound;
//! * [`gh::gh_one_point`], [`gh::gh_equal_card`], [`gh::gh_large_simplex`]:
//!   closed forms for `m = 1`, `m = n` and `m > n`;
//! * [`gh::gh_ultra`]: closed form for ultrametric `X` in terms of its
//!   mst-spectrum.
//!
//! [`curve::curve`] gives the whole function of `lambda` as an exact
//! piecewise-linear curve, and [`gh::gh_dispatch`] picks a route and
//! optionally verifies it.
//!
//! ```
//! use gh_simplex::prelude::*;
//!
//! let x = FiniteMetricSpace::validate(
//!     &[vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 2.0], vec![2.0, 2.0, 0.0]],
//!     None,
//!     Tolerance::DEFAULT,
//! )
//! .unwrap();
//! let v = gh_bruteforce(&x, 2, 1.5, EnumerationCap::DEFAULT).unwrap();
//! assert_eq!(v.as_exact(), Some(1.0));
//! ```

pub mod curve;
pub mod gh;
pub mod metric;
pub mod mst;
pub mod partition;
pub mod selftest;

pub mod prelude {
    pub use crate::curve::{curve, PiecewiseLinearCurve, Slope};
    pub use crate::gh::{
        gh_bruteforce, gh_collective, gh_dispatch, gh_equal_card, gh_extreme, gh_large_simplex,
        gh_one_point, gh_ultra, h, DispatchOptions, DispatchReport, Estimate, GhError, GhValue,
        Route, RouteChoice, SimplexSize,
    };
    pub use crate::metric::{
        gen_random_metric, gen_random_ultrametric, FiniteMetricSpace, MetricError, Tolerance,
    };
    pub use crate::mst::{build_mst, is_ultrametric_via_mst, spectrum, MstSpectrum, MstTree};
    pub use crate::partition::{
        ad_cloud, collective_characteristics, enumerate_partitions, extreme_points,
        partition_stats, AdCloud, AdPoint, Alpha, EnumerationCap, Partition,
    };
}
