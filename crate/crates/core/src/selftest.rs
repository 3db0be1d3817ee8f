//! Cross-validation suites over generated spaces: every route is checked
//! against brute force or its sibling route. Used by `gh-simplex selftest`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::curve::curve_from_extremes;
use crate::gh::{
    bruteforce_from_stats, extreme_value, gh_large_simplex, ultra_closed_form, CollectiveAnalysis,
    CollectiveCase, SimplexSize,
};
use crate::metric::{gen_random_metric, gen_random_ultrametric, FiniteMetricSpace, SpaceRecord, Tolerance};
use crate::mst::{build_mst_with_scan_order, is_ultrametric_via_mst, spectrum};
use crate::partition::{self, AdCloud, AdPoint, Collective, EnumerationCap};

/// Deliberate corruption of one formula, to check that the suites catch it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Adds 1e-3 to every ultrametric closed-form value.
    UltraOffset,
}

#[derive(Debug, Clone)]
pub struct SelftestConfig {
    /// Spaces per suite.
    pub spaces: u64,
    /// Largest generated space; also bounded by `cap`.
    pub max_n: usize,
    pub cap: EnumerationCap,
    pub tol: Tolerance,
    pub fault: Option<Fault>,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        SelftestConfig {
            spaces: 20,
            max_n: 8,
            cap: EnumerationCap::DEFAULT,
            tol: Tolerance::DEFAULT,
            fault: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
}

/// Everything needed to rerun a failing case without the generator.
#[derive(Debug, Clone, Serialize)]
pub struct Replay {
    pub suite: &'static str,
    pub space: SpaceRecord,
    pub m: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub detail: String,
}

impl Replay {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("replay serializes")
    }
}

fn fail(
    suite: &'static str,
    x: &FiniteMetricSpace,
    m: impl ToString,
    lambda: Option<f64>,
    detail: String,
) -> Box<Replay> {
    Box::new(Replay { suite, space: x.to_record(), m: m.to_string(), lambda, detail })
}

type SuiteResult = Result<usize, Box<Replay>>;

/// Breakpoint-covering verification grid for one `(X, m)`.
///
/// Includes every `alpha + d` over all pairs of cloud coordinates,
/// `diam - d`, `(diam + alpha) / 2`, `diam`, the collective thresholds when
/// given, `fillers` uniform points on `(0, 2 diam]`, and the midpoint of
/// every consecutive pair.
pub fn lambda_grid(diam: f64, cloud: &[AdPoint], thresholds: &[f64], fillers: usize) -> Vec<f64> {
    let alphas: Vec<f64> = cloud.iter().filter_map(|p| p.alpha.finite()).collect();
    let mut grid = vec![diam];
    grid.extend_from_slice(thresholds);
    for p in cloud {
        grid.push(diam - p.d);
        grid.extend(alphas.iter().map(|a| a + p.d));
    }
    grid.extend(alphas.iter().map(|a| (diam + a) / 2.0));
    let top = if diam > 0.0 { 2.0 * diam } else { 1.0 };
    grid.extend((1..=fillers).map(|k| top * k as f64 / fillers as f64));
    grid.retain(|&l| l > 0.0 && l.is_finite());
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mids: Vec<f64> = grid.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
    grid.extend(mids);
    grid.sort_by(f64::total_cmp);
    grid
}

fn thresholds(an: &CollectiveAnalysis) -> Vec<f64> {
    match an.case {
        CollectiveCase::Split { a, b } => vec![a, b],
        CollectiveCase::Direct => vec![],
    }
}

impl SelftestConfig {
    fn sizes(&self) -> impl Iterator<Item = (u64, usize)> + '_ {
        let top = self.max_n.min(self.cap.0).max(3);
        (0..self.spaces).map(move |seed| (seed, 3 + (seed as usize) % (top - 2)))
    }

    fn metric_spaces(&self) -> impl Iterator<Item = FiniteMetricSpace> + '_ {
        self.sizes().map(|(seed, n)| gen_random_metric(n, seed))
    }

    fn ultrametric_spaces(&self) -> impl Iterator<Item = FiniteMetricSpace> + '_ {
        self.sizes().map(|(seed, n)| gen_random_ultrametric(n, 1000 + seed))
    }

    fn extreme_vs_bruteforce(&self) -> SuiteResult {
        let mut cases = 0;
        for x in self.metric_spaces() {
            let diam = x.diam();
            for m in 2..=x.n() {
                let stats = partition::all_partition_stats(&x, m, self.cap).expect("under cap");
                let cloud = AdCloud::from_points(m, &stats, self.tol);
                for lambda in lambda_grid(diam, &cloud.points, &[], 20) {
                    let bf = bruteforce_from_stats(&stats, diam, lambda);
                    let ex = extreme_value(&cloud.extremes, diam, lambda);
                    if (bf - ex).abs() > self.tol.get() {
                        return Err(fail("extreme-vs-bruteforce", &x, m, Some(lambda), format!("extreme {ex} vs brute force {bf}")));
                    }
                    cases += 1;
                }
            }
        }
        Ok(cases)
    }

    fn ultra_vs_oracle(&self) -> SuiteResult {
        let mut cases = 0;
        let offset = if self.fault == Some(Fault::UltraOffset) { 1e-3 } else { 0.0 };
        for x in self.ultrametric_spaces() {
            let (n, diam) = (x.n(), x.diam());
            let sigma = spectrum(&x);
            let mut sizes: Vec<SimplexSize> = (1..=n).map(SimplexSize::Finite).collect();
            sizes.push(SimplexSize::GreaterThanN);
            for m in sizes {
                let (grid, stats) = match m {
                    SimplexSize::Finite(k) => {
                        let stats = partition::all_partition_stats(&x, k, self.cap).expect("under cap");
                        let cloud = AdCloud::from_points(k, &stats, self.tol);
                        (lambda_grid(diam, &cloud.points, &[], 20), Some(stats))
                    }
                    SimplexSize::GreaterThanN => (lambda_grid(diam, &[], &[], 20), None),
                };
                for lambda in grid {
                    let got = ultra_closed_form(&sigma, diam, n, m, lambda) + offset;
                    let want = match &stats {
                        Some(stats) => bruteforce_from_stats(stats, diam, lambda),
                        None => gh_large_simplex(&x, lambda).expect("lambda > 0").as_exact().expect("exact"),
                    };
                    if (got - want).abs() > self.tol.get() {
                        return Err(fail("ultrametric-closed-form", &x, m, Some(lambda), format!("closed form {got} vs oracle {want}")));
                    }
                    cases += 1;
                }
            }
        }
        Ok(cases)
    }

    fn ultrametric_criterion(&self) -> SuiteResult {
        let mut cases = 0;
        for x in self.metric_spaces().chain(self.ultrametric_spaces()) {
            let direct = x.is_ultrametric_direct(self.tol);
            let via_mst = is_ultrametric_via_mst(&x, self.tol);
            if direct != via_mst {
                return Err(fail("ultrametric-criterion", &x, "-", None, format!("direct {direct} vs spanning tree {via_mst}")));
            }
            cases += 1;
        }
        Ok(cases)
    }

    fn spectrum_membership(&self) -> SuiteResult {
        let mut cases = 0;
        for x in self.ultrametric_spaces() {
            let sigma = spectrum(&x);
            if x.diam() != sigma.sigma(1) {
                return Err(fail("spectrum-membership", &x, "-", None, "diam differs from sigma_1".into()));
            }
            for (i, j, d) in x.pairs() {
                if sigma.position_of(d, self.tol).is_none() {
                    return Err(fail("spectrum-membership", &x, "-", None, format!("|{i}{j}| = {d} not in spectrum")));
                }
                cases += 1;
            }
        }
        Ok(cases)
    }

    fn spectrum_invariance(&self) -> SuiteResult {
        let mut cases = 0;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for x in self.metric_spaces().chain(self.ultrametric_spaces()) {
            let reference = spectrum(&x);
            let mut order: Vec<(usize, usize)> = x.pairs().map(|(i, j, _)| (i, j)).collect();
            for _ in 0..20 {
                order.shuffle(&mut rng);
                let s = build_mst_with_scan_order(&x, &order).expect("all pairs").spectrum();
                let same = s
                    .as_slice()
                    .iter()
                    .zip(reference.as_slice())
                    .all(|(a, b)| self.tol.eq(*a, *b));
                if !same {
                    return Err(fail("spectrum-invariance", &x, "-", None, format!("{s:?} vs {reference:?}")));
                }
                cases += 1;
            }
        }
        Ok(cases)
    }

    fn collective(&self) -> SuiteResult {
        let mut cases = 0;
        for x in self.metric_spaces() {
            let diam = x.diam();
            for m in 2..=x.n() {
                let stats = partition::all_partition_stats(&x, m, self.cap).expect("under cap");
                let chars = Collective::from_points(&stats).expect("finite alphas");
                let an = CollectiveAnalysis::new(chars, diam)
                    .map_err(|e| fail("collective-cases", &x, m, None, e.to_string()))?;
                let cloud = AdCloud::from_points(m, &stats, self.tol);
                for lambda in lambda_grid(diam, &cloud.points, &thresholds(&an), 20) {
                    let bf = bruteforce_from_stats(&stats, diam, lambda);
                    let v = an.evaluate(lambda);
                    if v.discrepancy(bf) > self.tol.get() {
                        return Err(fail("collective-cases", &x, m, Some(lambda), format!("{:?} vs brute force {bf}", v.estimate)));
                    }
                    cases += 1;
                }
            }
        }
        Ok(cases)
    }

    fn extreme_singleton(&self) -> SuiteResult {
        let mut cases = 0;
        for x in self.ultrametric_spaces() {
            let sigma = spectrum(&x);
            if !sigma.is_strictly_decreasing(self.tol) {
                continue;
            }
            for m in 2..x.n() {
                let cloud = partition::ad_cloud(&x, m, self.cap, self.tol).expect("under cap");
                let want = AdPoint::new(sigma.sigma(m - 1), sigma.sigma(m));
                let ok = cloud.extremes.len() == 1 && cloud.extremes[0].approx_eq(&want, self.tol);
                if !ok {
                    return Err(fail("extreme-singleton", &x, m, None, format!("extremes {:?}, want {want:?}", cloud.extremes)));
                }
                cases += 1;
            }
        }
        Ok(cases)
    }

    fn partition_counts(&self) -> SuiteResult {
        let top = self.max_n.min(self.cap.0);
        let mut s = vec![vec![0u64; top + 1]; top + 1];
        s[0][0] = 1;
        let mut cases = 0;
        for n in 1..=top {
            for m in 1..=n {
                s[n][m] = m as u64 * s[n - 1][m] + s[n - 1][m - 1];
                let count = partition::enumerate_partitions(n, m, self.cap).expect("under cap").count() as u64;
                if count != s[n][m] {
                    let x = FiniteMetricSpace::simplex(n, 1.0).expect("simplex");
                    return Err(fail("partition-counts", &x, m, None, format!("{count} partitions, Stirling {}", s[n][m])));
                }
                cases += 1;
            }
        }
        Ok(cases)
    }

    fn curve_fidelity(&self) -> SuiteResult {
        let mut cases = 0;
        for x in self.metric_spaces() {
            let diam = x.diam();
            for m in 1..=x.n() {
                let cloud = partition::ad_cloud(&x, m, self.cap, self.tol).expect("under cap");
                let c = curve_from_extremes(&cloud.extremes, diam, self.tol);
                for lambda in lambda_grid(diam, &cloud.points, &[], 20) {
                    let want = extreme_value(&cloud.extremes, diam, lambda);
                    let got = c.eval(lambda);
                    if (got - want).abs() > self.tol.get() {
                        return Err(fail("curve-fidelity", &x, m, Some(lambda), format!("curve {got} vs extreme {want}")));
                    }
                    cases += 1;
                }
            }
        }
        Ok(cases)
    }

    /// Runs every suite in order and stops at the first failure.
    pub fn run(&self, mut on_suite: impl FnMut(&SuiteReport)) -> Result<Vec<SuiteReport>, Box<Replay>> {
        type Suite = fn(&SelftestConfig) -> SuiteResult;
        let suites: [(&'static str, Suite); 9] = [
            ("extreme-vs-bruteforce", Self::extreme_vs_bruteforce),
            ("ultrametric-closed-form", Self::ultra_vs_oracle),
            ("ultrametric-criterion", Self::ultrametric_criterion),
            ("spectrum-membership", Self::spectrum_membership),
            ("spectrum-invariance", Self::spectrum_invariance),
            ("collective-cases", Self::collective),
            ("extreme-singleton", Self::extreme_singleton),
            ("partition-counts", Self::partition_counts),
            ("curve-fidelity", Self::curve_fidelity),
        ];
        let mut reports = Vec::with_capacity(suites.len());
        for (name, suite) in suites {
            let cases = suite(self)?;
            let report = SuiteReport { name, cases };
            on_suite(&report);
            reports.push(report);
        }
        Ok(reports)
    }
}

/// Small sizes: ten spaces per suite, at most five points.
pub fn quick() -> SelftestConfig {
    SelftestConfig { spaces: 10, max_n: 5, ..Default::default() }
}
