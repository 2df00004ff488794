//! Verification engines: the cross-polytope family on which magnitude fails
//! to be submodular, submodularity checks for subsets of the line and for
//! three-point spaces, and a brute-force best-subset oracle.

use itertools::Itertools;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bordered::BorderedCholesky;
use crate::error::{MagError, Result};
use crate::exact::{magnitude_1d, magnitude_exact, magnitude_homogeneous_cross};
use crate::metric::{check_scale, Metric, MetricSpace};

/// Slack above which a submodularity check counts as holding.
pub const SLACK_TOLERANCE: f64 = -1e-9;
pub const BRUTE_FORCE_MAX: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Violated,
}

/// One instance of `f(A) + f(B) >= f(A u B) + f(A n B)`.
///
/// In the point form `A = S + x1`, `B = S + x2`, so `A n B = S`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubmodularityReport {
    pub instance: String,
    pub f_a: f64,
    pub f_b: f64,
    pub f_union: f64,
    pub f_intersection: f64,
    pub slack: f64,
    pub verdict: Verdict,
}

impl SubmodularityReport {
    fn new(instance: String, f_a: f64, f_b: f64, f_union: f64, f_intersection: f64) -> Self {
        let slack = f_a + f_b - f_union - f_intersection;
        SubmodularityReport {
            instance,
            f_a,
            f_b,
            f_union,
            f_intersection,
            slack,
            verdict: if slack >= SLACK_TOLERANCE {
                Verdict::Holds
            } else {
                Verdict::Violated
            },
        }
    }

    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }
}

/// Summary of a randomized batch of checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FuzzSummary {
    pub instances: usize,
    pub violations: usize,
    pub worst_slack: f64,
    pub worst_instance: Option<String>,
}

impl FuzzSummary {
    fn new() -> Self {
        FuzzSummary {
            instances: 0,
            violations: 0,
            worst_slack: f64::INFINITY,
            worst_instance: None,
        }
    }

    fn record(&mut self, r: &SubmodularityReport) {
        self.instances += 1;
        if !r.holds() {
            self.violations += 1;
        }
        if r.slack < self.worst_slack {
            self.worst_slack = r.slack;
            self.worst_instance = Some(r.instance.clone());
        }
    }
}

/// The points `+-t e_1, ..., +-t e_D` of `R^D`.
pub fn cross_polytope(dim: usize, t: f64) -> Result<MetricSpace> {
    let points = cross_polytope_points(dim, t)?;
    MetricSpace::from_points(&points, Metric::Euclidean)
}

fn cross_polytope_points(dim: usize, t: f64) -> Result<Vec<Vec<f64>>> {
    if dim == 0 {
        return Err(MagError::InvalidConfig("dimension must be at least 1".into()));
    }
    check_scale(t)?;
    let mut points = Vec::with_capacity(2 * dim);
    for i in 0..dim {
        for sign in [1.0, -1.0] {
            let mut p = vec![0.0; dim];
            p[i] = sign * t;
            points.push(p);
        }
    }
    Ok(points)
}

fn dense_magnitude(space: &MetricSpace) -> Result<f64> {
    Ok(magnitude_exact(&space.similarity(1.0)?)?.0.value)
}

/// `Mag(X + 0) - Mag(X)` for the cross-polytope, by two dense solves.
pub fn counterexample_gap(dim: usize, t: f64) -> Result<f64> {
    let mut points = cross_polytope_points(dim, t)?;
    let without = dense_magnitude(&MetricSpace::from_points(&points, Metric::Euclidean)?)?;
    points.push(vec![0.0; dim]);
    let with = dense_magnitude(&MetricSpace::from_points(&points, Metric::Euclidean)?)?;
    Ok(with - without)
}

/// The same gap without any solve.
///
/// The cross-polytope is homogeneous, so its weighting is `M / 2D` everywhere
/// and `zeta^{-1} a = e^{-t} w` for the origin's similarity column
/// `a = e^{-t} 1`. Bordering then gives the gain
/// `(1 - e^{-t} M)^2 / (1 - e^{-2t} M)`.
pub fn counterexample_gap_bordered(dim: usize, t: f64) -> Result<f64> {
    let m = magnitude_homogeneous_cross(dim, t)?;
    let a = (-t).exp();
    let schur = 1.0 - a * a * m;
    if schur.is_nan() || schur <= 0.0 {
        return Err(MagError::NotPositiveDefinite);
    }
    let c = 1.0 - a * m;
    Ok(c * c / schur)
}

/// Large-dimension limit of the counterexample gap,
/// `(e^t - e^{t sqrt 2})^2 / (e^{2t} - e^{t sqrt 2})`.
///
/// Evaluated after dividing through by `e^{2t}` so it neither overflows for
/// large `t` nor cancels for small `t`.
pub fn limit_gap(t: f64) -> Result<f64> {
    check_scale(t)?;
    let r = std::f64::consts::SQRT_2 - 1.0;
    let num = (-t * r).exp_m1();
    let den = -(-t * (1.0 - r)).exp_m1();
    Ok((2.0 * t * r).exp() * num * num / den)
}

/// Lattice check on `X = xs` with the two extra points `x1`, `x2`, using the
/// closed form on the line.
pub fn check_submodular_1d(xs: &[f64], x1: f64, x2: f64) -> Result<SubmodularityReport> {
    let mut all: Vec<f64> = xs.to_vec();
    all.extend([x1, x2]);
    if let Some(k) = all.iter().position(|x| !x.is_finite()) {
        return Err(MagError::NonFiniteCoordinate { row: k, col: 0 });
    }
    let mut sorted = all.clone();
    sorted.sort_by(f64::total_cmp);
    if let Some(k) = sorted.windows(2).position(|w| w[0] == w[1]) {
        let v = sorted[k];
        let index = all.iter().rposition(|&x| x == v).unwrap();
        return Err(MagError::DuplicateValues { index });
    }
    let mag = |extra: &[f64]| -> Result<f64> {
        let mut s: Vec<f64> = xs.iter().chain(extra).copied().collect();
        if s.is_empty() {
            return Ok(0.0);
        }
        s.sort_by(f64::total_cmp);
        magnitude_1d(&s)
    };
    Ok(SubmodularityReport::new(
        format!("line X={xs:?} x1={x1} x2={x2}"),
        mag(&[x1])?,
        mag(&[x2])?,
        mag(&[x1, x2])?,
        mag(&[])?,
    ))
}

/// Magnitude of a subset of a small space at scale 1 (0 for the empty set).
fn subset_magnitude(space: &MetricSpace, ids: &[usize]) -> Result<f64> {
    let mut chol = BorderedCholesky::new();
    for (k, &i) in ids.iter().enumerate() {
        let a: Vec<f64> = ids[..k].iter().map(|&j| (-space.dist(i, j)).exp()).collect();
        chol.push(&a)?;
    }
    Ok(chol.magnitude())
}

/// Worst lattice slack over every pair of subsets of a three-point space
/// with side lengths `d1, d2, d3`.
pub fn check_submodular_3pt(d1: f64, d2: f64, d3: f64) -> Result<SubmodularityReport> {
    for d in [d1, d2, d3] {
        if !(d > 0.0 && d.is_finite()) {
            return Err(MagError::NonPositiveDistance(d));
        }
    }
    let longest = d1.max(d2).max(d3);
    if 2.0 * longest > d1 + d2 + d3 {
        return Err(MagError::TriangleViolation(d1, d2, d3));
    }
    // d1 = d(0,1), d2 = d(1,2), d3 = d(0,2).
    let space = MetricSpace::from_distance_matrix(&[
        vec![0.0, d1, d3],
        vec![d1, 0.0, d2],
        vec![d3, d2, 0.0],
    ])?;
    let members = |mask: u8| (0..3).filter(|i| mask & (1 << i) != 0).collect::<Vec<usize>>();
    let mut f = [0.0; 8];
    for (mask, v) in f.iter_mut().enumerate() {
        *v = subset_magnitude(&space, &members(mask as u8))?;
    }
    let mut worst: Option<SubmodularityReport> = None;
    for a in 0..8u8 {
        for b in 0..8u8 {
            let r = SubmodularityReport::new(
                format!("triangle ({d1}, {d2}, {d3}) A={:?} B={:?}", members(a), members(b)),
                f[a as usize],
                f[b as usize],
                f[(a | b) as usize],
                f[(a & b) as usize],
            );
            if worst.as_ref().is_none_or(|w| r.slack < w.slack) {
                worst = Some(r);
            }
        }
    }
    Ok(worst.unwrap())
}

/// Lattice check for two subsets of an arbitrary space at scale `t`, by
/// dense solves.
pub fn check_submodular_sets(space: &MetricSpace, t: f64, a: &[usize], b: &[usize]) -> Result<SubmodularityReport> {
    check_scale(t)?;
    let union: Vec<usize> = a.iter().chain(b).copied().sorted().dedup().collect();
    let inter: Vec<usize> = a.iter().filter(|i| b.contains(i)).copied().collect();
    let mag = |ids: &[usize]| -> Result<f64> {
        if ids.is_empty() {
            return Ok(0.0);
        }
        Ok(magnitude_exact(&space.subspace(ids)?.similarity(t)?)?.0.value)
    };
    Ok(SubmodularityReport::new(
        format!("sets A={a:?} B={b:?} at t={t}"),
        mag(a)?,
        mag(b)?,
        mag(&union)?,
        mag(&inter)?,
    ))
}

/// The cross-polytope `X` against the origin: `A = X`, `B = {0}`. The slack is
/// `1 - gap`, so the check fails exactly when adding the origin gains more
/// than its own magnitude.
pub fn check_submodular_cross(dim: usize, t: f64) -> Result<SubmodularityReport> {
    let mut points = cross_polytope_points(dim, t)?;
    points.push(vec![0.0; dim]);
    let space = MetricSpace::from_points(&points, Metric::Euclidean)?;
    let x: Vec<usize> = (0..2 * dim).collect();
    let mut r = check_submodular_sets(&space, 1.0, &x, &[2 * dim])?;
    r.instance = format!("cross-polytope D={dim} t={t} against the origin");
    Ok(r)
}

/// Random line instances with up to 6 base points, coordinates in [-10, 10].
pub fn fuzz_submodular_1d(instances: usize, rng_seed: u64) -> Result<FuzzSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut summary = FuzzSummary::new();
    while summary.instances < instances {
        let n = rng.random_range(0..=6);
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let x1 = rng.random_range(-10.0..10.0);
        let x2 = rng.random_range(-10.0..10.0);
        match check_submodular_1d(&xs, x1, x2) {
            Ok(r) => summary.record(&r),
            Err(MagError::DuplicateValues { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(summary)
}

/// Random triangles with sides in (0, 10], including near-degenerate ones.
pub fn fuzz_submodular_3pt(instances: usize, rng_seed: u64) -> Result<FuzzSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut summary = FuzzSummary::new();
    while summary.instances < instances {
        let a: f64 = rng.random_range(0.01..10.0);
        let b: f64 = rng.random_range(0.01..10.0);
        let lo = (a - b).abs();
        let hi = a + b;
        let c = if rng.random_bool(0.1) {
            // Within 0.1% of collinear.
            let edge = if rng.random_bool(0.5) { lo } else { hi };
            edge + (hi - lo) * if edge == lo { 1e-3 } else { -1e-3 }
        } else {
            rng.random_range(lo..hi)
        };
        match check_submodular_3pt(a, b, c) {
            Ok(r) => summary.record(&r),
            Err(MagError::TriangleViolation(..)) | Err(MagError::NonPositiveDistance(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(summary)
}

/// The `k`-subset of largest magnitude, by enumeration in lexicographic order
/// (the first maximizer wins).
pub fn brute_force_best_subset(space: &MetricSpace, t: f64, k: usize) -> Result<(Vec<usize>, f64)> {
    check_scale(t)?;
    let n = space.len();
    if n > BRUTE_FORCE_MAX {
        return Err(MagError::TooLarge { n, max: BRUTE_FORCE_MAX });
    }
    if k == 0 || k > n {
        return Err(MagError::InvalidConfig(format!("k must lie in 1..={n}, got {k}")));
    }
    let scaled = space.scaled(t)?;
    let mut best: Option<(Vec<usize>, f64)> = None;
    for subset in (0..n).combinations(k) {
        let m = subset_magnitude(&scaled, &subset)?;
        if best.as_ref().is_none_or(|(_, b)| m > *b) {
            best = Some((subset, m));
        }
    }
    Ok(best.unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_polytope_geometry() {
        let s = cross_polytope(1, 1.0).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.dist(0, 1), 2.0);
        let s = cross_polytope(2, 1.0).unwrap();
        assert_eq!(s.len(), 4);
        for i in 0..4 {
            for j in 0..4 {
                let d = s.dist(i, j);
                let want = if i == j {
                    0.0
                } else if i / 2 == j / 2 {
                    2.0
                } else {
                    std::f64::consts::SQRT_2
                };
                assert!((d - want).abs() < 1e-15);
            }
        }
        assert!(cross_polytope(0, 1.0).is_err());
        assert!(cross_polytope(2, 0.0).is_err());
    }

    #[test]
    fn gap_two_ways() {
        for &(d, t) in &[(1, 0.5), (3, 1.0), (10, 2.0), (40, 5.0)] {
            let dense = counterexample_gap(d, t).unwrap();
            let bordered = counterexample_gap_bordered(d, t).unwrap();
            assert!((dense - bordered).abs() < 1e-9, "D={d} t={t}: {dense} vs {bordered}");
        }
    }

    #[test]
    fn one_dimensional_gap_is_at_most_one() {
        for &t in &[0.1, 1.0, 3.0, 20.0] {
            let g = counterexample_gap(1, t).unwrap();
            assert!(g <= 1.0 + 1e-9);
            // Three collinear points -t, 0, t.
            let line = magnitude_1d(&[-t, 0.0, t]).unwrap() - magnitude_1d(&[-t, t]).unwrap();
            assert!((g - line).abs() < 1e-9);
        }
    }

    #[test]
    fn limit_gap_values() {
        let e = std::f64::consts::E;
        let s = std::f64::consts::SQRT_2;
        let direct = (e - e.powf(s)).powi(2) / (e * e - e.powf(s));
        assert!((limit_gap(1.0).unwrap() - direct).abs() < 1e-14);
        assert!((limit_gap(1.0).unwrap() - 0.594).abs() < 1e-3);
        assert!(limit_gap(1e-6).unwrap().abs() < 1e-5);
        assert!(limit_gap(5.0).unwrap() > 0.0);
        assert!(limit_gap(400.0).unwrap().is_finite());
        assert!(limit_gap(0.0).is_err());
    }

    #[test]
    fn same_gap_slack() {
        let r = check_submodular_1d(&[0.0, 10.0], 4.0, 6.0).unwrap();
        let want = 2.0 * 3f64.tanh() - 5f64.tanh() - 1f64.tanh();
        assert!((r.slack - want).abs() < 1e-14);
        assert!(r.holds());
    }

    #[test]
    fn different_gaps_are_modular() {
        let r = check_submodular_1d(&[0.0, 3.0, 10.0], 1.0, 6.5).unwrap();
        assert!(r.slack.abs() < 1e-12);
        let r = check_submodular_1d(&[0.0, 3.0], -2.0, 7.0).unwrap();
        assert!(r.slack.abs() < 1e-12);
    }

    #[test]
    fn one_dimensional_errors() {
        assert_eq!(
            check_submodular_1d(&[0.0, 1.0], 1.0, 2.0).unwrap_err(),
            MagError::DuplicateValues { index: 2 }
        );
        assert!(check_submodular_1d(&[], 1.0, 1.0).is_err());
        assert!(check_submodular_1d(&[], 1.0, 2.0).unwrap().holds());
    }

    #[test]
    fn triangles() {
        assert!(check_submodular_3pt(1.0, 1.0, 1.0).unwrap().holds());
        assert!(check_submodular_3pt(1.0, 1.0, 1.999_999).unwrap().holds());
        assert!(check_submodular_3pt(0.01, 5.0, 5.005).unwrap().holds());
        assert!(matches!(
            check_submodular_3pt(1.0, 1.0, 3.0),
            Err(MagError::TriangleViolation(..))
        ));
        assert!(check_submodular_3pt(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn small_fuzz_runs_clean() {
        let s = fuzz_submodular_1d(300, 1).unwrap();
        assert_eq!((s.instances, s.violations), (300, 0));
        let s = fuzz_submodular_3pt(300, 1).unwrap();
        assert_eq!((s.instances, s.violations), (300, 0));
    }

    #[test]
    fn cross_polytope_violates() {
        let r = check_submodular_cross(50, 2.0).unwrap();
        assert_eq!(r.verdict, Verdict::Violated);
        assert!((r.slack - (1.0 - counterexample_gap(50, 2.0).unwrap())).abs() < 1e-9);
        assert!(check_submodular_cross(2, 1.0).unwrap().holds());
    }

    #[test]
    fn brute_force() {
        let pts: Vec<Vec<f64>> = [0.0, 0.5, 0.6, 3.0, 7.0].iter().map(|&x| vec![x]).collect();
        let s = MetricSpace::from_points(&pts, Metric::Euclidean).unwrap();
        let (ids, v) = brute_force_best_subset(&s, 1.0, 1).unwrap();
        assert_eq!((ids, v), (vec![0], 1.0));
        let (ids, v) = brute_force_best_subset(&s, 1.0, 5).unwrap();
        assert_eq!(ids, vec![0, 1, 2, 3, 4]);
        assert!((v - magnitude_1d(&[0.0, 0.5, 0.6, 3.0, 7.0]).unwrap()).abs() < 1e-12);
        let (ids, _) = brute_force_best_subset(&s, 1.0, 2).unwrap();
        assert_eq!(ids, vec![0, 4]);
        let big = MetricSpace::from_points(&(0..21).map(|i| vec![i as f64]).collect::<Vec<_>>(), Metric::Euclidean)
            .unwrap();
        assert_eq!(
            brute_force_best_subset(&big, 1.0, 2).unwrap_err(),
            MagError::TooLarge { n: 21, max: 20 }
        );
    }
}
