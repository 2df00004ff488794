//! Subset selection: greedy magnitude maximization, nested random subsets, and
//! the extremes-plus-sample estimator for large one-dimensional samples.

use std::io::Write;
use std::time::Instant;

use rand::seq::{index, SliceRandom};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bordered::{BorderedCholesky, Projection};
use crate::error::{MagError, Result};
use crate::exact::{magnitude_1d, MagnitudeEstimate, Method, FLAG_DEGENERATE};
use crate::metric::{check_scale, MetricSpace};

pub const DEFAULT_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveStep {
    pub size: usize,
    pub point_id: usize,
    pub magnitude: f64,
}

/// Magnitude of a growing subset, one entry per evaluated size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionCurve {
    pub steps: Vec<CurveStep>,
    pub tolerance_used: f64,
    pub stopped_at: usize,
    pub method: Method,
}

impl SelectionCurve {
    pub fn point_ids(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.point_id).collect()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.magnitude).collect()
    }

    pub fn final_magnitude(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.magnitude)
    }

    /// Magnitude at the given subset size, if the curve was evaluated there.
    pub fn at_size(&self, size: usize) -> Option<f64> {
        self.steps.iter().find(|s| s.size == size).map(|s| s.magnitude)
    }

    /// Smallest evaluated size whose magnitude reaches `target`.
    pub fn size_reaching(&self, target: f64) -> Option<usize> {
        self.steps.iter().find(|s| s.magnitude >= target).map(|s| s.size)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["size", "point_id", "magnitude"])?;
        for s in &self.steps {
            w.write_record([s.size.to_string(), s.point_id.to_string(), format!("{:e}", s.magnitude)])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[inline]
fn similarity(space: &MetricSpace, t: f64, i: usize, j: usize) -> f64 {
    (-t * space.dist(i, j)).exp()
}

/// Adds the points of `order` one at a time and records the magnitude after
/// each addition whose size is in `record` (all sizes when `record` is `None`).
pub(crate) fn nested_curve<F: Fn(usize, usize) -> f64>(
    dist: F,
    t: f64,
    order: &[usize],
    record: Option<&[usize]>,
) -> Result<Vec<CurveStep>> {
    let mut chol = BorderedCholesky::new();
    let mut members: Vec<usize> = Vec::with_capacity(order.len());
    let mut steps = Vec::new();
    for &i in order {
        let a: Vec<f64> = members.iter().map(|&j| (-t * dist(i, j)).exp()).collect();
        let m = chol.push(&a)?;
        members.push(i);
        let size = members.len();
        if record.is_none_or(|r| r.binary_search(&size).is_ok()) {
            steps.push(CurveStep {
                size,
                point_id: i,
                magnitude: m,
            });
        }
    }
    Ok(steps)
}

/// Greedy forward selection.
///
/// Starts from one seeded-random point and repeatedly adds the point whose
/// addition increases magnitude the most (lowest id on ties). Stops after the
/// first addition whose relative increase is below `tolerance_k`, or at
/// `max_size` points.
///
/// Each candidate keeps its projection onto the current factor, so a round
/// costs `O(|S|)` per candidate instead of a fresh solve.
pub fn greedy_select(
    space: &MetricSpace,
    t: f64,
    tolerance_k: f64,
    max_size: usize,
    rng_seed: u64,
) -> Result<SelectionCurve> {
    check_scale(t)?;
    let n = space.len();
    if !(tolerance_k > 0.0 && tolerance_k < 1.0) {
        return Err(MagError::InvalidConfig(format!(
            "tolerance must lie in (0, 1), got {tolerance_k}"
        )));
    }
    if max_size == 0 || max_size > n {
        return Err(MagError::InvalidConfig(format!(
            "max_size must lie in 1..={n}, got {max_size}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let seed_point = rng.random_range(0..n);

    let mut chol = BorderedCholesky::new();
    chol.push(&[])?;
    let mut steps = vec![CurveStep {
        size: 1,
        point_id: seed_point,
        magnitude: 1.0,
    }];
    // (id, projection) for every unselected point, in ascending id order.
    let mut candidates: Vec<(usize, Projection)> = (0..n)
        .filter(|&i| i != seed_point)
        .map(|i| (i, chol.project(&[similarity(space, t, i, seed_point)])))
        .collect();

    while steps.len() < max_size && !candidates.is_empty() {
        let best = candidates
            .par_iter()
            .enumerate()
            .filter(|(_, (_, p))| p.schur() > 0.0)
            .map(|(k, (_, p))| (k, p.gain()))
            .filter(|(_, g)| g.is_finite())
            .reduce_with(|a, b| if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a });
        let Some((k, gain)) = best else { break };
        let (id, proj) = candidates.remove(k);
        let before = chol.magnitude();
        let after = chol.push_projection(proj)?;
        steps.push(CurveStep {
            size: steps.len() + 1,
            point_id: id,
            magnitude: after,
        });
        if gain / before < tolerance_k {
            break;
        }
        let chol_ref = &chol;
        candidates
            .par_iter_mut()
            .for_each(|(i, p)| chol_ref.extend_projection(p, similarity(space, t, *i, id)));
    }
    Ok(SelectionCurve {
        stopped_at: steps.len(),
        steps,
        tolerance_used: tolerance_k,
        method: Method::GreedySubset,
    })
}

/// Magnitudes of nested random subsets at the requested sizes.
///
/// One seeded permutation of the points is drawn and its prefixes are
/// evaluated, so larger sizes contain the smaller ones.
pub fn random_select(
    space: &MetricSpace,
    t: f64,
    sizes: &[usize],
    rng_seed: u64,
) -> Result<SelectionCurve> {
    check_scale(t)?;
    let n = space.len();
    let mut sizes = sizes.to_vec();
    sizes.sort_unstable();
    sizes.dedup();
    match (sizes.first(), sizes.last()) {
        (Some(&lo), Some(&hi)) if lo >= 1 && hi <= n => {}
        _ => {
            return Err(MagError::InvalidConfig(format!(
                "subset sizes must be non-empty and lie in 1..={n}"
            )))
        }
    }
    let largest = *sizes.last().unwrap();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(rng_seed));
    let steps = nested_curve(|i, j| space.dist(i, j), t, &order[..largest], Some(&sizes))?;
    Ok(SelectionCurve {
        stopped_at: largest,
        steps,
        tolerance_used: 0.0,
        method: Method::RandomSubset,
    })
}

/// Magnitude of a large one-dimensional sample, estimated from its minimum,
/// maximum and `sample_size` values drawn without replacement.
///
/// Exact ties are merged before evaluation. A constant input has magnitude 1
/// and is flagged `degenerate`.
pub fn estimate_param_magnitude(
    params: &[f64],
    sample_size: usize,
    rng_seed: u64,
) -> Result<MagnitudeEstimate> {
    let start = Instant::now();
    if params.len() < 2 {
        return Err(MagError::DegenerateParams);
    }
    if sample_size < 2 {
        return Err(MagError::InvalidConfig("sample_size must be at least 2".into()));
    }
    if let Some(k) = params.iter().position(|x| !x.is_finite()) {
        return Err(MagError::NonFiniteCoordinate { row: k, col: 0 });
    }
    let (lo, hi) = params
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let take = sample_size.min(params.len());
    let mut xs: Vec<f64> = index::sample(&mut rng, params.len(), take)
        .into_iter()
        .map(|k| params[k] + 0.0)
        .collect();
    xs.push(lo + 0.0);
    xs.push(hi + 0.0);
    xs.sort_by(f64::total_cmp);
    xs.dedup();

    let mut est = MagnitudeEstimate::closed_form(magnitude_1d(&xs)?, Method::ClosedForm1d);
    if xs.len() == 1 {
        est.flags.push(FLAG_DEGENERATE.to_string());
    }
    est.wall_time = start.elapsed().as_secs_f64();
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{magnitude_exact, magnitude_two_point};
    use crate::metric::Metric;

    fn line(xs: &[f64]) -> MetricSpace {
        let pts: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        MetricSpace::from_points(&pts, Metric::Euclidean).unwrap()
    }

    fn exact(space: &MetricSpace, t: f64) -> f64 {
        magnitude_exact(&space.similarity(t).unwrap()).unwrap().0.value
    }

    #[test]
    fn pair_is_forced() {
        let s = line(&[0.0, 1.5]);
        let c = greedy_select(&s, 1.0, 1e-9, 2, 3).unwrap();
        assert_eq!(c.steps.len(), 2);
        assert!((c.final_magnitude() - magnitude_two_point(1.5).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn full_budget_reaches_whole_space() {
        let xs: Vec<f64> = (0..30).map(|i| (i as f64 * 0.9).sin() * 5.0 + i as f64 * 0.3).collect();
        let s = line(&xs);
        let c = greedy_select(&s, 1.0, f64::MIN_POSITIVE, 30, 0).unwrap();
        assert_eq!(c.stopped_at, 30);
        assert!((c.final_magnitude() - exact(&s, 1.0)).abs() < 1e-9);
        let m = c.magnitudes();
        assert!(m.windows(2).all(|w| w[1] > w[0]));
        let mut ids = c.point_ids();
        ids.sort_unstable();
        assert_eq!(ids, (0..30).collect::<Vec<_>>());
    }

    #[test]
    fn greedy_step_picks_true_maximizer() {
        let xs = [0.0, 0.2, 0.5, 3.0, 3.1, 7.0, 7.05, 9.0];
        let s = line(&xs);
        let c = greedy_select(&s, 1.0, f64::MIN_POSITIVE, 4, 11).unwrap();
        let ids = c.point_ids();
        for k in 1..ids.len() {
            let chosen = s.subspace(&ids[..=k]).unwrap();
            let best = (0..xs.len())
                .filter(|i| !ids[..k].contains(i))
                .map(|i| {
                    let mut sub = ids[..k].to_vec();
                    sub.push(i);
                    exact(&s.subspace(&sub).unwrap(), 1.0)
                })
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((exact(&chosen, 1.0) - best).abs() < 1e-10);
        }
    }

    #[test]
    fn tolerance_stops_early() {
        // A tight cluster plus two far points: once the far points are in,
        // additional cluster points change little.
        let mut xs: Vec<f64> = (0..20).map(|i| i as f64 * 1e-3).collect();
        xs.extend([50.0, 100.0]);
        let s = line(&xs);
        let c = greedy_select(&s, 1.0, 1e-2, 22, 0).unwrap();
        assert!(c.stopped_at < 8, "stopped at {}", c.stopped_at);
        let last = &c.steps[c.steps.len() - 1];
        let prev = &c.steps[c.steps.len() - 2];
        assert!((last.magnitude - prev.magnitude) / prev.magnitude < 1e-2);
    }

    #[test]
    fn greedy_rejects_bad_config() {
        let s = line(&[0.0, 1.0]);
        assert!(greedy_select(&s, 1.0, 0.0, 2, 0).is_err());
        assert!(greedy_select(&s, 1.0, 1.0, 2, 0).is_err());
        assert!(greedy_select(&s, 1.0, 0.5, 3, 0).is_err());
        assert!(greedy_select(&s, -1.0, 0.5, 2, 0).is_err());
    }

    #[test]
    fn random_subsets() {
        let xs: Vec<f64> = (0..12).map(|i| i as f64 * 0.7).collect();
        let s = line(&xs);
        let c = random_select(&s, 1.0, &[12, 1, 5], 7).unwrap();
        assert_eq!(c.steps.iter().map(|s| s.size).collect::<Vec<_>>(), vec![1, 5, 12]);
        assert_eq!(c.steps[0].magnitude, 1.0);
        assert!((c.final_magnitude() - exact(&s, 1.0)).abs() < 1e-10);
        assert_eq!(c, random_select(&s, 1.0, &[1, 5, 12], 7).unwrap());
        assert!(random_select(&s, 1.0, &[13], 7).is_err());
        assert!(random_select(&s, 1.0, &[0], 7).is_err());
        assert!(random_select(&s, 1.0, &[], 7).is_err());
    }

    #[test]
    fn param_magnitude() {
        let e = estimate_param_magnitude(&[0.5, 2.0], 10, 0).unwrap();
        assert!((e.value - (1.0 + 0.75f64.tanh())).abs() < 1e-15);

        let e = estimate_param_magnitude(&[3.0; 50], 10, 0).unwrap();
        assert_eq!(e.value, 1.0);
        assert!(e.has_flag(FLAG_DEGENERATE));

        let params = [4.0, -1.0, 2.0, 2.0, 0.5, 9.0, -0.0, 0.0];
        let e = estimate_param_magnitude(&params, 100, 5).unwrap();
        let full = magnitude_1d(&[-1.0, 0.0, 0.5, 2.0, 4.0, 9.0]).unwrap();
        assert_eq!(e.value, full);

        // A partial sample never drops below the two-point bound.
        let many: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1000) as f64 * 0.01).collect();
        let e = estimate_param_magnitude(&many, 20, 1).unwrap();
        assert!(e.value >= 1.0 + (9.99f64 / 2.0).tanh());
        assert!(e.value <= magnitude_1d(&(0..1000).map(|i| i as f64 * 0.01).collect::<Vec<_>>()).unwrap());

        assert_eq!(estimate_param_magnitude(&[1.0], 10, 0).unwrap_err(), MagError::DegenerateParams);
        assert!(estimate_param_magnitude(&[1.0, 2.0], 1, 0).is_err());
        assert!(estimate_param_magnitude(&[1.0, f64::NAN], 2, 0).is_err());
    }
}
