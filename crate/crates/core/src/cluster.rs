//! Magnitude clustering: grow clusters one point at a time, always taking the
//! (point, cluster) pair with the smallest magnitude increase, and open a new
//! cluster whenever that increase reaches the threshold `theta`.
//!
//! Distances are divided by the mean pairwise distance first and the
//! similarity scale is fixed at 1, so `theta` is comparable across datasets.
//! Every (point, cluster) pair keeps a projection onto the cluster's bordered
//! factor; a round only extends the projections of the cluster that changed.

use std::io::Write;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bordered::{BorderedCholesky, Projection};
use crate::error::{MagError, Result};
use crate::metric::MetricSpace;
use crate::scale::log_grid;

/// Spaces up to this size get an exact mean pairwise distance.
pub const EXACT_MEAN_LIMIT: usize = 5000;
pub const MEAN_SAMPLE_PAIRS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClusterStep {
    pub point: usize,
    pub cluster: usize,
    pub best_increase: f64,
    /// False when the point opened a new cluster.
    pub merged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusteringResult {
    pub assignment: Vec<usize>,
    pub threshold: f64,
    pub cluster_count: usize,
    pub start_point: usize,
    /// The mean pairwise distance the space was divided by.
    pub distance_scale: f64,
    pub trace: Vec<ClusterStep>,
}

impl ClusteringResult {
    /// Member ids of each cluster, ascending.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.cluster_count];
        for (p, &c) in self.assignment.iter().enumerate() {
            out[c].push(p);
        }
        out
    }

    pub fn write_assignment_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["point_id", "cluster_id"])?;
        for (p, c) in self.assignment.iter().enumerate() {
            w.write_record([p.to_string(), c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PersistenceProfile {
    pub thresholds: Vec<f64>,
    pub counts: Vec<usize>,
    pub persistent_count: usize,
}

impl PersistenceProfile {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["theta", "cluster_count"])?;
        for (t, c) in self.thresholds.iter().zip(&self.counts) {
            w.write_record([format!("{t:e}"), c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Mean pairwise distance, exact up to [`EXACT_MEAN_LIMIT`] points and from
/// [`MEAN_SAMPLE_PAIRS`] seeded random pairs beyond.
pub fn normalizing_distance(space: &MetricSpace, rng_seed: u64) -> f64 {
    let n = space.len();
    if n <= EXACT_MEAN_LIMIT {
        return space.mean_distance();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut total = 0.0;
    for _ in 0..MEAN_SAMPLE_PAIRS {
        let i = rng.random_range(0..n);
        let j = (i + rng.random_range(1..n)) % n;
        total += space.dist(i, j);
    }
    total / MEAN_SAMPLE_PAIRS as f64
}

struct Candidate {
    point: usize,
    /// One projection per existing cluster, indexed by cluster id.
    proj: Vec<Projection>,
}

fn increase(p: &Projection) -> f64 {
    let g = p.gain();
    if p.schur() > 0.0 && g.is_finite() {
        g
    } else {
        f64::INFINITY
    }
}

/// Clusters the space with merge threshold `theta`.
pub fn cluster(space: &MetricSpace, theta: f64, rng_seed: u64) -> Result<ClusteringResult> {
    let n = space.len();
    if n == 0 {
        return Err(MagError::EmptyInput);
    }
    if theta.is_nan() || theta < 0.0 {
        return Err(MagError::InvalidConfig(format!("theta must be non-negative, got {theta}")));
    }
    let mean = normalizing_distance(space, rng_seed);
    let scale = if mean > 0.0 { 1.0 / mean } else { 1.0 };
    let sim = |i: usize, j: usize| (-scale * space.dist(i, j)).exp();

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let start = rng.random_range(0..n);

    let mut assignment = vec![usize::MAX; n];
    let mut clusters: Vec<BorderedCholesky> = Vec::new();
    let open = |clusters: &mut Vec<BorderedCholesky>| -> Result<()> {
        let mut chol = BorderedCholesky::new();
        chol.push(&[])?;
        clusters.push(chol);
        Ok(())
    };
    open(&mut clusters)?;
    assignment[start] = 0;
    let mut remaining: Vec<Candidate> = (0..n)
        .filter(|&p| p != start)
        .map(|p| Candidate {
            point: p,
            proj: vec![clusters[0].project(&[sim(p, start)])],
        })
        .collect();
    let mut trace = Vec::with_capacity(n.saturating_sub(1));

    while !remaining.is_empty() {
        // Smallest increase; ties to the lowest point id, then lowest cluster id.
        let (k, c, best) = remaining
            .par_iter()
            .enumerate()
            .map(|(k, cand)| {
                let (c, inc) = cand
                    .proj
                    .iter()
                    .enumerate()
                    .map(|(c, p)| (c, increase(p)))
                    .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
                (k, c, inc)
            })
            .reduce_with(|a, b| {
                if b.2 < a.2 || (b.2 == a.2 && (b.0, b.1) < (a.0, a.1)) {
                    b
                } else {
                    a
                }
            })
            .expect("remaining is non-empty");
        let cand = remaining.remove(k);
        let b = cand.point;
        if best < theta {
            clusters[c].push_projection(cand.proj.into_iter().nth(c).unwrap())?;
            assignment[b] = c;
            let chol = &clusters[c];
            remaining
                .par_iter_mut()
                .for_each(|r| chol.extend_projection(&mut r.proj[c], sim(r.point, b)));
            trace.push(ClusterStep {
                point: b,
                cluster: c,
                best_increase: best,
                merged: true,
            });
        } else {
            let id = clusters.len();
            open(&mut clusters)?;
            assignment[b] = id;
            let chol = &clusters[id];
            remaining
                .par_iter_mut()
                .for_each(|r| r.proj.push(chol.project(&[sim(r.point, b)])));
            trace.push(ClusterStep {
                point: b,
                cluster: id,
                best_increase: best,
                merged: false,
            });
        }
    }
    Ok(ClusteringResult {
        assignment,
        threshold: theta,
        cluster_count: clusters.len(),
        start_point: start,
        distance_scale: if mean > 0.0 { mean } else { 1.0 },
        trace,
    })
}

/// 24 log-spaced thresholds in `[1e-3, 1]`.
pub fn default_theta_grid() -> Vec<f64> {
    log_grid(1e-3, 1.0, 24).expect("constant grid is valid")
}

/// Clusters at every threshold and picks the cluster count that persists over
/// the longest run of consecutive thresholds (smaller count on ties).
pub fn persistence_sweep(space: &MetricSpace, thetas: &[f64], rng_seed: u64) -> Result<PersistenceProfile> {
    if thetas.is_empty() {
        return Err(MagError::InvalidConfig("threshold grid is empty".into()));
    }
    if let Some(k) = thetas.iter().position(|t| t.is_nan() || *t < 0.0) {
        return Err(MagError::InvalidConfig(format!("threshold {k} is negative")));
    }
    if let Some(k) = thetas.windows(2).position(|w| w[1] < w[0]) {
        return Err(MagError::UnsortedInput { index: k + 1 });
    }
    let counts = thetas
        .par_iter()
        .map(|&theta| cluster(space, theta, rng_seed).map(|r| r.cluster_count))
        .collect::<Result<Vec<_>>>()?;

    let mut best = (0usize, usize::MAX);
    let mut k = 0;
    while k < counts.len() {
        let run_end = counts[k..].iter().position(|&c| c != counts[k]).map_or(counts.len(), |e| k + e);
        let len = run_end - k;
        if len > best.0 || (len == best.0 && counts[k] < best.1) {
            best = (len, counts[k]);
        }
        k = run_end;
    }
    Ok(PersistenceProfile {
        thresholds: thetas.to_vec(),
        counts,
        persistent_count: best.1,
    })
}

/// Adjusted Rand index between two labelings of the same points.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(MagError::DimensionMismatch {
            row: 0,
            expected: a.len(),
            found: b.len(),
        });
    }
    let n = a.len();
    if n < 2 {
        return Ok(1.0);
    }
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![0u64; ka * kb];
    for (&x, &y) in a.iter().zip(b) {
        table[x * kb + y] += 1;
    }
    let pairs = |m: u64| (m * m.saturating_sub(1) / 2) as f64;
    let index: f64 = table.iter().map(|&m| pairs(m)).sum();
    let row: f64 = (0..ka).map(|i| pairs(table[i * kb..(i + 1) * kb].iter().sum())).sum();
    let col: f64 = (0..kb).map(|j| pairs((0..ka).map(|i| table[i * kb + j]).sum())).sum();
    let expected = row * col / pairs(n as u64);
    let max = 0.5 * (row + col);
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}
