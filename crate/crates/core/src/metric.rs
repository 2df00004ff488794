//! Finite metric spaces and their similarity matrices.
//!
//! A [`MetricSpace`] always carries its full dense distance matrix. When it was
//! built from coordinates, the coordinates and metric are kept as well so that
//! structures such as the cover hierarchy can measure distances to new points.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MagError, Result};

/// Absolute tolerance for asymmetry in user-supplied distance matrices.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

static NEXT_SPACE_ID: AtomicU64 = AtomicU64::new(1);

fn next_space_id() -> u64 {
    NEXT_SPACE_ID.fetch_add(1, Ordering::Relaxed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Euclidean,
    Manhattan,
}

impl Metric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            Metric::Manhattan => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = MagError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" | "l2" => Ok(Metric::Euclidean),
            "manhattan" | "l1" | "cityblock" => Ok(Metric::Manhattan),
            other => Err(MagError::InvalidConfig(format!("unknown metric '{other}'"))),
        }
    }
}

/// What to do when two input points coincide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DuplicatePolicy {
    #[default]
    Reject,
    /// Keep the first occurrence and count how many times it appeared.
    Merge,
}

/// Coordinates retained alongside the distance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
    metric: Metric,
}

impl PointCloud {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}

/// A finite metric space with a dense, symmetric distance matrix.
///
/// Points are labelled `0..n`. Distinct points are guaranteed to be at
/// positive distance.
#[derive(Debug, Clone)]
pub struct MetricSpace {
    id: u64,
    n: usize,
    dist: Vec<f64>,
    cloud: Option<PointCloud>,
    multiplicity: Vec<usize>,
}

impl MetricSpace {
    /// Builds a space from coordinates, rejecting duplicate points.
    pub fn from_points(points: &[Vec<f64>], metric: Metric) -> Result<Self> {
        Self::from_points_with(points, metric, DuplicatePolicy::Reject)
    }

    pub fn from_points_with(
        points: &[Vec<f64>],
        metric: Metric,
        policy: DuplicatePolicy,
    ) -> Result<Self> {
        let dim = points.first().ok_or(MagError::EmptyInput)?.len();
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (row, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(MagError::DimensionMismatch {
                    row,
                    expected: dim,
                    found: p.len(),
                });
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(coords, dim, metric, policy)
    }

    /// Builds a space from row-major coordinates of `coords.len() / dim` points.
    pub fn from_flat(
        coords: Vec<f64>,
        dim: usize,
        metric: Metric,
        policy: DuplicatePolicy,
    ) -> Result<Self> {
        if dim == 0 || coords.is_empty() {
            return Err(MagError::EmptyInput);
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(MagError::DimensionMismatch {
                row: coords.len() / dim,
                expected: dim,
                found: coords.len() % dim,
            });
        }
        if let Some(k) = coords.iter().position(|x| !x.is_finite()) {
            return Err(MagError::NonFiniteCoordinate {
                row: k / dim,
                col: k % dim,
            });
        }
        let n = coords.len() / dim;

        let (coords, multiplicity) = match policy {
            DuplicatePolicy::Reject => {
                if let Some((first, second)) = find_duplicate_coords(&coords, dim) {
                    return Err(MagError::DuplicatePoints { first, second });
                }
                (coords, vec![1; n])
            }
            DuplicatePolicy::Merge => merge_duplicate_coords(&coords, dim),
        };

        let cloud = PointCloud { dim, coords, metric };
        let n = cloud.len();
        let mut dist = vec![0.0; n * n];
        dist.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            let p = cloud.point(i);
            for (j, d) in row.iter_mut().enumerate() {
                if i != j {
                    *d = metric.distance(p, cloud.point(j));
                }
            }
        });
        // Distinct coordinates may still underflow to a zero distance.
        if let Some((first, second)) = find_zero_offdiagonal(&dist, n) {
            return Err(MagError::DuplicatePoints { first, second });
        }

        Ok(MetricSpace {
            id: next_space_id(),
            n,
            dist,
            cloud: Some(cloud),
            multiplicity,
        })
    }

    /// Wraps an explicit distance matrix, rejecting coincident points.
    pub fn from_distance_matrix(rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_distance_matrix_with(rows, DuplicatePolicy::Reject)
    }

    pub fn from_distance_matrix_with(rows: &[Vec<f64>], policy: DuplicatePolicy) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(MagError::EmptyInput);
        }
        for r in rows {
            if r.len() != n {
                return Err(MagError::NotSquare {
                    rows: n,
                    cols: r.len(),
                });
            }
        }
        for (i, r) in rows.iter().enumerate() {
            for (j, &d) in r.iter().enumerate() {
                if !d.is_finite() || d < 0.0 {
                    return Err(MagError::NegativeDistance { i, j });
                }
            }
            if r[i].abs() > SYMMETRY_TOLERANCE {
                return Err(MagError::NonzeroDiagonal { i });
            }
        }
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let diff = (rows[i][j] - rows[j][i]).abs();
                if diff > SYMMETRY_TOLERANCE {
                    return Err(MagError::AsymmetryExceedsTolerance { i, j, diff });
                }
                dist[i * n + j] = 0.5 * (rows[i][j] + rows[j][i]);
            }
        }

        match policy {
            DuplicatePolicy::Reject => {
                if let Some((first, second)) = find_zero_offdiagonal(&dist, n) {
                    return Err(MagError::DuplicatePoints { first, second });
                }
                Ok(MetricSpace {
                    id: next_space_id(),
                    n,
                    dist,
                    cloud: None,
                    multiplicity: vec![1; n],
                })
            }
            DuplicatePolicy::Merge => {
                let mut rep: Vec<Option<usize>> = vec![None; n];
                let mut kept = Vec::new();
                let mut multiplicity = Vec::new();
                for i in 0..n {
                    if rep[i].is_some() {
                        continue;
                    }
                    let slot = kept.len();
                    kept.push(i);
                    multiplicity.push(0);
                    for j in i..n {
                        if rep[j].is_none() && (j == i || dist[i * n + j] == 0.0) {
                            rep[j] = Some(slot);
                            multiplicity[slot] += 1;
                        }
                    }
                }
                let m = kept.len();
                let mut merged = vec![0.0; m * m];
                for (a, &i) in kept.iter().enumerate() {
                    for (b, &j) in kept.iter().enumerate() {
                        merged[a * m + b] = dist[i * n + j];
                    }
                }
                Ok(MetricSpace {
                    id: next_space_id(),
                    n: m,
                    dist: merged,
                    cloud: None,
                    multiplicity,
                })
            }
        }
    }

    /// Unique identifier of this space instance; similarity matrices record it.
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }

    /// Row-major `n x n` distance matrix.
    pub fn distances(&self) -> &[f64] {
        &self.dist
    }

    pub fn cloud(&self) -> Option<&PointCloud> {
        self.cloud.as_ref()
    }

    /// How many input rows were merged into each point (all ones unless
    /// built with [`DuplicatePolicy::Merge`]).
    pub fn multiplicity(&self) -> &[usize] {
        &self.multiplicity
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    /// Smallest distance between two distinct points; `None` for one point.
    pub fn min_gap(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let d = self.dist(i, j);
                best = Some(best.map_or(d, |b| b.min(d)));
            }
        }
        best
    }

    /// Mean over unordered pairs; zero for a single point.
    pub fn mean_distance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let mut total = 0.0;
        for i in 0..self.n {
            total += self.row(i)[i + 1..].iter().sum::<f64>();
        }
        total / (self.n * (self.n - 1) / 2) as f64
    }

    /// The space `tX`: same points, distances multiplied by `t`.
    pub fn scaled(&self, t: f64) -> Result<MetricSpace> {
        check_scale(t)?;
        let cloud = self.cloud.as_ref().map(|c| PointCloud {
            dim: c.dim,
            coords: c.coords.iter().map(|x| x * t).collect(),
            metric: c.metric,
        });
        Ok(MetricSpace {
            id: next_space_id(),
            n: self.n,
            dist: self.dist.iter().map(|d| d * t).collect(),
            cloud,
            multiplicity: self.multiplicity.clone(),
        })
    }

    /// Subspace on the given point ids, relabelled `0..ids.len()` in order.
    pub fn subspace(&self, ids: &[usize]) -> Result<MetricSpace> {
        if ids.is_empty() {
            return Err(MagError::EmptyInput);
        }
        let mut seen = vec![false; self.n];
        for &i in ids {
            if i >= self.n {
                return Err(MagError::UnknownPoint(i));
            }
            if seen[i] {
                return Err(MagError::DuplicatePoint(i));
            }
            seen[i] = true;
        }
        let m = ids.len();
        let mut dist = vec![0.0; m * m];
        for (a, &i) in ids.iter().enumerate() {
            for (b, &j) in ids.iter().enumerate() {
                dist[a * m + b] = self.dist(i, j);
            }
        }
        let cloud = self.cloud.as_ref().map(|c| PointCloud {
            dim: c.dim,
            coords: ids.iter().flat_map(|&i| c.point(i).iter().copied()).collect(),
            metric: c.metric,
        });
        Ok(MetricSpace {
            id: next_space_id(),
            n: m,
            dist,
            cloud,
            multiplicity: ids.iter().map(|&i| self.multiplicity[i]).collect(),
        })
    }

    /// Similarity matrix `zeta_ij = exp(-t d_ij)`.
    pub fn similarity(&self, t: f64) -> Result<SimilarityMatrix> {
        check_scale(t)?;
        let n = self.n;
        let mut zeta = vec![0.0; n * n];
        zeta.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for (j, z) in row.iter_mut().enumerate() {
                *z = if i == j { 1.0 } else { (-t * self.dist[i * n + j]).exp() };
            }
        });
        Ok(SimilarityMatrix {
            n,
            scale: t,
            space_id: self.id,
            zeta,
        })
    }
}

pub(crate) fn check_scale(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(MagError::NonPositiveScale(t))
    }
}

fn find_duplicate_coords(coords: &[f64], dim: usize) -> Option<(usize, usize)> {
    let n = coords.len() / dim;
    let mut order: Vec<usize> = (0..n).collect();
    let key = |i: usize| &coords[i * dim..(i + 1) * dim];
    order.sort_by(|&a, &b| {
        key(a)
            .iter()
            .zip(key(b))
            .map(|(x, y)| (x + 0.0).total_cmp(&(y + 0.0)))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
        .windows(2)
        .find(|w| key(w[0]) == key(w[1]))
        .map(|w| (w[0].min(w[1]), w[0].max(w[1])))
}

fn merge_duplicate_coords(coords: &[f64], dim: usize) -> (Vec<f64>, Vec<usize>) {
    let n = coords.len() / dim;
    let mut kept: Vec<usize> = Vec::new();
    let mut multiplicity: Vec<usize> = Vec::new();
    for i in 0..n {
        let p = &coords[i * dim..(i + 1) * dim];
        match kept
            .iter()
            .position(|&k| &coords[k * dim..(k + 1) * dim] == p)
        {
            Some(slot) => multiplicity[slot] += 1,
            None => {
                kept.push(i);
                multiplicity.push(1);
            }
        }
    }
    let merged = kept
        .iter()
        .flat_map(|&k| coords[k * dim..(k + 1) * dim].iter().copied())
        .collect();
    (merged, multiplicity)
}

fn find_zero_offdiagonal(dist: &[f64], n: usize) -> Option<(usize, usize)> {
    for i in 0..n {
        for j in (i + 1)..n {
            if dist[i * n + j] == 0.0 {
                return Some((i, j));
            }
        }
    }
    None
}

/// Dense similarity matrix of a metric space at a fixed scale.
#[derive(Debug, Clone)]
pub struct SimilarityMatrix {
    n: usize,
    scale: f64,
    space_id: u64,
    zeta: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn space_id(&self) -> u64 {
        self.space_id
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.zeta[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.zeta[i * self.n..(i + 1) * self.n]
    }

    /// Row-major entries. The matrix is symmetric, so this is also column-major.
    pub fn as_slice(&self) -> &[f64] {
        &self.zeta
    }

    /// `out = zeta * w`. Each row is reduced sequentially, so the result does
    /// not depend on the number of worker threads.
    pub fn matvec(&self, w: &[f64], out: &mut [f64]) {
        assert_eq!(w.len(), self.n);
        assert_eq!(out.len(), self.n);
        out.par_iter_mut()
            .enumerate()
            .for_each(|(i, o)| *o = dot(self.row(i), w));
    }

    /// `max_i |sum_j zeta_ij w_j - 1|`.
    pub fn residual_norm(&self, w: &[f64]) -> f64 {
        let mut g = vec![0.0; self.n];
        self.matvec(w, &mut g);
        g.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Dot product with a fixed eight-lane accumulation order.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}
