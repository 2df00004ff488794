//! Discrete center hierarchy: nested covering sets with doubling radii.
//!
//! Level 0 holds every point. Level `i >= 1` has radius `2^(i-1)` and is a
//! minimal independent covering set of level `i - 1`: every point below lies
//! within the radius of some center, and centers are pairwise farther apart
//! than the radius. The top level is the first one with a single center.
//!
//! Point ids are stable: inserted points get fresh ids and deleted ids are
//! never reused.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::error::{MagError, Result};
use crate::exact::Method;
use crate::metric::{check_scale, Metric, MetricSpace};
use crate::subset::{nested_curve, SelectionCurve};

#[derive(Debug, Clone)]
enum PointStore {
    Coords {
        dim: usize,
        metric: Metric,
        coords: Vec<f64>,
    },
    /// `lower[i][j]` is the distance from `i` to `j < i`.
    Matrix { lower: Vec<Vec<f64>> },
}

impl PointStore {
    fn len(&self) -> usize {
        match self {
            PointStore::Coords { dim, coords, .. } => coords.len() / dim,
            PointStore::Matrix { lower } => lower.len(),
        }
    }

    fn dist(&self, a: usize, b: usize) -> f64 {
        match self {
            PointStore::Coords { dim, metric, coords } => {
                metric.distance(&coords[a * dim..(a + 1) * dim], &coords[b * dim..(b + 1) * dim])
            }
            PointStore::Matrix { lower } => match a.cmp(&b) {
                std::cmp::Ordering::Equal => 0.0,
                std::cmp::Ordering::Greater => lower[a][b],
                std::cmp::Ordering::Less => lower[b][a],
            },
        }
    }
}

/// A broken hierarchy property, as reported by [`CoverHierarchy::check_invariants`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum InvariantViolation {
    #[error("level {level} contains {id}, which is missing from the level below")]
    NotNested { level: usize, id: usize },
    #[error("point {id} of level {} has no center within radius at level {level}", level - 1)]
    Uncovered { level: usize, id: usize },
    #[error("centers {a} and {b} of level {level} are within radius of each other")]
    NotIndependent { level: usize, a: usize, b: usize },
    #[error("center {id} of level {level} can be removed without losing coverage")]
    NotMinimal { level: usize, id: usize },
    #[error("height {height} exceeds bound {bound}")]
    TooTall { height: usize, bound: usize },
    #[error("level {level} is a single point but is not the top")]
    SingletonBelowTop { level: usize },
    #[error("top level has {size} points")]
    TopNotSingleton { size: usize },
    #[error("level 0 does not match the live points")]
    BadBase,
}

#[derive(Debug, Clone)]
pub struct CoverHierarchy {
    store: PointStore,
    alive: Vec<bool>,
    /// Sorted ascending at every level.
    levels: Vec<Vec<usize>>,
}

/// JSON dump of a hierarchy.
#[derive(Debug, Clone, Serialize)]
pub struct HierarchyDump {
    pub schema_version: u32,
    pub levels: Vec<Vec<usize>>,
    pub radii: Vec<f64>,
    /// `parents[i]` maps each point of level `i` to its center at level `i + 1`.
    pub parents: Vec<BTreeMap<usize, usize>>,
}

/// Radius of a level: 0 for the base, `2^(i-1)` above it.
pub fn level_radius(level: usize) -> f64 {
    if level == 0 {
        0.0
    } else {
        2f64.powi(level as i32 - 1)
    }
}

/// `max(1, ceil(log2 diameter) + 1)`, or 0 for a single point.
pub fn height_bound(diameter: f64) -> usize {
    if diameter <= 0.0 {
        0
    } else {
        (diameter.log2().ceil() + 1.0).max(1.0) as usize
    }
}

impl CoverHierarchy {
    /// Builds the hierarchy by greedy ascending-id scans, one level at a time.
    pub fn build(space: &MetricSpace) -> Result<Self> {
        if space.is_empty() {
            return Err(MagError::EmptyInput);
        }
        let store = match space.cloud() {
            Some(c) => PointStore::Coords {
                dim: c.dim(),
                metric: c.metric(),
                coords: (0..c.len()).flat_map(|i| c.point(i).iter().copied()).collect(),
            },
            None => PointStore::Matrix {
                lower: (0..space.len()).map(|i| space.row(i)[..i].to_vec()).collect(),
            },
        };
        let n = space.len();
        let mut h = CoverHierarchy {
            store,
            alive: vec![true; n],
            levels: vec![(0..n).collect()],
        };
        h.grow_to_singleton();
        Ok(h)
    }

    pub fn dist(&self, a: usize, b: usize) -> f64 {
        self.store.dist(a, b)
    }

    /// Number of live points.
    pub fn len(&self) -> usize {
        self.levels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels[0].is_empty()
    }

    /// Index of the top level.
    pub fn height(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn levels(&self) -> &[Vec<usize>] {
        &self.levels
    }

    /// Live point ids in ascending order.
    pub fn ids(&self) -> &[usize] {
        &self.levels[0]
    }

    pub fn contains(&self, id: usize) -> bool {
        self.alive.get(id).copied().unwrap_or(false)
    }

    pub fn diameter(&self) -> f64 {
        let ids = self.ids();
        let mut best: f64 = 0.0;
        for (k, &a) in ids.iter().enumerate() {
            for &b in &ids[k + 1..] {
                best = best.max(self.dist(a, b));
            }
        }
        best
    }

    fn covered(&self, p: usize, centers: &[usize], radius: f64) -> bool {
        centers.iter().any(|&c| self.dist(p, c) <= radius)
    }

    /// Greedy ascending-id scan: `p` becomes a center unless an accepted
    /// center already covers it.
    fn scan(&self, below: &[usize], radius: f64) -> Vec<usize> {
        let mut centers: Vec<usize> = Vec::new();
        for &p in below {
            if !self.covered(p, &centers, radius) {
                centers.push(p);
            }
        }
        centers
    }

    fn grow_to_singleton(&mut self) {
        while self.levels.last().unwrap().len() > 1 {
            let i = self.levels.len();
            let next = self.scan(self.levels.last().unwrap(), level_radius(i));
            self.levels.push(next);
        }
    }

    fn truncate_at_first_singleton(&mut self) {
        if let Some(k) = self.levels.iter().position(|l| l.len() <= 1) {
            self.levels.truncate(k + 1);
        }
    }

    /// Adds a point given by coordinates. Returns its id.
    pub fn insert_point(&mut self, q: &[f64]) -> Result<usize> {
        let PointStore::Coords { dim, coords, .. } = &mut self.store else {
            return Err(MagError::InvalidConfig(
                "hierarchy was built from distances; use insert_with_distances".into(),
            ));
        };
        if q.len() != *dim {
            return Err(MagError::DimensionMismatch {
                row: coords.len() / *dim,
                expected: *dim,
                found: q.len(),
            });
        }
        if let Some(c) = q.iter().position(|x| !x.is_finite()) {
            return Err(MagError::NonFiniteCoordinate {
                row: coords.len() / *dim,
                col: c,
            });
        }
        coords.extend_from_slice(q);
        self.finish_insert()
    }

    /// Adds a point given its distances to every id ever issued (entries for
    /// deleted ids are ignored). Returns its id.
    pub fn insert_with_distances(&mut self, row: &[f64]) -> Result<usize> {
        let PointStore::Matrix { lower } = &mut self.store else {
            return Err(MagError::InvalidConfig(
                "hierarchy was built from coordinates; use insert_point".into(),
            ));
        };
        let id = lower.len();
        if row.len() != id {
            return Err(MagError::DimensionMismatch {
                row: id,
                expected: id,
                found: row.len(),
            });
        }
        for (j, &d) in row.iter().enumerate() {
            if !d.is_finite() || d < 0.0 {
                return Err(MagError::NegativeDistance { i: id, j });
            }
        }
        lower.push(row.to_vec());
        self.finish_insert()
    }

    fn finish_insert(&mut self) -> Result<usize> {
        let q = self.store.len() - 1;
        if let Some(&twin) = self.ids().iter().find(|&&p| self.dist(p, q) == 0.0) {
            match &mut self.store {
                PointStore::Coords { dim, coords, .. } => coords.truncate(coords.len() - *dim),
                PointStore::Matrix { lower } => {
                    lower.pop();
                }
            }
            return Err(MagError::DuplicatePoint(twin));
        }
        self.alive.push(true);
        if self.levels[0].is_empty() {
            self.levels = vec![vec![q]];
            return Ok(q);
        }
        // Ids are issued in increasing order, so pushing keeps levels sorted.
        self.levels[0].push(q);
        let mut level = 1;
        loop {
            if level == self.levels.len() {
                // q reached the old top, which now has two centers.
                self.grow_to_singleton();
                break;
            }
            let r = level_radius(level);
            if self.covered(q, &self.levels[level], r) {
                break;
            }
            self.levels[level].push(q);
            level += 1;
        }
        Ok(q)
    }

    /// Removes a point and repairs each level bottom-up by promoting uncovered
    /// points in ascending id order.
    pub fn delete_point(&mut self, id: usize) -> Result<()> {
        if !self.contains(id) {
            return Err(MagError::UnknownPoint(id));
        }
        self.alive[id] = false;
        for level in &mut self.levels {
            if let Ok(k) = level.binary_search(&id) {
                level.remove(k);
            }
        }
        let mut i = 1;
        while i < self.levels.len() {
            let r = level_radius(i);
            let below = self.levels[i - 1].clone();
            let mut centers = std::mem::take(&mut self.levels[i]);
            for &p in &below {
                if !self.covered(p, &centers, r) {
                    let k = centers.binary_search(&p).unwrap_err();
                    centers.insert(k, p);
                }
            }
            self.levels[i] = centers;
            i += 1;
        }
        self.truncate_at_first_singleton();
        self.grow_to_singleton();
        Ok(())
    }

    /// For each level below the top, the lowest-id covering center above.
    pub fn parents(&self) -> Vec<BTreeMap<usize, usize>> {
        (1..self.levels.len())
            .map(|i| {
                let r = level_radius(i);
                self.levels[i - 1]
                    .iter()
                    .filter_map(|&p| {
                        self.levels[i]
                            .iter()
                            .find(|&&c| self.dist(p, c) <= r)
                            .map(|&c| (p, c))
                    })
                    .collect()
            })
            .collect()
    }

    pub fn dump(&self) -> HierarchyDump {
        HierarchyDump {
            schema_version: 1,
            levels: self.levels.clone(),
            radii: (0..self.levels.len()).map(level_radius).collect(),
            parents: self.parents(),
        }
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, &self.dump())?;
        Ok(())
    }

    /// Checks nesting, covering, independence, minimality, the height bound
    /// and that exactly the top level is a singleton.
    pub fn check_invariants(&self) -> std::result::Result<(), InvariantViolation> {
        let live: Vec<usize> = (0..self.alive.len()).filter(|&i| self.alive[i]).collect();
        if live != self.levels[0] {
            return Err(InvariantViolation::BadBase);
        }
        if self.is_empty() {
            return Ok(());
        }
        let top = self.height();
        for (i, level) in self.levels.iter().enumerate() {
            if i < top && level.len() <= 1 {
                return Err(InvariantViolation::SingletonBelowTop { level: i });
            }
        }
        if self.levels[top].len() != 1 {
            return Err(InvariantViolation::TopNotSingleton {
                size: self.levels[top].len(),
            });
        }
        for i in 1..=top {
            let r = level_radius(i);
            let (below, centers) = (&self.levels[i - 1], &self.levels[i]);
            for &c in centers {
                if below.binary_search(&c).is_err() {
                    return Err(InvariantViolation::NotNested { level: i, id: c });
                }
            }
            for (k, &a) in centers.iter().enumerate() {
                for &b in &centers[k + 1..] {
                    if self.dist(a, b) <= r {
                        return Err(InvariantViolation::NotIndependent { level: i, a, b });
                    }
                }
            }
            // Count covering centers per point; a center is redundant if
            // every point it covers has another cover.
            let mut sole = vec![false; centers.len()];
            for &p in below {
                let covers: Vec<usize> = (0..centers.len())
                    .filter(|&k| self.dist(p, centers[k]) <= r)
                    .collect();
                match covers.as_slice() {
                    [] => return Err(InvariantViolation::Uncovered { level: i, id: p }),
                    [k] => sole[*k] = true,
                    _ => {}
                }
            }
            if let Some(k) = sole.iter().position(|s| !s) {
                return Err(InvariantViolation::NotMinimal {
                    level: i,
                    id: centers[k],
                });
            }
        }
        let bound = height_bound(self.diameter());
        if top > bound {
            return Err(InvariantViolation::TooTall { height: top, bound });
        }
        Ok(())
    }

    /// Ids from the top level down, each level contributing its new points in
    /// ascending id order.
    pub fn topdown_order(&self) -> Vec<usize> {
        let mut seen = vec![false; self.alive.len()];
        let mut order = Vec::with_capacity(self.len());
        for level in self.levels.iter().rev() {
            for &p in level {
                if !seen[p] {
                    seen[p] = true;
                    order.push(p);
                }
            }
        }
        order
    }

    /// Magnitude of growing prefixes of [`Self::topdown_order`], up to
    /// `budget` points.
    pub fn approx_magnitude_topdown(&self, t: f64, budget: usize) -> Result<SelectionCurve> {
        check_scale(t)?;
        if budget == 0 || budget > self.len() {
            return Err(MagError::InvalidConfig(format!(
                "budget must lie in 1..={}, got {budget}",
                self.len()
            )));
        }
        let order = self.topdown_order();
        let steps = nested_curve(|a, b| self.dist(a, b), t, &order[..budget], None)?;
        Ok(SelectionCurve {
            stopped_at: budget,
            steps,
            tolerance_used: 0.0,
            method: Method::HierarchySubset,
        })
    }
}
