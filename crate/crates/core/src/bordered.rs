//! Incremental magnitude by bordering a Cholesky factor.
//!
//! For a set `S` with similarity `A = L L^T` and a new point with similarity
//! column `a`, write `y = L^{-1} a` and `u = L^{-1} 1`. The bordered matrix
//! `[[A, a], [a^T, 1]]` has Schur complement `s = 1 - y.y`, and
//!
//! ```text
//! Mag(S + x) = Mag(S) + (1 - y.u)^2 / s
//! ```
//!
//! Adding a point appends the row `[y, sqrt(s)]` to `L`. Candidates that are
//! probed repeatedly keep their `y` as a [`Projection`] and extend it by one
//! entry per accepted point, so a greedy round costs `O(|S|)` per candidate.

use crate::error::{MagError, Result};
use crate::metric::dot;

/// Schur complements at or below this are treated as singular.
const MIN_SCHUR: f64 = 1e-300;

/// `L^{-1} a` for a candidate column, with running dot products.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Projection {
    y: Vec<f64>,
    yu: f64,
    yy: f64,
}

impl Projection {
    /// Schur complement of the candidate against the current set.
    pub fn schur(&self) -> f64 {
        1.0 - self.yy
    }

    /// Increase in magnitude if the candidate were added.
    pub fn gain(&self) -> f64 {
        let c = 1.0 - self.yu;
        c * c / self.schur()
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// Lower-triangular factor of a growing similarity matrix.
#[derive(Debug, Clone, Default)]
pub struct BorderedCholesky {
    rows: Vec<Vec<f64>>,
    u: Vec<f64>,
    magnitude: f64,
}

impl BorderedCholesky {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Magnitude of the current set (0 for the empty set).
    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    /// Forward substitution `L y = a`.
    pub fn project(&self, a: &[f64]) -> Projection {
        assert_eq!(a.len(), self.len(), "similarity column has wrong length");
        let mut y = Vec::with_capacity(self.len() + 1);
        for (k, row) in self.rows.iter().enumerate() {
            let v = (a[k] - dot(&row[..k], &y)) / row[k];
            y.push(v);
        }
        let yu = dot(&y, &self.u);
        let yy = dot(&y, &y);
        Projection { y, yu, yy }
    }

    /// Magnitude of the set with one more point, without modifying it.
    pub fn probe(&self, a: &[f64]) -> Result<f64> {
        let p = self.project(a);
        check_schur(p.schur())?;
        Ok(self.magnitude + p.gain())
    }

    /// Adds a point given its similarities to the current members.
    pub fn push(&mut self, a: &[f64]) -> Result<f64> {
        let p = self.project(a);
        self.push_projection(p)
    }

    /// Adds a point whose projection is already up to date.
    pub fn push_projection(&mut self, p: Projection) -> Result<f64> {
        assert_eq!(p.y.len(), self.len(), "stale projection");
        let s = p.schur();
        check_schur(s)?;
        let pivot = s.sqrt();
        let u_new = (1.0 - p.yu) / pivot;
        let mut row = p.y;
        row.push(pivot);
        self.rows.push(row);
        self.u.push(u_new);
        self.magnitude += u_new * u_new;
        Ok(self.magnitude)
    }

    /// Brings a projection computed before the most recent push up to date.
    /// `a_last` is the candidate's similarity to the newest member.
    pub fn extend_projection(&self, p: &mut Projection, a_last: f64) {
        let k = self.len() - 1;
        assert_eq!(p.y.len(), k, "projection is not exactly one push behind");
        let row = &self.rows[k];
        let e = (a_last - dot(&row[..k], &p.y)) / row[k];
        p.y.push(e);
        p.yu += e * self.u[k];
        p.yy += e * e;
    }

    /// Weighting of the current set, by back substitution `L^T w = u`.
    pub fn weights(&self) -> Vec<f64> {
        let n = self.len();
        let mut w = self.u.clone();
        for i in (0..n).rev() {
            w[i] /= self.rows[i][i];
            let wi = w[i];
            for (k, wk) in w.iter_mut().enumerate().take(i) {
                *wk -= self.rows[i][k] * wi;
            }
        }
        w
    }
}

fn check_schur(s: f64) -> Result<()> {
    if s > MIN_SCHUR && s.is_finite() {
        Ok(())
    } else {
        Err(MagError::NotPositiveDefinite)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{magnitude_exact, magnitude_two_point};
    use crate::metric::{Metric, MetricSpace};

    fn grow(space: &MetricSpace, t: f64, order: &[usize]) -> BorderedCholesky {
        let mut chol = BorderedCholesky::new();
        for (k, &i) in order.iter().enumerate() {
            let a: Vec<f64> = order[..k]
                .iter()
                .map(|&j| (-t * space.dist(i, j)).exp())
                .collect();
            chol.push(&a).unwrap();
        }
        chol
    }

    #[test]
    fn empty_then_single_point() {
        let mut chol = BorderedCholesky::new();
        assert_eq!(chol.magnitude(), 0.0);
        assert_eq!(chol.probe(&[]).unwrap(), 1.0);
        assert_eq!(chol.push(&[]).unwrap(), 1.0);
        assert_eq!(chol.weights(), vec![1.0]);
    }

    #[test]
    fn pair_matches_closed_form() {
        let mut chol = BorderedCholesky::new();
        chol.push(&[]).unwrap();
        let d: f64 = 0.7;
        let m = chol.push(&[(-d).exp()]).unwrap();
        assert!((m - magnitude_two_point(d).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn agrees_with_dense_solve() {
        let pts: Vec<Vec<f64>> = (0..25)
            .map(|i| {
                let f = i as f64;
                vec![(f * 0.37).sin() * 3.0, (f * 1.3).cos() * 2.0 + f * 0.05]
            })
            .collect();
        let space = MetricSpace::from_points(&pts, Metric::Euclidean).unwrap();
        let order: Vec<usize> = (0..25).rev().collect();
        let chol = grow(&space, 1.3, &order);
        let reordered = space.subspace(&order).unwrap();
        let (est, w) = magnitude_exact(&reordered.similarity(1.3).unwrap()).unwrap();
        assert!((chol.magnitude() - est.value).abs() < 1e-10);
        for (a, b) in chol.weights().iter().zip(&w.w) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn extended_projection_equals_fresh_projection() {
        let pts: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 * 0.4, (i * i) as f64 * 0.1]).collect();
        let space = MetricSpace::from_points(&pts, Metric::Euclidean).unwrap();
        let t = 1.0;
        let sim = |i: usize, j: usize| (-t * space.dist(i, j)).exp();
        let mut chol = grow(&space, t, &[0, 1, 2]);
        let candidate = 7;
        let mut p = chol.project(&[sim(candidate, 0), sim(candidate, 1), sim(candidate, 2)]);
        chol.push(&[sim(3, 0), sim(3, 1), sim(3, 2)]).unwrap();
        chol.extend_projection(&mut p, sim(candidate, 3));
        let fresh = chol.project(&[
            sim(candidate, 0),
            sim(candidate, 1),
            sim(candidate, 2),
            sim(candidate, 3),
        ]);
        assert!((p.gain() - fresh.gain()).abs() < 1e-13);
        assert_eq!(p.len(), 4);
    }

    #[test]
    fn coincident_point_is_rejected() {
        let mut chol = BorderedCholesky::new();
        chol.push(&[]).unwrap();
        assert_eq!(chol.push(&[1.0]).unwrap_err(), MagError::NotPositiveDefinite);
    }
}
