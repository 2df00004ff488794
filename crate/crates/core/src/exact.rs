//! Exact magnitude via a dense Cholesky solve, closed forms for special
//! geometries, and the positive part of a weighting.

use std::time::Instant;

use faer::prelude::*;
use faer::{Mat, MatRef, Side};
use serde::{Deserialize, Serialize};

use crate::error::{MagError, Result};
use crate::metric::SimilarityMatrix;

/// Half-gaps beyond this are treated as infinite (`tanh` is 1 in double precision).
const TANH_SATURATION: f64 = 40.0;

pub const FLAG_JITTERED: &str = "jittered";
pub const FLAG_NOT_CONVERGED: &str = "not_converged";
pub const FLAG_DEGENERATE: &str = "degenerate";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    ClosedForm1d,
    ClosedFormHomogeneous,
    Gd,
    IterNorm,
    GreedySubset,
    HierarchySubset,
    RandomSubset,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::ClosedForm1d => "closed_form_1d",
            Method::ClosedFormHomogeneous => "closed_form_homogeneous",
            Method::Gd => "gd",
            Method::IterNorm => "iter_norm",
            Method::GreedySubset => "greedy_subset",
            Method::HierarchySubset => "hierarchy_subset",
            Method::RandomSubset => "random_subset",
        }
    }
}

/// Per-point weights together with their defect from unit row sums.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Weighting {
    pub w: Vec<f64>,
    /// `residual[i] = sum_j zeta_ij w_j - 1`.
    pub residual: Vec<f64>,
    pub scale: f64,
}

impl Weighting {
    pub fn new(sim: &SimilarityMatrix, w: Vec<f64>) -> Self {
        let mut residual = vec![0.0; w.len()];
        sim.matvec(&w, &mut residual);
        residual.iter_mut().for_each(|r| *r -= 1.0);
        Weighting {
            w,
            residual,
            scale: sim.scale(),
        }
    }

    pub fn magnitude(&self) -> f64 {
        self.w.iter().sum()
    }

    pub fn max_residual(&self) -> f64 {
        self.residual.iter().map(|r| r.abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MagnitudeEstimate {
    pub value: f64,
    pub pmag: f64,
    pub method: Method,
    pub iterations: usize,
    pub residual_norm: f64,
    /// Seconds.
    pub wall_time: f64,
    pub converged: bool,
    pub flags: Vec<String>,
}

impl MagnitudeEstimate {
    pub fn closed_form(value: f64, method: Method) -> Self {
        MagnitudeEstimate {
            value,
            pmag: value,
            method,
            iterations: 0,
            residual_norm: 0.0,
            wall_time: 0.0,
            converged: true,
            flags: Vec::new(),
        }
    }

    pub fn has_flag(&self, flag: &str) -> bool {
        self.flags.iter().any(|f| f == flag)
    }
}

/// Sum of the positive weights.
pub fn pmag(w: &Weighting) -> f64 {
    w.w.iter().map(|&x| x.max(0.0)).sum()
}

fn cholesky_solve_ones(zeta: MatRef<'_, f64>) -> Option<Vec<f64>> {
    let n = zeta.nrows();
    let llt = zeta.llt(Side::Lower).ok()?;
    let ones = Mat::<f64>::from_fn(n, 1, |_, _| 1.0);
    let w = llt.solve(&ones);
    let w: Vec<f64> = (0..n).map(|i| w[(i, 0)]).collect();
    w.iter().all(|x| x.is_finite()).then_some(w)
}

/// Solves `zeta w = 1` by Cholesky factorization and sums the weights.
///
/// If the factorization fails, it is retried once with `1e-10 * trace / n`
/// added to the diagonal and the estimate is flagged `jittered`.
pub fn magnitude_exact(sim: &SimilarityMatrix) -> Result<(MagnitudeEstimate, Weighting)> {
    let start = Instant::now();
    let n = sim.len();
    if n == 0 {
        return Err(MagError::EmptyInput);
    }
    let zeta = MatRef::from_column_major_slice(sim.as_slice(), n, n);
    let mut flags = Vec::new();
    let w = match cholesky_solve_ones(zeta) {
        Some(w) => w,
        None => {
            let trace: f64 = (0..n).map(|i| sim.get(i, i)).sum();
            let jitter = 1e-10 * trace / n as f64;
            let shifted = Mat::<f64>::from_fn(n, n, |i, j| {
                sim.get(i, j) + if i == j { jitter } else { 0.0 }
            });
            flags.push(FLAG_JITTERED.to_string());
            cholesky_solve_ones(shifted.as_ref()).ok_or(MagError::NotPositiveDefinite)?
        }
    };
    let weighting = Weighting::new(sim, w);
    let estimate = MagnitudeEstimate {
        value: weighting.magnitude(),
        pmag: pmag(&weighting),
        method: Method::Exact,
        iterations: 0,
        residual_norm: weighting.max_residual(),
        wall_time: start.elapsed().as_secs_f64(),
        converged: true,
        flags,
    };
    Ok((estimate, weighting))
}

/// Magnitude of two points at distance `d`: `2 / (1 + e^{-d})`.
pub fn magnitude_two_point(d: f64) -> Result<f64> {
    if d.is_nan() || d <= 0.0 {
        return Err(MagError::NonPositiveDistance(d));
    }
    Ok(2.0 / (1.0 + (-d).exp()))
}

/// Magnitude of the scaled cross-polytope `{±t e_1, ..., ±t e_D}` in `R^D`.
///
/// The space is homogeneous, so its magnitude is `2D` over the common row sum
/// of the similarity matrix.
pub fn magnitude_homogeneous_cross(dim: usize, t: f64) -> Result<f64> {
    if dim == 0 {
        return Err(MagError::InvalidConfig("dimension must be at least 1".into()));
    }
    crate::metric::check_scale(t)?;
    let d = dim as f64;
    let row_sum = 1.0 + (-2.0 * t).exp() + 2.0 * (d - 1.0) * (-t * std::f64::consts::SQRT_2).exp();
    Ok(2.0 * d / row_sum)
}

/// Magnitude of a finite subset of the real line, `1 + sum tanh(gap / 2)`.
///
/// `xs` must be strictly increasing.
pub fn magnitude_1d(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(MagError::EmptyInput);
    }
    if let Some(k) = xs.iter().position(|x| !x.is_finite()) {
        return Err(MagError::NonFiniteCoordinate { row: k, col: 0 });
    }
    let mut total = 1.0;
    for (i, pair) in xs.windows(2).enumerate() {
        let gap = pair[1] - pair[0];
        if gap == 0.0 {
            return Err(MagError::DuplicateValues { index: i + 1 });
        }
        if gap < 0.0 {
            return Err(MagError::UnsortedInput { index: i + 1 });
        }
        total += half_gap_tanh(gap);
    }
    Ok(total)
}

#[inline]
pub(crate) fn half_gap_tanh(gap: f64) -> f64 {
    let h = 0.5 * gap;
    if h > TANH_SATURATION {
        1.0
    } else {
        h.tanh()
    }
}
