//! The magnitude function `t -> Mag(tX)` over a grid of scales and the
//! magnitude dimension read off its log-log slope.

use std::io::Write;
use std::ops::Range;

use serde::Serialize;

use crate::error::{MagError, Result};
use crate::exact::{magnitude_1d, magnitude_exact, Method, FLAG_NOT_CONVERGED};
use crate::iterative::{solve_gd, solve_iter_norm, SolverConfig};
use crate::metric::{check_scale, MetricSpace};

pub const DEFAULT_GRID_STEPS: usize = 32;

/// How each scale of a sweep is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum Backend {
    Exact,
    IterNorm(SolverConfig),
    Gd(SolverConfig),
    /// Requires a one-dimensional point cloud.
    ClosedForm1d,
}

impl Backend {
    pub fn method(&self) -> Method {
        match self {
            Backend::Exact => Method::Exact,
            Backend::IterNorm(_) => Method::IterNorm,
            Backend::Gd(_) => Method::Gd,
            Backend::ClosedForm1d => Method::ClosedForm1d,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepEntry {
    pub t: f64,
    /// `None` when the backend failed at this scale.
    pub value: Option<f64>,
    pub method: Method,
    /// Error code, or `not_converged` for an iterative estimate that hit its
    /// iteration cap.
    pub error_flag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleSweep {
    pub entries: Vec<SweepEntry>,
    /// `d log Mag / d log t` between neighbouring scales; NaN where either
    /// value is missing.
    pub slopes: Vec<f64>,
}

impl ScaleSweep {
    pub fn scales(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.t).collect()
    }

    pub fn values(&self) -> Vec<Option<f64>> {
        self.entries.iter().map(|e| e.value).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "magnitude", "method", "error_flag"])?;
        for e in &self.entries {
            w.write_record([
                format!("{:e}", e.t),
                e.value.map(|v| format!("{v:e}")).unwrap_or_default(),
                e.method.as_str().to_string(),
                e.error_flag.clone().unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Index range of the entries whose scale lies in `[t_lo, t_hi]`.
    pub fn window(&self, t_lo: f64, t_hi: f64) -> Range<usize> {
        let start = self.entries.iter().position(|e| e.t >= t_lo).unwrap_or(self.entries.len());
        let end = self.entries.iter().rposition(|e| e.t <= t_hi).map_or(start, |k| k + 1);
        start..end.max(start)
    }
}

/// `steps` log-spaced scales from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && lo.is_finite() && hi.is_finite() && hi >= lo) || steps == 0 {
        return Err(MagError::InvalidConfig(format!(
            "grid needs 0 < t_min <= t_max and at least one step, got [{lo}, {hi}] with {steps}"
        )));
    }
    if steps == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut grid: Vec<f64> = (0..steps)
        .map(|k| (a + (b - a) * k as f64 / (steps - 1) as f64).exp())
        .collect();
    grid[0] = lo;
    grid[steps - 1] = hi;
    Ok(grid)
}

/// Default grid: [`DEFAULT_GRID_STEPS`] scales from `1e-4 / diameter`, where
/// the space looks like a single point, to `100 / min_gap`, where every point
/// is isolated.
pub fn default_grid(space: &MetricSpace) -> Result<Vec<f64>> {
    match space.min_gap() {
        None => log_grid(1e-4, 1e2, DEFAULT_GRID_STEPS),
        Some(gap) => log_grid(1e-4 / space.diameter(), 1e2 / gap, DEFAULT_GRID_STEPS),
    }
}

/// The single scale `t = sqrt(r)` used when measuring training trajectories,
/// `r` being the training set size.
pub fn sqrt_r_scale(training_size: usize) -> Result<f64> {
    if training_size == 0 {
        return Err(MagError::InvalidConfig("training size must be positive".into()));
    }
    Ok((training_size as f64).sqrt())
}

fn evaluate(space: &MetricSpace, sorted_1d: Option<&[f64]>, t: f64, backend: &Backend) -> Result<(f64, bool)> {
    match backend {
        Backend::Exact => Ok((magnitude_exact(&space.similarity(t)?)?.0.value, true)),
        Backend::IterNorm(cfg) => {
            let sol = solve_iter_norm(&space.similarity(t)?, cfg)?;
            Ok((sol.estimate.value, !sol.estimate.has_flag(FLAG_NOT_CONVERGED)))
        }
        Backend::Gd(cfg) => {
            let sol = solve_gd(&space.similarity(t)?, cfg)?;
            Ok((sol.estimate.value, !sol.estimate.has_flag(FLAG_NOT_CONVERGED)))
        }
        Backend::ClosedForm1d => {
            let xs = sorted_1d.expect("checked before the sweep");
            let scaled: Vec<f64> = xs.iter().map(|x| x * t).collect();
            Ok((magnitude_1d(&scaled)?, true))
        }
    }
}

/// Evaluates `Mag(tX)` at every scale of an ascending grid.
///
/// A failure at one scale is recorded in that entry and the sweep goes on.
pub fn magnitude_function(space: &MetricSpace, scales: &[f64], backend: &Backend) -> Result<ScaleSweep> {
    if scales.is_empty() {
        return Err(MagError::InvalidConfig("scale grid is empty".into()));
    }
    for &t in scales {
        check_scale(t)?;
    }
    if let Some(k) = scales.windows(2).position(|w| w[1] <= w[0]) {
        return Err(MagError::UnsortedInput { index: k + 1 });
    }
    let sorted_1d = match backend {
        Backend::ClosedForm1d => {
            let cloud = space
                .cloud()
                .filter(|c| c.dim() == 1)
                .ok_or_else(|| MagError::InvalidConfig("closed-form 1d backend needs one-dimensional points".into()))?;
            let mut xs: Vec<f64> = (0..cloud.len()).map(|i| cloud.point(i)[0]).collect();
            xs.sort_by(f64::total_cmp);
            Some(xs)
        }
        _ => None,
    };

    let entries: Vec<SweepEntry> = scales
        .iter()
        .map(|&t| {
            let (value, error_flag) = match evaluate(space, sorted_1d.as_deref(), t, backend) {
                Ok((v, true)) => (Some(v), None),
                Ok((v, false)) => (Some(v), Some(FLAG_NOT_CONVERGED.to_string())),
                Err(e) => (None, Some(e.code().to_string())),
            };
            SweepEntry {
                t,
                value,
                method: backend.method(),
                error_flag,
            }
        })
        .collect();
    let slopes = entries
        .windows(2)
        .map(|w| match (w[0].value, w[1].value) {
            (Some(a), Some(b)) => (b.ln() - a.ln()) / (w[1].t.ln() - w[0].t.ln()),
            _ => f64::NAN,
        })
        .collect();
    Ok(ScaleSweep { entries, slopes })
}

/// Least-squares slope of `log Mag` against `log t` over `window`.
pub fn magnitude_dimension(sweep: &ScaleSweep, window: Range<usize>) -> Result<f64> {
    let pts: Vec<(f64, f64)> = sweep
        .entries
        .get(window)
        .unwrap_or(&[])
        .iter()
        .filter_map(|e| e.value.filter(|v| *v > 0.0 && v.is_finite()).map(|v| (e.t.ln(), v.ln())))
        .collect();
    if pts.len() < 2 {
        return Err(MagError::InsufficientWindow);
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(sxy / sxx)
}
