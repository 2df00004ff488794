//! Timing and accuracy of the solvers on seeded standard-normal planar clouds.
//!
//! Times cover the solve only; building the similarity matrix is shared by all
//! methods and excluded. Errors are relative to the exact solve on the same
//! cloud, when the size is within the exact limit.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::standard_normal_cloud;
use crate::error::{MagError, Result};
use crate::exact::magnitude_exact;
use crate::iterative::{solve_gd, solve_iter_norm, SolverConfig};
use crate::metric::{Metric, MetricSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchMethod {
    Exact,
    IterNorm,
    Gd,
}

impl BenchMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            BenchMethod::Exact => "exact",
            BenchMethod::IterNorm => "iter-norm",
            BenchMethod::Gd => "gd",
        }
    }
}

impl std::str::FromStr for BenchMethod {
    type Err = MagError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(BenchMethod::Exact),
            "iter-norm" => Ok(BenchMethod::IterNorm),
            "gd" => Ok(BenchMethod::Gd),
            other => Err(MagError::InvalidConfig(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub methods: Vec<BenchMethod>,
    pub repeats: usize,
    pub seed: u64,
    pub scale: f64,
    pub solver: SolverConfig,
    /// Largest size for which the exact reference is computed.
    pub exact_limit: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            sizes: vec![500, 1000, 2000],
            methods: vec![BenchMethod::Exact, BenchMethod::IterNorm],
            repeats: 3,
            seed: 0,
            scale: 1.0,
            solver: SolverConfig::default(),
            exact_limit: 12_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub size: usize,
    pub method: BenchMethod,
    /// Seconds.
    pub mean_time: f64,
    pub std_time: f64,
    pub mean_abs_rel_error: Option<f64>,
    /// Repeats on which an iterative solver raised an error (for example
    /// gradient descent diverging); they are left out of the means.
    pub failures: usize,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// One row per (size, method), in the order given. Repeat `r` uses the cloud
/// seeded with `seed + r`.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    if cfg.sizes.is_empty() || cfg.methods.is_empty() || cfg.repeats == 0 {
        return Err(MagError::InvalidConfig("bench needs sizes, methods and repeats >= 1".into()));
    }
    if cfg.sizes.contains(&0) {
        return Err(MagError::InvalidConfig("sizes must be positive".into()));
    }
    cfg.solver.validate()?;
    let mut rows = Vec::new();
    for &size in &cfg.sizes {
        let mut times = vec![Vec::new(); cfg.methods.len()];
        let mut errors = vec![Vec::new(); cfg.methods.len()];
        let mut failures = vec![0; cfg.methods.len()];
        for r in 0..cfg.repeats {
            let cloud = standard_normal_cloud(size, 2, cfg.seed.wrapping_add(r as u64));
            let sim = MetricSpace::from_points(&cloud, Metric::Euclidean)?.similarity(cfg.scale)?;
            let reference = if size <= cfg.exact_limit {
                let (est, _) = magnitude_exact(&sim)?;
                Some(est)
            } else {
                None
            };
            for (k, &method) in cfg.methods.iter().enumerate() {
                let outcome = match method {
                    BenchMethod::Exact => match &reference {
                        Some(est) => Ok(est.clone()),
                        None => Ok(magnitude_exact(&sim)?.0),
                    },
                    BenchMethod::IterNorm => solve_iter_norm(&sim, &cfg.solver).map(|s| s.estimate),
                    BenchMethod::Gd => solve_gd(&sim, &cfg.solver).map(|s| s.estimate),
                };
                let (value, time) = match outcome {
                    Ok(e) => (e.value, e.wall_time),
                    Err(e) if e.is_solver_error() => {
                        failures[k] += 1;
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                times[k].push(time);
                if let Some(est) = &reference {
                    errors[k].push(((value - est.value) / est.value).abs());
                }
            }
        }
        for (k, &method) in cfg.methods.iter().enumerate() {
            let (mean_time, std_time) = if times[k].is_empty() {
                (f64::NAN, f64::NAN)
            } else {
                mean_std(&times[k])
            };
            rows.push(BenchRow {
                size,
                method,
                mean_time,
                std_time,
                mean_abs_rel_error: (!errors[k].is_empty()).then(|| mean_std(&errors[k]).0),
                failures: failures[k],
            });
        }
    }
    Ok(rows)
}

pub fn write_bench_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["size", "method", "mean_time", "std_time", "mean_abs_rel_error", "failures"])?;
    for r in rows {
        w.write_record([
            r.size.to_string(),
            r.method.as_str().to_string(),
            format!("{:e}", r.mean_time),
            format!("{:e}", r.std_time),
            r.mean_abs_rel_error.map(|e| format!("{e:e}")).unwrap_or_default(),
            r.failures.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
