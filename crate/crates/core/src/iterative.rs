//! Iterative approximation of the weighting.
//!
//! Two solvers share one configuration and convergence rule
//! (`max_i |G(i) - 1| <= tol`, where `G = zeta w`):
//!
//! * [`solve_iter_norm`] starts from `w = 1` and divides every weight by its
//!   row sum, `w_i <- w_i / G(i)`, all rows at once from the previous `w`.
//! * [`solve_gd`] minimizes `sum_i (G(i) - 1)^2` by heavy-ball gradient
//!   descent, full batch or seeded mini-batches of rows.

use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{MagError, Result};
use crate::exact::{pmag, MagnitudeEstimate, Method, Weighting, FLAG_NOT_CONVERGED};
use crate::metric::SimilarityMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchSize {
    Full,
    Rows(usize),
}

/// Starting weights for gradient descent. Iterative normalization always
/// starts from ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitialWeights {
    #[default]
    Ones,
    Zeros,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub tol: f64,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch: BatchSize,
    pub rng_seed: u64,
    pub record_trace: bool,
    pub init: InitialWeights,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 1000,
            tol: 1e-6,
            learning_rate: 0.01,
            momentum: 0.9,
            batch: BatchSize::Full,
            rng_seed: 0,
            record_trace: false,
            init: InitialWeights::Ones,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(MagError::InvalidConfig("max_iters must be at least 1".into()));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(MagError::InvalidConfig("tol must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(MagError::InvalidConfig("learning_rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(MagError::InvalidConfig("momentum must lie in [0, 1)".into()));
        }
        if self.batch == BatchSize::Rows(0) {
            return Err(MagError::InvalidConfig("batch size must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub estimate: f64,
    pub residual: f64,
    pub loss: f64,
    pub elapsed_seconds: f64,
}

/// Per-iteration history. Record 0 is the starting point.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConvergenceTrace {
    pub records: Vec<TraceRecord>,
}

impl ConvergenceTrace {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["iteration", "estimate", "residual", "loss", "elapsed_seconds"])?;
        for r in &self.records {
            wtr.write_record([
                r.iteration.to_string(),
                r.estimate.to_string(),
                r.residual.to_string(),
                r.loss.to_string(),
                r.elapsed_seconds.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn losses(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.loss).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub estimate: MagnitudeEstimate,
    pub weighting: Weighting,
    pub trace: ConvergenceTrace,
}

struct Tracker {
    start: Instant,
    enabled: bool,
    trace: ConvergenceTrace,
}

impl Tracker {
    fn new(enabled: bool) -> Self {
        Tracker {
            start: Instant::now(),
            enabled,
            trace: ConvergenceTrace::default(),
        }
    }

    fn record(&mut self, iteration: usize, w: &[f64], g: &[f64]) {
        if self.enabled {
            self.trace.records.push(TraceRecord {
                iteration,
                estimate: w.iter().sum(),
                residual: max_defect(g),
                loss: loss(g),
                elapsed_seconds: self.start.elapsed().as_secs_f64(),
            });
        }
    }
}

fn max_defect(g: &[f64]) -> f64 {
    g.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max)
}

fn loss(g: &[f64]) -> f64 {
    g.iter().map(|x| (x - 1.0) * (x - 1.0)).sum()
}

fn finish(
    sim: &SimilarityMatrix,
    w: Vec<f64>,
    method: Method,
    iterations: usize,
    converged: bool,
    tracker: Tracker,
) -> Solution {
    let weighting = Weighting::new(sim, w);
    let mut flags = Vec::new();
    if !converged {
        flags.push(FLAG_NOT_CONVERGED.to_string());
    }
    let estimate = MagnitudeEstimate {
        value: weighting.magnitude(),
        pmag: pmag(&weighting),
        method,
        iterations,
        residual_norm: weighting.max_residual(),
        wall_time: tracker.start.elapsed().as_secs_f64(),
        converged,
        flags,
    };
    Solution {
        estimate,
        weighting,
        trace: tracker.trace,
    }
}

/// Iterative normalization. `iterations` counts weight updates, so a space
/// whose rows are permutations of each other reports exactly one.
pub fn solve_iter_norm(sim: &SimilarityMatrix, cfg: &SolverConfig) -> Result<Solution> {
    cfg.validate()?;
    let n = sim.len();
    if n == 0 {
        return Err(MagError::EmptyInput);
    }
    let mut tracker = Tracker::new(cfg.record_trace);
    let mut w = vec![1.0; n];
    let mut g = vec![0.0; n];
    sim.matvec(&w, &mut g);
    tracker.record(0, &w, &g);

    let mut iterations = 0;
    let mut converged = max_defect(&g) <= cfg.tol;
    while !converged && iterations < cfg.max_iters {
        for (row, (wi, gi)) in w.iter_mut().zip(&g).enumerate() {
            if !(*gi > 0.0 && gi.is_finite()) {
                return Err(MagError::NonFiniteUpdate {
                    iteration: iterations + 1,
                    row,
                });
            }
            *wi /= gi;
        }
        iterations += 1;
        sim.matvec(&w, &mut g);
        tracker.record(iterations, &w, &g);
        converged = max_defect(&g) <= cfg.tol;
    }
    Ok(finish(sim, w, Method::IterNorm, iterations, converged, tracker))
}

/// Consecutive loss increases tolerated before declaring divergence. The
/// streak only counts once the loss is above its starting value, so noise at
/// the stochastic floor is not mistaken for divergence.
const DIVERGENCE_WINDOW: usize = 10;

/// Heavy-ball gradient descent on `sum_i (G(i) - 1)^2`.
///
/// The full gradient is `2 zeta (zeta w - 1)`. With `BatchSize::Rows(b)`
/// each step descends the loss terms of `b` rows drawn without replacement
/// within each epoch. The batch gradient is not rescaled to the full sum, so
/// its curvature never exceeds the full-batch curvature and any learning rate
/// stable for full batches stays stable.
pub fn solve_gd(sim: &SimilarityMatrix, cfg: &SolverConfig) -> Result<Solution> {
    cfg.validate()?;
    let n = sim.len();
    if n == 0 {
        return Err(MagError::EmptyInput);
    }
    let mut tracker = Tracker::new(cfg.record_trace);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut cursor = n;

    let mut w = match cfg.init {
        InitialWeights::Ones => vec![1.0; n],
        InitialWeights::Zeros => vec![0.0; n],
    };
    let mut velocity = vec![0.0; n];
    let mut g = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut grad = vec![0.0; n];
    sim.matvec(&w, &mut g);
    tracker.record(0, &w, &g);
    let start_loss = loss(&g);
    let mut prev_loss = start_loss;
    let mut rising = 0usize;

    let mut iterations = 0;
    let mut converged = max_defect(&g) <= cfg.tol;
    while !converged && iterations < cfg.max_iters {
        for (ri, gi) in r.iter_mut().zip(&g) {
            *ri = gi - 1.0;
        }
        match cfg.batch {
            BatchSize::Rows(b) if b < n => {
                grad.iter_mut().for_each(|x| *x = 0.0);
                for _ in 0..b {
                    if cursor == n {
                        order.shuffle(&mut rng);
                        cursor = 0;
                    }
                    let i = order[cursor];
                    cursor += 1;
                    let coef = 2.0 * r[i];
                    for (gk, z) in grad.iter_mut().zip(sim.row(i)) {
                        *gk += coef * z;
                    }
                }
            }
            _ => {
                sim.matvec(&r, &mut grad);
                grad.iter_mut().for_each(|x| *x *= 2.0);
            }
        }
        for ((wi, vi), gi) in w.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
            *vi = cfg.momentum * *vi + gi;
            *wi -= cfg.learning_rate * *vi;
        }
        iterations += 1;
        sim.matvec(&w, &mut g);
        tracker.record(iterations, &w, &g);

        let current = loss(&g);
        if !current.is_finite() {
            return Err(MagError::Diverged { iteration: iterations });
        }
        rising = if current > prev_loss { rising + 1 } else { 0 };
        if rising >= DIVERGENCE_WINDOW && current > start_loss {
            return Err(MagError::Diverged { iteration: iterations });
        }
        prev_loss = current;
        converged = max_defect(&g) <= cfg.tol;
    }
    Ok(finish(sim, w, Method::Gd, iterations, converged, tracker))
}
