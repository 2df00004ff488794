//! The `magkit` command line.
//!
//! Every command prints one JSON object to stdout and writes bulk data (CSV
//! tables, dumps) to the paths given by flags. Failures print
//! `{"code", "message"}` to stderr and exit with 1 for bad input, 2 for a
//! solver failure and 3 when a verification suite does not hold.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::bench::{run_bench, write_bench_csv, BenchConfig, BenchMethod};
use crate::cluster::{cluster, persistence_sweep};
use crate::error::{MagError, Result};
use crate::exact::{magnitude_1d, magnitude_exact, MagnitudeEstimate, Method, Weighting};
use crate::hierarchy::CoverHierarchy;
use crate::io::{file_digest, read_space_file, write_weights_csv, InputKind};
use crate::iterative::{solve_gd, solve_iter_norm, BatchSize, Solution, SolverConfig};
use crate::lab;
use crate::metric::{DuplicatePolicy, Metric, MetricSpace};
use crate::scale::{default_grid, log_grid, magnitude_dimension, magnitude_function, sqrt_r_scale, Backend};
use crate::subset::{greedy_select, random_select, DEFAULT_TOLERANCE};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "magkit", version, about = "Magnitude of finite metric spaces")]
struct Cli {
    /// Worker threads for the solvers.
    #[arg(long, global = true, env = "MAGKIT_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Magnitude at one scale.
    Compute(ComputeArgs),
    /// Magnitude over a grid of scales.
    Function(FunctionArgs),
    /// Magnitude of growing subsets.
    Subset(SubsetArgs),
    /// Magnitude clustering.
    Cluster(ClusterArgs),
    /// Solver timing on seeded normal clouds.
    Bench(BenchArgs),
    /// Numerical checks of the submodularity results.
    Verify(VerifyArgs),
    /// Dump the cover hierarchy of a dataset.
    Hierarchy(HierarchyArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum KindArg {
    Points,
    Distances,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum MetricArg {
    Euclidean,
    Manhattan,
}

#[derive(Debug, Args, Serialize)]
struct InputArgs {
    /// CSV file: one point per row, or a square distance matrix.
    input: PathBuf,
    #[arg(long, value_enum, default_value = "points")]
    kind: KindArg,
    #[arg(long, value_enum, default_value = "euclidean")]
    metric: MetricArg,
    /// Merge repeated points instead of rejecting them.
    #[arg(long)]
    merge_duplicates: bool,
}

impl InputArgs {
    fn load(&self) -> Result<(MetricSpace, String)> {
        let kind = match self.kind {
            KindArg::Points => InputKind::Points,
            KindArg::Distances => InputKind::Distances,
        };
        let metric = match self.metric {
            MetricArg::Euclidean => Metric::Euclidean,
            MetricArg::Manhattan => Metric::Manhattan,
        };
        let policy = if self.merge_duplicates {
            DuplicatePolicy::Merge
        } else {
            DuplicatePolicy::Reject
        };
        let space = read_space_file(&self.input, kind, metric, policy)?;
        Ok((space, file_digest(&self.input)?))
    }
}

#[derive(Debug, Args, Serialize)]
struct SolverArgs {
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
    /// Gradient descent learning rate.
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 0.9)]
    momentum: f64,
    /// `full` or a number of rows per gradient step.
    #[arg(long, default_value = "full")]
    batch: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SolverArgs {
    fn config(&self, record_trace: bool) -> Result<SolverConfig> {
        let batch = match self.batch.as_str() {
            "full" => BatchSize::Full,
            b => BatchSize::Rows(
                b.parse()
                    .map_err(|_| MagError::InvalidConfig(format!("--batch must be 'full' or a count, got '{b}'")))?,
            ),
        };
        let cfg = SolverConfig {
            max_iters: self.max_iters,
            tol: self.tol,
            learning_rate: self.lr,
            momentum: self.momentum,
            batch,
            rng_seed: self.seed,
            record_trace,
            ..Default::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
enum SolveMethod {
    Exact,
    IterNorm,
    Gd,
    #[value(name = "closed-1d")]
    #[serde(rename = "closed-1d")]
    Closed1d,
}

#[derive(Debug, Args, Serialize)]
struct ComputeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value = "exact")]
    method: SolveMethod,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[command(flatten)]
    solver: SolverArgs,
    /// Write the weighting as CSV.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Write the iterative convergence trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Preset {
    /// The single scale `sqrt(r)` for a training set of size `r`.
    SqrtR,
}

#[derive(Debug, Args, Serialize)]
struct FunctionArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value = "exact")]
    method: SolveMethod,
    #[arg(long)]
    t_min: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    t_steps: Option<usize>,
    #[arg(long, value_enum, conflicts_with_all = ["t_min", "t_max", "t_steps"], requires = "training_size")]
    preset: Option<Preset>,
    #[arg(long)]
    training_size: Option<usize>,
    /// Scale window for the dimension estimate.
    #[arg(long, requires = "dimension_t_max")]
    dimension_t_min: Option<f64>,
    #[arg(long, requires = "dimension_t_min")]
    dimension_t_max: Option<f64>,
    #[command(flatten)]
    solver: SolverArgs,
    /// Sweep CSV output.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
enum SubsetMethod {
    Greedy,
    Hierarchy,
    Random,
}

#[derive(Debug, Args, Serialize)]
struct SubsetArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value = "greedy")]
    method: SubsetMethod,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Largest subset size (default: all points).
    #[arg(long)]
    budget: Option<usize>,
    /// Greedy stopping tolerance on the relative increase. Defaults to 1e-3
    /// unless a budget is given, in which case greedy runs to the budget.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Subset sizes for the random method, comma separated.
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Curve CSV output.
    #[arg(long)]
    out: PathBuf,
    /// Hierarchy JSON dump (hierarchy method only).
    #[arg(long)]
    dump_hierarchy: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct ClusterArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Merge threshold for a single run.
    #[arg(long, conflicts_with = "sweep")]
    theta: Option<f64>,
    /// Run over a threshold grid and report the persistent cluster count.
    #[arg(long)]
    sweep: bool,
    #[arg(long, default_value_t = 1e-3)]
    theta_min: f64,
    #[arg(long, default_value_t = 1.0)]
    theta_max: f64,
    #[arg(long, default_value_t = 24)]
    theta_steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Assignment CSV for a single run, persistence profile CSV for a sweep.
    #[arg(long)]
    out: PathBuf,
    /// Full merge trace as JSON (single run only).
    #[arg(long)]
    trace_json: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "exact,iter-norm")]
    methods: Vec<String>,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Largest size that gets an exact reference solve.
    #[arg(long, default_value_t = 12_000)]
    exact_limit: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
    /// Table CSV output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
enum Suite {
    Counterexample,
    #[value(name = "submod-1d")]
    #[serde(rename = "submod-1d")]
    Submod1d,
    #[value(name = "submod-3pt")]
    #[serde(rename = "submod-3pt")]
    Submod3pt,
    All,
}

#[derive(Debug, Args, Serialize)]
struct VerifyArgs {
    #[arg(value_enum)]
    suite: Suite,
    /// Random instances per fuzz suite.
    #[arg(long, default_value_t = 10_000)]
    fuzz: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args, Serialize)]
struct HierarchyArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Dump path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// The JSON object printed by every command except `verify`.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub command: String,
    pub input_digest: Option<String>,
    pub config: Value,
    pub method: Option<String>,
    pub magnitude: Option<f64>,
    pub pmag: Option<f64>,
    pub iterations: Option<usize>,
    pub residual: Option<f64>,
    pub converged: Option<bool>,
    pub flags: Vec<String>,
    /// Seconds.
    pub wall_time: f64,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub details: Value,
}

impl RunRecord {
    fn new(command: &str, input_digest: Option<String>, config: &impl Serialize, started: Instant) -> Self {
        RunRecord {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            input_digest,
            config: serde_json::to_value(config).unwrap_or(Value::Null),
            method: None,
            magnitude: None,
            pmag: None,
            iterations: None,
            residual: None,
            converged: None,
            flags: Vec::new(),
            wall_time: started.elapsed().as_secs_f64(),
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            details: Value::Null,
        }
    }

    fn with_estimate(mut self, est: &MagnitudeEstimate) -> Self {
        self.method = Some(est.method.as_str().to_string());
        self.magnitude = Some(est.value);
        self.pmag = Some(est.pmag);
        self.iterations = Some(est.iterations);
        self.residual = Some(est.residual_norm);
        self.converged = Some(est.converged);
        self.flags = est.flags.clone();
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub suite: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

/// A command failure together with its exit code.
#[derive(Debug)]
enum Failure {
    Error(MagError),
    Usage(String),
    Verification(String),
}

impl From<MagError> for Failure {
    fn from(e: MagError) -> Self {
        Failure::Error(e)
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn print_json(out: &mut dyn Write, v: &impl Serialize) -> Result<()> {
    serde_json::to_writer(&mut *out, v)?;
    writeln!(out)?;
    Ok(())
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return EXIT_OK;
            }
            let msg = e.render().to_string();
            let _ = writeln!(stderr, "{}", json!({"code": "Usage", "message": msg.trim()}));
            return EXIT_INPUT;
        }
    };
    let result = dispatch(cli, stdout);
    let (code, kind, message) = match result {
        Ok(()) => return EXIT_OK,
        Err(Failure::Error(e)) => {
            let code = if e.is_solver_error() { EXIT_SOLVER } else { EXIT_INPUT };
            (code, e.code().to_string(), e.to_string())
        }
        Err(Failure::Usage(m)) => (EXIT_INPUT, "Usage".to_string(), m),
        Err(Failure::Verification(m)) => (EXIT_VERIFY, "VerificationFailed".to_string(), m),
    };
    let _ = writeln!(stderr, "{}", json!({"code": kind, "message": message}));
    code
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> CmdResult {
    if let Some(n) = cli.threads {
        crate::pin_threads(n)?;
    }
    match cli.command {
        Command::Compute(a) => compute(a, out),
        Command::Function(a) => function(a, out),
        Command::Subset(a) => subset(a, out),
        Command::Cluster(a) => cluster_cmd(a, out),
        Command::Bench(a) => {
            if cli.threads.is_none() {
                return Err(usage("bench needs a pinned thread count: pass --threads or set MAGKIT_THREADS"));
            }
            bench(a, out)
        }
        Command::Verify(a) => verify(a, out),
        Command::Hierarchy(a) => hierarchy(a, out),
    }
}

fn sorted_line(space: &MetricSpace) -> Result<Vec<f64>> {
    let cloud = space
        .cloud()
        .filter(|c| c.dim() == 1)
        .ok_or_else(|| MagError::InvalidConfig("closed-1d needs one-dimensional points".into()))?;
    let mut xs: Vec<f64> = (0..cloud.len()).map(|i| cloud.point(i)[0]).collect();
    xs.sort_by(f64::total_cmp);
    Ok(xs)
}

fn compute(a: ComputeArgs, out: &mut dyn Write) -> CmdResult {
    let started = Instant::now();
    let (space, digest) = a.input.load()?;
    if a.method == SolveMethod::Closed1d && a.weights.is_some() {
        return Err(usage("--weights is not available with closed-1d"));
    }
    if a.trace.is_some() && !matches!(a.method, SolveMethod::IterNorm | SolveMethod::Gd) {
        return Err(usage("--trace needs an iterative method"));
    }
    let (est, weighting): (MagnitudeEstimate, Option<Weighting>) = match a.method {
        SolveMethod::Exact => {
            let (e, w) = magnitude_exact(&space.similarity(a.scale)?)?;
            (e, Some(w))
        }
        SolveMethod::IterNorm | SolveMethod::Gd => {
            let cfg = a.solver.config(a.trace.is_some())?;
            let sim = space.similarity(a.scale)?;
            let Solution {
                estimate,
                weighting,
                trace,
            } = if a.method == SolveMethod::Gd {
                solve_gd(&sim, &cfg)?
            } else {
                solve_iter_norm(&sim, &cfg)?
            };
            if let Some(p) = &a.trace {
                trace.write_csv(create(p)?)?;
            }
            (estimate, Some(weighting))
        }
        SolveMethod::Closed1d => {
            if !(a.scale > 0.0 && a.scale.is_finite()) {
                return Err(MagError::NonPositiveScale(a.scale).into());
            }
            let xs: Vec<f64> = sorted_line(&space)?.iter().map(|x| x * a.scale).collect();
            (MagnitudeEstimate::closed_form(magnitude_1d(&xs)?, Method::ClosedForm1d), None)
        }
    };
    if let (Some(p), Some(w)) = (&a.weights, &weighting) {
        write_weights_csv(w, create(p)?)?;
    }
    let mut rec = RunRecord::new("compute", Some(digest), &a, started).with_estimate(&est);
    rec.details = json!({"points": space.len(), "scale": a.scale});
    print_json(out, &rec)?;
    Ok(())
}

fn backend(method: SolveMethod, solver: &SolverArgs) -> Result<Backend> {
    Ok(match method {
        SolveMethod::Exact => Backend::Exact,
        SolveMethod::IterNorm => Backend::IterNorm(solver.config(false)?),
        SolveMethod::Gd => Backend::Gd(solver.config(false)?),
        SolveMethod::Closed1d => Backend::ClosedForm1d,
    })
}

fn function(a: FunctionArgs, out: &mut dyn Write) -> CmdResult {
    let started = Instant::now();
    let (space, digest) = a.input.load()?;
    let grid = match a.preset {
        Some(Preset::SqrtR) => vec![sqrt_r_scale(a.training_size.unwrap_or(0))?],
        None => {
            let default = default_grid(&space)?;
            let lo = a.t_min.unwrap_or(default[0]);
            let hi = a.t_max.unwrap_or(default[default.len() - 1]);
            log_grid(lo, hi, a.t_steps.unwrap_or(default.len())).map_err(|e| usage(e.to_string()))?
        }
    };
    let sweep = magnitude_function(&space, &grid, &backend(a.method, &a.solver)?)?;
    sweep.write_csv(create(&a.out)?)?;
    let dimension = match (a.dimension_t_min, a.dimension_t_max) {
        (Some(lo), Some(hi)) => Some(magnitude_dimension(&sweep, sweep.window(lo, hi))?),
        _ => None,
    };
    let failed = sweep.entries.iter().filter(|e| e.value.is_none()).count();
    let mut rec = RunRecord::new("function", Some(digest), &a, started);
    rec.method = Some(sweep.entries[0].method.as_str().to_string());
    if let [only] = sweep.entries.as_slice() {
        rec.magnitude = only.value;
    }
    rec.details = json!({
        "points": space.len(),
        "scales": grid.len(),
        "t_min": grid[0],
        "t_max": grid[grid.len() - 1],
        "failed_scales": failed,
        "dimension": dimension,
    });
    print_json(out, &rec)?;
    Ok(())
}

fn subset(a: SubsetArgs, out: &mut dyn Write) -> CmdResult {
    let started = Instant::now();
    let (space, digest) = a.input.load()?;
    let n = space.len();
    if a.method != SubsetMethod::Greedy && a.tolerance.is_some() {
        return Err(usage("--tolerance applies to the greedy method only"));
    }
    if a.method != SubsetMethod::Random && !a.sizes.is_empty() {
        return Err(usage("--sizes applies to the random method only"));
    }
    if a.method != SubsetMethod::Hierarchy && a.dump_hierarchy.is_some() {
        return Err(usage("--dump-hierarchy applies to the hierarchy method only"));
    }
    let budget = a.budget.unwrap_or(n);
    if budget == 0 || budget > n {
        return Err(usage(format!("--budget must lie in 1..={n}")));
    }
    let curve = match a.method {
        SubsetMethod::Greedy => {
            let tol = match (a.tolerance, a.budget) {
                (Some(t), _) => t,
                (None, Some(_)) => f64::MIN_POSITIVE,
                (None, None) => DEFAULT_TOLERANCE,
            };
            greedy_select(&space, a.scale, tol, budget, a.seed)?
        }
        SubsetMethod::Hierarchy => {
            let h = CoverHierarchy::build(&space)?;
            if let Some(p) = &a.dump_hierarchy {
                h.write_json(create(p)?)?;
            }
            h.approx_magnitude_topdown(a.scale, budget)?
        }
        SubsetMethod::Random => {
            let sizes: Vec<usize> = if a.sizes.is_empty() {
                (1..=budget).collect()
            } else {
                a.sizes.clone()
            };
            random_select(&space, a.scale, &sizes, a.seed)?
        }
    };
    curve.write_csv(create(&a.out)?)?;
    let mut rec = RunRecord::new("subset", Some(digest), &a, started);
    rec.method = Some(curve.method.as_str().to_string());
    rec.magnitude = Some(curve.final_magnitude());
    rec.details = json!({
        "points": n,
        "stopped_at": curve.stopped_at,
        "tolerance_used": curve.tolerance_used,
        "rows": curve.steps.len(),
    });
    print_json(out, &rec)?;
    Ok(())
}

#[derive(Serialize)]
struct Versioned<'a, T: Serialize> {
    schema_version: u32,
    #[serde(flatten)]
    inner: &'a T,
}

fn cluster_cmd(a: ClusterArgs, out: &mut dyn Write) -> CmdResult {
    let started = Instant::now();
    let (space, digest) = a.input.load()?;
    let mut rec = RunRecord::new("cluster", Some(digest), &a, started);
    match (a.theta, a.sweep) {
        (Some(theta), false) => {
            let r = cluster(&space, theta, a.seed)?;
            r.write_assignment_csv(create(&a.out)?)?;
            if let Some(p) = &a.trace_json {
                serde_json::to_writer_pretty(
                    create(p)?,
                    &Versioned {
                        schema_version: SCHEMA_VERSION,
                        inner: &r,
                    },
                )
                .map_err(MagError::from)?;
            }
            rec.details = json!({"theta": theta, "cluster_count": r.cluster_count, "points": space.len()});
        }
        (None, true) => {
            if a.trace_json.is_some() {
                return Err(usage("--trace-json applies to single-threshold runs"));
            }
            let grid = log_grid(a.theta_min, a.theta_max, a.theta_steps).map_err(|e| usage(e.to_string()))?;
            let p = persistence_sweep(&space, &grid, a.seed)?;
            p.write_csv(create(&a.out)?)?;
            rec.details = json!({"persistent_count": p.persistent_count, "thresholds": grid.len(), "points": space.len()});
        }
        _ => return Err(usage("pass exactly one of --theta or --sweep")),
    }
    rec.wall_time = started.elapsed().as_secs_f64();
    print_json(out, &rec)?;
    Ok(())
}

fn bench(a: BenchArgs, out: &mut dyn Write) -> CmdResult {
    let started = Instant::now();
    let methods = a
        .methods
        .iter()
        .map(|m| m.parse::<BenchMethod>())
        .collect::<Result<Vec<_>>>()
        .map_err(|e| usage(e.to_string()))?;
    let cfg = BenchConfig {
        sizes: a.sizes.clone(),
        methods,
        repeats: a.repeats,
        seed: a.seed,
        scale: a.scale,
        solver: SolverConfig {
            tol: a.tol,
            max_iters: a.max_iters,
            ..Default::default()
        },
        exact_limit: a.exact_limit,
    };
    let rows = run_bench(&cfg).map_err(|e| match e {
        MagError::InvalidConfig(m) => usage(m),
        other => Failure::Error(other),
    })?;
    if let Some(p) = &a.out {
        write_bench_csv(&rows, create(p)?)?;
    }
    let mut rec = RunRecord::new("bench", None, &a, started);
    rec.details = json!({"threads": rayon::current_num_threads(), "rows": rows});
    print_json(out, &rec)?;
    Ok(())
}

fn check(name: &str, passed: bool, detail: Value) -> Check {
    Check {
        name: name.to_string(),
        passed,
        detail,
    }
}

fn counterexample_checks() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let gap = lab::counterexample_gap(500, 5.0)?;
    checks.push(check(
        "gap_d500_t5",
        (7.16..=7.20).contains(&gap),
        json!({"gap": gap, "expected": [7.16, 7.20]}),
    ));
    let bordered = lab::counterexample_gap_bordered(500, 5.0)?;
    checks.push(check(
        "gap_two_routes_agree",
        (gap - bordered).abs() <= 1e-6,
        json!({"dense": gap, "bordered": bordered}),
    ));
    let line_gaps: Vec<f64> = [0.5, 1.0, 5.0]
        .iter()
        .map(|&t| lab::counterexample_gap(1, t))
        .collect::<Result<_>>()?;
    checks.push(check(
        "gap_d1_at_most_one",
        line_gaps.iter().all(|&g| g <= 1.0 + 1e-9),
        json!({"gaps": line_gaps}),
    ));
    let limits: Vec<f64> = [0.1, 1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|&t| lab::limit_gap(t))
        .collect::<Result<_>>()?;
    checks.push(check(
        "limit_gap_positive",
        limits.iter().all(|&g| g > 0.0),
        json!({"t": [0.1, 1.0, 2.0, 5.0, 10.0], "limit": limits}),
    ));
    let r = lab::check_submodular_cross(50, 2.0)?;
    checks.push(check(
        "cross_polytope_violation",
        !r.holds(),
        serde_json::to_value(&r).map_err(MagError::from)?,
    ));
    Ok(checks)
}

fn verify(a: VerifyArgs, out: &mut dyn Write) -> CmdResult {
    let mut checks = Vec::new();
    if matches!(a.suite, Suite::Counterexample | Suite::All) {
        checks.extend(counterexample_checks()?);
    }
    if matches!(a.suite, Suite::Submod1d | Suite::All) {
        let s = lab::fuzz_submodular_1d(a.fuzz, a.seed)?;
        let equality = lab::check_submodular_1d(&[0.0, 3.0, 10.0], 1.0, 6.5)?;
        checks.push(check(
            "submod_1d_fuzz",
            s.violations == 0,
            serde_json::to_value(&s).map_err(MagError::from)?,
        ));
        checks.push(check(
            "submod_1d_different_gaps_equal",
            equality.slack.abs() <= 1e-10,
            json!({"slack": equality.slack}),
        ));
    }
    if matches!(a.suite, Suite::Submod3pt | Suite::All) {
        let s = lab::fuzz_submodular_3pt(a.fuzz, a.seed)?;
        checks.push(check(
            "submod_3pt_fuzz",
            s.violations == 0,
            serde_json::to_value(&s).map_err(MagError::from)?,
        ));
    }
    let passed = checks.iter().all(|c| c.passed);
    let suite = serde_json::to_value(a.suite)
        .ok()
        .and_then(|v| v.as_str().map(String::from))
        .unwrap_or_default();
    let report = VerifyReport {
        schema_version: SCHEMA_VERSION,
        suite,
        passed,
        checks,
    };
    print_json(out, &report)?;
    if passed {
        Ok(())
    } else {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        Err(Failure::Verification(format!("failed checks: {}", failed.join(", "))))
    }
}

fn hierarchy(a: HierarchyArgs, out: &mut dyn Write) -> CmdResult {
    let started = Instant::now();
    let (space, digest) = a.input.load()?;
    let h = CoverHierarchy::build(&space)?;
    match &a.out {
        None => print_json(out, &h.dump())?,
        Some(p) => {
            h.write_json(create(p)?)?;
            let mut rec = RunRecord::new("hierarchy", Some(digest), &a, started);
            rec.details = json!({
                "points": h.len(),
                "height": h.height(),
                "level_sizes": h.levels().iter().map(Vec::len).collect::<Vec<_>>(),
            });
            print_json(out, &rec)?;
        }
    }
    Ok(())
}
