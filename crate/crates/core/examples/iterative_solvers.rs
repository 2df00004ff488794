// Iterative normalization against gradient descent on a spread-out cloud.

use magkit::data::uniform_box;
use magkit::exact::magnitude_exact;
use magkit::iterative::{solve_gd, solve_iter_norm, BatchSize, SolverConfig};
use magkit::metric::{Metric, MetricSpace};

pub fn run_example() -> magkit::Result<()> {
    let pts = uniform_box(300, 2, 0.0, 30.0, 1);
    let sim = MetricSpace::from_points(&pts, Metric::Euclidean)?.similarity(1.0)?;
    let exact = magnitude_exact(&sim)?.0.value;
    println!("exact {exact:.6}");

    let cfg = SolverConfig {
        record_trace: true,
        max_iters: 5000,
        ..Default::default()
    };
    let it = solve_iter_norm(&sim, &cfg)?;
    println!(
        "iter-norm {:.6} after {} iterations (rel err {:.1e})",
        it.estimate.value,
        it.estimate.iterations,
        (it.estimate.value - exact).abs() / exact
    );
    for r in it.trace.records.iter().take(6) {
        println!("  it {:>3} estimate {:.6} residual {:.2e}", r.iteration, r.estimate, r.residual);
    }

    for batch in [BatchSize::Full, BatchSize::Rows(64)] {
        let gd = solve_gd(&sim, &SolverConfig { batch, ..cfg.clone() })?;
        println!(
            "gd {batch:?}: {:.6} after {} iterations, converged {}",
            gd.estimate.value, gd.estimate.iterations, gd.estimate.converged
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> magkit::Result<()> {
    run_example()
}
