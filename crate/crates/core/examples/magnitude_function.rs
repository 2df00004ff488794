// Magnitude across scales and the dimension read off its log-log slope.

use magkit::data::{grid_1d, grid_2d};
use magkit::metric::{Metric, MetricSpace};
use magkit::scale::{default_grid, log_grid, magnitude_dimension, magnitude_function, Backend};

pub fn run_example() -> magkit::Result<()> {
    // Two close points and one far away: plateaus near 1, 2 and 3.
    let three = MetricSpace::from_points(&[vec![0.0, 0.0], vec![0.01, 0.0], vec![100.0, 0.0]], Metric::Euclidean)?;
    let sweep = magnitude_function(&three, &default_grid(&three)?, &Backend::Exact)?;
    for e in sweep.entries.iter().step_by(4) {
        println!("t {:>10.3e}  Mag {:.4}", e.t, e.value.unwrap());
    }

    let line: Vec<Vec<f64>> = grid_1d(1000, 0.0, 1.0).into_iter().map(|x| vec![x]).collect();
    let line = MetricSpace::from_points(&line, Metric::Euclidean)?;
    let sweep = magnitude_function(&line, &log_grid(1.0, 1e5, 40)?, &Backend::ClosedForm1d)?;
    println!("line dimension {:.3}", magnitude_dimension(&sweep, sweep.window(10.0, 300.0))?);

    let square = MetricSpace::from_points(&grid_2d(30, 0.0, 1.0), Metric::Euclidean)?;
    let sweep = magnitude_function(&square, &log_grid(1.0, 1e3, 30)?, &Backend::Exact)?;
    println!("square dimension {:.3}", magnitude_dimension(&sweep, sweep.window(20.0, 60.0))?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> magkit::Result<()> {
    run_example()
}
