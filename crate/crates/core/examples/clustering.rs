// Magnitude clustering with the threshold picked by persistence.

use magkit::cluster::{adjusted_rand_index, cluster, default_theta_grid, persistence_sweep};
use magkit::data::three_blobs;
use magkit::metric::{Metric, MetricSpace};

pub fn run_example() -> magkit::Result<()> {
    let line = MetricSpace::from_points(&[vec![0.0], vec![0.1], vec![10.0], vec![10.1]], Metric::Euclidean)?;
    let r = cluster(&line, 0.5, 0)?;
    println!("four points at theta 0.5: {:?}", r.clusters());

    let (pts, labels) = three_blobs(60, 11);
    let space = MetricSpace::from_points(&pts, Metric::Euclidean)?;
    let profile = persistence_sweep(&space, &default_theta_grid(), 0)?;
    for (theta, count) in profile.thresholds.iter().zip(&profile.counts) {
        println!("theta {theta:.4}  clusters {count}");
    }
    println!("persistent count {}", profile.persistent_count);

    let k = profile.counts.iter().position(|&c| c == profile.persistent_count).unwrap();
    let r = cluster(&space, profile.thresholds[k], 0)?;
    println!("ARI against the generating blobs {:.3}", adjusted_rand_index(&r.assignment, &labels)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> magkit::Result<()> {
    run_example()
}
