// Greedy, hierarchy and random subset curves on three blobs.

use magkit::data::three_blobs;
use magkit::exact::magnitude_exact;
use magkit::hierarchy::CoverHierarchy;
use magkit::metric::{Metric, MetricSpace};
use magkit::subset::{greedy_select, random_select, DEFAULT_TOLERANCE};

pub fn run_example() -> magkit::Result<()> {
    let (pts, _) = three_blobs(50, 3);
    let space = MetricSpace::from_points(&pts, Metric::Euclidean)?;
    let n = space.len();
    let full = magnitude_exact(&space.similarity(1.0)?)?.0.value;

    let greedy = greedy_select(&space, 1.0, DEFAULT_TOLERANCE, n, 0)?;
    let hier = CoverHierarchy::build(&space)?.approx_magnitude_topdown(1.0, n)?;
    let sizes: Vec<usize> = (1..=n).collect();
    let random = random_select(&space, 1.0, &sizes, 0)?;

    println!("Mag(X) = {full:.4} over {n} points; greedy stopped at {} points", greedy.stopped_at);
    println!("size  greedy  hierarchy  random");
    for k in [1, 5, 10, 20, 40, 80] {
        let g = greedy.at_size(k).map_or("-".into(), |v| format!("{v:.3}"));
        println!("{k:>4}  {g:>6}  {:>9.3}  {:>6.3}", hier.at_size(k).unwrap(), random.at_size(k).unwrap());
    }
    if let Some(k) = greedy.size_reaching(0.99 * full) {
        println!("greedy reaches 99% of Mag(X) with {k} points");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> magkit::Result<()> {
    run_example()
}
