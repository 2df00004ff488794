// Building, editing and dumping a cover hierarchy.

use magkit::hierarchy::CoverHierarchy;
use magkit::metric::{Metric, MetricSpace};

pub fn run_example() -> magkit::Result<()> {
    let pts: Vec<Vec<f64>> = [0.0, 0.9, 2.0, 2.9, 7.5, 8.0].iter().map(|&x| vec![x]).collect();
    let mut h = CoverHierarchy::build(&MetricSpace::from_points(&pts, Metric::Euclidean)?)?;
    println!("built: {:?}", h.levels());

    let id = h.insert_point(&[4.6])?;
    println!("inserted 4.6 as id {id}: {:?}", h.levels());
    h.delete_point(2)?;
    println!("deleted id 2: {:?}", h.levels());
    h.check_invariants().expect("covering, independent, minimal, within the height bound");

    println!("top-down order {:?}", h.topdown_order());
    let curve = h.approx_magnitude_topdown(1.0, h.len())?;
    for s in &curve.steps {
        println!("  {:>2} points  Mag {:.6}", s.size, s.magnitude);
    }
    println!("{}", serde_json::to_string(&h.dump()).unwrap());
    Ok(())
}

#[allow(dead_code)]
fn main() -> magkit::Result<()> {
    run_example()
}
