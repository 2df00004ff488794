// Where magnitude is and is not submodular.

use magkit::lab::{
    brute_force_best_subset, check_submodular_1d, check_submodular_3pt, counterexample_gap,
    counterexample_gap_bordered, fuzz_submodular_1d, fuzz_submodular_3pt, limit_gap,
};
use magkit::metric::{Metric, MetricSpace};
use magkit::subset::greedy_select;

pub fn run_example() -> magkit::Result<()> {
    // Adding the origin to a scaled cross-polytope gains more than one point's worth.
    for (dim, t) in [(1, 5.0), (10, 5.0), (100, 5.0), (500, 5.0)] {
        println!("D {dim:>3} t {t}: gap {:.6}", counterexample_gap(dim, t)?);
    }
    println!("bordered route at D 500: {:.6}", counterexample_gap_bordered(500, 5.0)?);
    println!("limit of the normalized gap at t 1: {:.6}", limit_gap(1.0)?);

    let r = check_submodular_1d(&[0.0, 3.0, 10.0], 1.0, 6.5)?;
    println!("line, different gaps: slack {:.2e}", r.slack);
    let r = check_submodular_3pt(1.0, 1.5, 2.0)?;
    println!("triangle 1, 1.5, 2: slack {:.2e} {:?}", r.slack, r.verdict);
    println!("line fuzz {:?}", fuzz_submodular_1d(2000, 0)?);
    println!("triangle fuzz {:?}", fuzz_submodular_3pt(2000, 0)?);

    let xs: Vec<Vec<f64>> = [0.0, 0.4, 1.0, 2.5, 2.6, 5.0, 7.0, 7.2].iter().map(|&x| vec![x]).collect();
    let space = MetricSpace::from_points(&xs, Metric::Euclidean)?;
    let (best, value) = brute_force_best_subset(&space, 1.0, 3)?;
    let greedy = greedy_select(&space, 1.0, f64::MIN_POSITIVE, 3, 0)?;
    println!("best 3-subset {best:?} = {value:.4}; greedy {:?} = {:.4}", greedy.point_ids(), greedy.final_magnitude());
    Ok(())
}

#[allow(dead_code)]
fn main() -> magkit::Result<()> {
    run_example()
}
