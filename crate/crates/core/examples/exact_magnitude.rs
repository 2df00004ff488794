// Exact magnitude by a dense solve, checked against the closed forms.

use magkit::exact::{magnitude_1d, magnitude_exact, magnitude_homogeneous_cross, magnitude_two_point};
use magkit::lab::cross_polytope;
use magkit::metric::{Metric, MetricSpace};

pub fn run_example() -> magkit::Result<()> {
    // Two points at distance ln 2 have magnitude 4/3.
    let pair = MetricSpace::from_points(&[vec![0.0], vec![std::f64::consts::LN_2]], Metric::Euclidean)?;
    let (est, w) = magnitude_exact(&pair.similarity(1.0)?)?;
    println!("pair: solve {:.12} closed form {:.12} weights {:?}", est.value, magnitude_two_point(std::f64::consts::LN_2)?, w.w);

    let xs = [0.0, 0.3, 1.1, 4.0, 4.2];
    let line = MetricSpace::from_points(&xs.iter().map(|&x| vec![x]).collect::<Vec<_>>(), Metric::Euclidean)?;
    let (est, _) = magnitude_exact(&line.similarity(1.0)?)?;
    println!("line: solve {:.12} sum of tanh {:.12}", est.value, magnitude_1d(&xs)?);

    let (dim, t) = (10, 1.5);
    let cross = cross_polytope(dim, t)?;
    let (est, _) = magnitude_exact(&cross.similarity(1.0)?)?;
    println!("cross-polytope D={dim} t={t}: solve {:.12} closed form {:.12}", est.value, magnitude_homogeneous_cross(dim, t)?);
    println!("pmag {:.6} flags {:?} residual {:.2e}", est.pmag, est.flags, est.residual_norm);
    Ok(())
}

#[allow(dead_code)]
fn main() -> magkit::Result<()> {
    run_example()
}
