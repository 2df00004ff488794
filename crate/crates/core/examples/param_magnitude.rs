// Magnitude of a flattened parameter vector from a subsample.

use magkit::data::standard_normal_cloud;
use magkit::exact::magnitude_1d;
use magkit::subset::estimate_param_magnitude;

pub fn run_example() -> magkit::Result<()> {
    let params: Vec<f64> = standard_normal_cloud(20_000, 1, 5).into_iter().map(|p| 0.05 * p[0]).collect();
    for sample in [100, 1000, 5000] {
        let est = estimate_param_magnitude(&params, sample, 0)?;
        println!("sample {sample:>5}: {:.4}", est.value);
    }
    let mut all = params.clone();
    all.sort_by(f64::total_cmp);
    all.dedup();
    println!("all values: {:.4}", magnitude_1d(&all)?);
    println!("full sample: {:.4}", estimate_param_magnitude(&params, params.len(), 0)?.value);
    Ok(())
}

#[allow(dead_code)]
fn main() -> magkit::Result<()> {
    run_example()
}
