// A small timing table; the CLI `bench` command runs the same harness.

use magkit::bench::{run_bench, write_bench_csv, BenchConfig, BenchMethod};

pub fn run_example() -> magkit::Result<()> {
    magkit::pin_threads(1)?;
    let cfg = BenchConfig {
        sizes: vec![250, 500, 1000],
        methods: vec![BenchMethod::Exact, BenchMethod::IterNorm, BenchMethod::Gd],
        repeats: 2,
        ..Default::default()
    };
    let rows = run_bench(&cfg)?;
    write_bench_csv(&rows, std::io::stdout())?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> magkit::Result<()> {
    run_example()
}
