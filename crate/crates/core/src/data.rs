//! Seeded synthetic datasets.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// `n` points with independent standard normal coordinates.
pub fn standard_normal_cloud(n: usize, dim: usize, rng_seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    (0..n)
        .map(|_| (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
        .collect()
}

/// `per_center` isotropic normal samples around each center. Labels give the
/// generating center.
pub fn gaussian_blobs(centers: &[Vec<f64>], per_center: usize, std_dev: f64, rng_seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut points = Vec::with_capacity(centers.len() * per_center);
    let mut labels = Vec::with_capacity(centers.len() * per_center);
    for (label, c) in centers.iter().enumerate() {
        for _ in 0..per_center {
            points.push(
                c.iter()
                    .map(|&x| x + std_dev * rng.sample::<f64, _>(StandardNormal))
                    .collect(),
            );
            labels.push(label);
        }
    }
    (points, labels)
}

/// Three unit-variance planar blobs centred on an equilateral triangle of
/// side 20.
pub fn three_blobs(per_center: usize, rng_seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let h = 10.0 * 3f64.sqrt();
    let centers = vec![vec![0.0, 0.0], vec![20.0, 0.0], vec![10.0, h]];
    gaussian_blobs(&centers, per_center, 1.0, rng_seed)
}

/// `n` points uniform in the box `[lo, hi]^dim`.
pub fn uniform_box(n: usize, dim: usize, lo: f64, hi: f64, rng_seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(lo..hi)).collect())
        .collect()
}

/// `n` evenly spaced values from `lo` to `hi` inclusive.
pub fn grid_1d(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// `side x side` lattice on `[lo, hi]^2`.
pub fn grid_2d(side: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    let axis = grid_1d(side, lo, hi);
    axis.iter()
        .flat_map(|&x| axis.iter().map(move |&y| vec![x, y]))
        .collect()
}
