//! Reference computations that share no code with the library: similarity
//! matrices built straight from coordinates and a Gaussian-elimination solve.

#![allow(dead_code)]

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn similarity(points: &[Vec<f64>], t: f64) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|p| points.iter().map(|q| (-t * euclid(p, q)).exp()).collect())
        .collect()
}

/// Solves `a x = b` by elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                let (top, bottom) = a.split_at_mut(row);
                for (x, p) in bottom[0][col..].iter_mut().zip(&top[col][col..]) {
                    *x -= f * p;
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

/// Magnitude of a point set by elimination.
pub fn magnitude(points: &[Vec<f64>], t: f64) -> f64 {
    let z = similarity(points, t);
    solve(z, vec![1.0; points.len()]).iter().sum()
}

/// Magnitude from a raw distance matrix.
pub fn magnitude_from_distances(d: &[Vec<f64>], t: f64) -> f64 {
    let z: Vec<Vec<f64>> = d.iter().map(|r| r.iter().map(|x| (-t * x).exp()).collect()).collect();
    solve(z, vec![1.0; d.len()]).iter().sum()
}

/// Deterministic pseudo-random points, independent of the library's RNG use.
pub fn lcg_points(n: usize, dim: usize, spread: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) * spread
    };
    (0..n).map(|_| (0..dim).map(|_| next()).collect()).collect()
}
