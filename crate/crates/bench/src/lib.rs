//! Deterministic fixtures shared by the benchmark targets.

use qlstat::sim::{Dgp, RepStream};

/// Standard normal draws from the counter stream; fixed seed so repeated
/// benchmark runs see identical inputs.
pub fn normal_sample(n: usize, seed: u64) -> Vec<f64> {
    let mut stream = RepStream::new(seed, 0);
    (0..n)
        .map(|_| Dgp::Normal.quantile(stream.next_uniform()).unwrap())
        .collect()
}

/// Smooth conditional data: x uniform on (0, 1), y a sine curve plus
/// normal noise, both from the same stream.
pub fn curve_sample(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut stream = RepStream::new(seed, 1);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let xi = stream.next_uniform();
        let noise = Dgp::Normal.quantile(stream.next_uniform()).unwrap();
        x.push(xi);
        y.push((2.0 * xi).sin() + 0.5 * noise);
    }
    (x, y)
}
