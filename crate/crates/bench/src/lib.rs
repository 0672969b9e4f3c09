//! Fixtures shared by the benchmarks.

use fastsim_core::stats::{Design, Stream};

/// Factorial design rows (intercept, A1, A2, B1) with outcomes drawn at
/// the given event rate.
pub fn factorial_rows(n: usize, event_rate: f64, seed: u64) -> (Design, Vec<u8>) {
    let mut stream = Stream::from_seed(seed);
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let a = stream.index(3);
        let b = stream.index(2);
        rows.push([1.0, f64::from(u8::from(a == 1)), f64::from(u8::from(a == 2)), b as f64]);
        y.push(stream.bernoulli(event_rate).expect("rate is a probability"));
    }
    (Design::from_rows(&rows).expect("rectangular rows"), y)
}

pub fn normal_sample(n: usize, mean: f64, seed: u64) -> Vec<f64> {
    let mut stream = Stream::from_seed(seed);
    (0..n).map(|_| stream.normal(mean, 10.0)).collect()
}
