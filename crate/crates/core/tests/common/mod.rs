//! Shared generators for the integration suites: seeded random SPD models,
//! evaluation points, and a plain Simpson rule for one-off oracles.

#![allow(dead_code)]

use normal_ratio::NormalRatioModel;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

pub fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Uniform draw on [0, 1) with 53 random bits.
pub fn uniform(rng: &mut ChaCha12Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

/// Uniform draw on [lo, hi).
pub fn uniform_in(rng: &mut ChaCha12Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * uniform(rng)
}

/// A random symmetric positive definite matrix `A A' + jitter I` with the
/// entries of `A` uniform on [-1, 1].
pub fn random_spd(rng: &mut ChaCha12Rng, p: usize, jitter: f64) -> Vec<Vec<f64>> {
    let a: Vec<Vec<f64>> = (0..p)
        .map(|_| (0..p).map(|_| uniform_in(rng, -1.0, 1.0)).collect())
        .collect();
    (0..p)
        .map(|i| {
            (0..p)
                .map(|j| {
                    let dot: f64 = (0..p).map(|k| a[i][k] * a[j][k]).sum();
                    dot + if i == j { jitter } else { 0.0 }
                })
                .collect()
        })
        .collect()
}

/// A well-conditioned random model with mean entries on [-scale, scale].
pub fn random_model(rng: &mut ChaCha12Rng, p: usize, scale: f64) -> NormalRatioModel {
    let sigma = random_spd(rng, p, 0.5);
    let mu: Vec<f64> = (0..p).map(|_| uniform_in(rng, -scale, scale)).collect();
    NormalRatioModel::from_parts(mu, &sigma).unwrap()
}

/// A zero-mean model, which exercises the central density branch.
pub fn central_model(rng: &mut ChaCha12Rng, p: usize) -> NormalRatioModel {
    let sigma = random_spd(rng, p, 0.5);
    NormalRatioModel::from_parts(vec![0.0; p], &sigma).unwrap()
}

/// A random evaluation point with coordinates on [-span, span].
pub fn random_point(rng: &mut ChaCha12Rng, len: usize, span: f64) -> Vec<f64> {
    (0..len).map(|_| uniform_in(rng, -span, span)).collect()
}

/// Composite Simpson rule on [lo, hi] with `n` panels (`n` even).
pub fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    assert!(n >= 2 && n.is_multiple_of(2));
    let h = (hi - lo) / n as f64;
    let mut acc = f(lo) + f(hi);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(lo + h * k as f64);
    }
    acc * h / 3.0
}

/// Sample mean and covariance of the rows of a flat `n x d` sample.
pub fn sample_mean_cov(data: &[f64], d: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = data.len() / d;
    assert!(n > 1 && data.len() == n * d);
    let mut mean = vec![0.0; d];
    for row in data.chunks_exact(d) {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut cov = vec![vec![0.0; d]; d];
    for row in data.chunks_exact(d) {
        for i in 0..d {
            for j in 0..d {
                cov[i][j] += (row[i] - mean[i]) * (row[j] - mean[j]);
            }
        }
    }
    for r in &mut cov {
        for v in r.iter_mut() {
            *v /= (n - 1) as f64;
        }
    }
    (mean, cov)
}
