//! Seeded sampling of the underlying normal vector and its ratio transform,
//! plus the empirical estimators used to cross-check densities and CDFs.
//!
//! Reproducibility is the design driver: normals come from a counter-based
//! stream cipher generator (ChaCha12) through the Marsaglia polar transform,
//! and parallel generation splits the output into fixed-size row chunks, each
//! drawing from the substream indexed by its chunk number. The result is
//! bit-identical for a given `(model, n, seed)` regardless of thread count.

use crate::density::NormalRatioModel;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

/// Rows generated per generator substream; fixed so chunk boundaries (and
/// therefore the sampled values) do not depend on the thread count.
const CHUNK_ROWS: usize = 4096;

/// Uniform in `[0, 1)` with 53 random bits.
fn uniform(rng: &mut ChaCha12Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

/// Standard normal stream: Marsaglia polar rejection over a seeded uniform
/// source, carrying the spare variate between calls.
struct GaussianSource {
    rng: ChaCha12Rng,
    spare: Option<f64>,
}

impl GaussianSource {
    fn new(rng: ChaCha12Rng) -> Self {
        Self { rng, spare: None }
    }

    fn next(&mut self) -> f64 {
        if let Some(s) = self.spare.take() {
            return s;
        }
        loop {
            let x = 2.0 * uniform(&mut self.rng) - 1.0;
            let y = 2.0 * uniform(&mut self.rng) - 1.0;
            let s = x * x + y * y;
            if s >= 1.0 || s == 0.0 {
                continue;
            }
            let f = (-2.0 * s.ln() / s).sqrt();
            self.spare = Some(y * f);
            return x * f;
        }
    }
}

/// Draws `n` rows of `x ~ N(mu, sigma)` as an `n x p` matrix: each row is
/// `mu + L xi` with `L` the cached Cholesky factor. Identical `(model, n,
/// seed)` give bit-identical matrices, independent of thread count.
pub fn sample_mvn(model: &NormalRatioModel, n: usize, seed: u64) -> Matrix {
    assert!(n >= 1, "sample_mvn requires n >= 1");
    let p = model.p();
    let mut out = Matrix::zeros(n, p);
    out.row_chunks_mut(CHUNK_ROWS)
        .into_par_iter()
        .enumerate()
        .for_each(|(chunk_index, chunk)| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(chunk_index as u64);
            let mut gauss = GaussianSource::new(rng);
            let mut xi = vec![0.0_f64; p];
            let mut lx = vec![0.0_f64; p];
            for row in chunk.chunks_mut(p) {
                for t in xi.iter_mut() {
                    *t = gauss.next();
                }
                model.sigma().mul_lower(&xi, &mut lx);
                for (dst, (m, v)) in row.iter_mut().zip(model.mu().iter().zip(&lx)) {
                    *dst = m + v;
                }
            }
        });
    out
}

/// Ratio samples derived from normal draws.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    ratios: Matrix,
    seed: u64,
    redraws: usize,
}

impl SampleBatch {
    /// The `n x (p-1)` ratio rows.
    pub fn ratios(&self) -> &Matrix {
        &self.ratios
    }

    /// Number of retained rows.
    pub fn n(&self) -> usize {
        self.ratios.rows()
    }

    /// Seed recorded from the generating draw.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Rows dropped because the denominator was exactly zero (or the division
    /// overflowed); zero in practice.
    pub fn redraws(&self) -> usize {
        self.redraws
    }
}

/// Maps each row `(x_1, ..., x_p)` to `(x_2/x_1, ..., x_p/x_1)`. Rows whose
/// denominator is exactly zero, or whose division leaves the finite range,
/// are dropped and counted in `redraws` rather than resampled, keeping the
/// operation pure. `seed` is carried along so the batch records how it
/// was drawn.
pub fn to_ratios(x: &Matrix, seed: u64) -> SampleBatch {
    let p = x.cols();
    assert!(p >= 2, "ratio transform needs at least two columns");
    let mut data = Vec::with_capacity(x.rows() * (p - 1));
    let mut redraws = 0usize;
    'rows: for i in 0..x.rows() {
        let row = x.row(i);
        let x1 = row[0];
        if x1 == 0.0 {
            redraws += 1;
            continue;
        }
        let start = data.len();
        for &v in &row[1..] {
            let r = v / x1;
            if !r.is_finite() {
                data.truncate(start);
                redraws += 1;
                continue 'rows;
            }
            data.push(r);
        }
    }
    let rows = data.len() / (p - 1);
    let ratios = Matrix::from_rows(rows, p - 1, data).expect("row count computed from data");
    SampleBatch {
        ratios,
        seed,
        redraws,
    }
}

/// Convenience: sample the model and transform to ratios in one step.
pub fn sample_ratios(model: &NormalRatioModel, n: usize, seed: u64) -> SampleBatch {
    to_ratios(&sample_mvn(model, n, seed), seed)
}

/// Fraction of rows with every coordinate strictly below `t`; the Monte Carlo
/// estimate of the CDF at `t`, with standard error about `sqrt(q(1-q)/n)`.
pub fn empirical_cdf(batch: &SampleBatch, t: &[f64]) -> f64 {
    assert_eq!(
        t.len(),
        batch.ratios.cols(),
        "threshold dimension must match the batch"
    );
    assert!(t.iter().all(|v| v.is_finite()), "threshold must be finite");
    assert!(batch.n() > 0, "empirical_cdf needs a nonempty batch");
    let mut hits = 0usize;
    for i in 0..batch.ratios.rows() {
        if batch.ratios.row(i).iter().zip(t).all(|(v, b)| v < b) {
            hits += 1;
        }
    }
    hits as f64 / batch.n() as f64
}

/// Histogram of ratio samples normalized to a density estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    dim: usize,
    bins_per_dim: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    densities: Vec<f64>,
    counts: Vec<u64>,
    total_samples: usize,
    in_window: usize,
}

impl Histogram {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bins_per_dim(&self) -> usize {
        self.bins_per_dim
    }

    /// Density estimates, row-major over the first dimension.
    pub fn densities(&self) -> &[f64] {
        &self.densities
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// All retained samples, the normalization denominator.
    pub fn total_samples(&self) -> usize {
        self.total_samples
    }

    pub fn in_window(&self) -> usize {
        self.in_window
    }

    /// Center coordinates of the bin at flat index `k`.
    pub fn center(&self, k: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim);
        let mut rest = k;
        for d in (0..self.dim).rev() {
            let idx = rest % self.bins_per_dim;
            rest /= self.bins_per_dim;
            let width = (self.hi[d] - self.lo[d]) / self.bins_per_dim as f64;
            out.push(self.lo[d] + (idx as f64 + 0.5) * width);
        }
        out.reverse();
        out
    }

    /// Lower and upper edges of the bin at flat index `k`.
    pub fn edges(&self, k: usize) -> (Vec<f64>, Vec<f64>) {
        let center = self.center(k);
        let mut lo = Vec::with_capacity(self.dim);
        let mut hi = Vec::with_capacity(self.dim);
        for (d, c) in center.iter().enumerate() {
            let half = 0.5 * (self.hi[d] - self.lo[d]) / self.bins_per_dim as f64;
            lo.push(c - half);
            hi.push(c + half);
        }
        (lo, hi)
    }
}

/// Bins the ratio samples over the window `[lo, hi)` and normalizes counts by
/// `n * bin_volume`, where `n` counts every retained sample including those
/// outside the window, so the histogram estimates the density itself (not the
/// window-conditional density). Supports 1 and 2 ratio dimensions.
pub fn binned_density(
    batch: &SampleBatch,
    lo: &[f64],
    hi: &[f64],
    bins_per_dim: usize,
) -> Result<Histogram> {
    let dim = batch.ratios.cols();
    if dim != 1 && dim != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: dim,
        });
    }
    if lo.len() != dim || hi.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: if lo.len() != dim { lo.len() } else { hi.len() },
        });
    }
    if lo.iter().chain(hi).any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput {
            context: "histogram window",
        });
    }
    assert!(
        lo.iter().zip(hi).all(|(a, b)| a < b),
        "histogram window must have lo < hi"
    );
    assert!(bins_per_dim >= 1, "need at least one bin");

    let widths: Vec<f64> = lo
        .iter()
        .zip(hi)
        .map(|(a, b)| (b - a) / bins_per_dim as f64)
        .collect();
    let mut counts = vec![0u64; bins_per_dim.pow(dim as u32)];
    let mut in_window = 0usize;
    'rows: for i in 0..batch.ratios.rows() {
        let row = batch.ratios.row(i);
        let mut flat = 0usize;
        for d in 0..dim {
            let offset = (row[d] - lo[d]) / widths[d];
            if !(offset >= 0.0 && offset < bins_per_dim as f64) {
                continue 'rows;
            }
            flat = flat * bins_per_dim + offset as usize;
        }
        counts[flat] += 1;
        in_window += 1;
    }
    if in_window == 0 {
        return Err(Error::WindowEmpty);
    }
    let volume: f64 = widths.iter().product();
    let scale = 1.0 / (batch.n() as f64 * volume);
    let densities = counts.iter().map(|&c| c as f64 * scale).collect();
    Ok(Histogram {
        dim,
        bins_per_dim,
        lo: lo.to_vec(),
        hi: hi.to_vec(),
        densities,
        counts,
        total_samples: batch.n(),
        in_window,
    })
}
