//! CDF of the ratio vector through normal orthant probabilities.
//!
//! The event `y_i <= t_i` for `y_i = x_{i+1}/x_1` is not linear in `x`, but
//! multiplying through by the denominator gives linear combinations
//! `u_i = x_{i+1} - t_i x_1`, which are jointly normal. When `x_1 > 0` the
//! event `{all y_i <= t_i}` is exactly `{all u_i <= 0}`, so a single orthant
//! probability approximates the CDF, with error bounded by `P(x_1 <= 0)`.
//! Splitting on the denominator's sign instead gives the exact identity
//!
//! ```text
//! P(Y <= t) = P(u <= 0, x_1 > 0) + P(u >= 0, x_1 < 0),
//! ```
//!
//! two orthant probabilities of the augmented normal vector `(u, x_1)`.

use crate::density::NormalRatioModel;
use crate::error::{Error, Result};
use crate::linalg::SpdMatrix;
use crate::mvn::{clamp_probability, mvn_cdf, std_normal_cdf, MvnProbability};

/// The joint normal law of the differences `u_i = x_{i+1} - t_i x_1`.
#[derive(Debug, Clone)]
pub struct LinearizedModel {
    mean: Vec<f64>,
    cov: SpdMatrix,
    t: Vec<f64>,
}

impl LinearizedModel {
    /// Means of the `u_i`.
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Covariance of the `u_i`.
    pub fn cov(&self) -> &SpdMatrix {
        &self.cov
    }

    /// The threshold vector the linearization was taken at.
    pub fn t(&self) -> &[f64] {
        &self.t
    }
}

fn check_threshold(model: &NormalRatioModel, t: &[f64]) -> Result<()> {
    let p = model.p();
    if t.len() != p - 1 {
        return Err(Error::DimensionMismatch {
            expected: p - 1,
            got: t.len(),
        });
    }
    if t.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput {
            context: "threshold vector",
        });
    }
    Ok(())
}

fn degenerate(err: Error) -> Error {
    match err {
        Error::NotPositiveDefinite { .. } | Error::NotSymmetric { .. } => {
            Error::DegenerateCovariance
        }
        other => other,
    }
}

/// Computes the law of `u_i = x_{i+1} - t_i x_1`:
/// `mean_i = mu_{i+1} - t_i mu_1` and
/// `cov_ij = S_{i+1,j+1} - t_i S_{1,j+1} - t_j S_{i+1,1} + t_i t_j S_11`.
///
/// Fails with `DegenerateCovariance` when the resulting matrix loses positive
/// definiteness in floating point (extreme thresholds make the `t_i t_j S_11`
/// term swamp everything else).
pub fn linearize(model: &NormalRatioModel, t: &[f64]) -> Result<LinearizedModel> {
    check_threshold(model, t)?;
    let p = model.p();
    let s = model.sigma();
    let mean: Vec<f64> = (0..p - 1)
        .map(|i| model.mu()[i + 1] - t[i] * model.mu()[0])
        .collect();
    let rows: Vec<Vec<f64>> = (0..p - 1)
        .map(|i| {
            (0..p - 1)
                .map(|j| {
                    s.entry(i + 1, j + 1) - t[i] * s.entry(0, j + 1) - t[j] * s.entry(i + 1, 0)
                        + t[i] * t[j] * s.entry(0, 0)
                })
                .collect()
        })
        .collect();
    let cov = SpdMatrix::factorize(&rows).map_err(degenerate)?;
    Ok(LinearizedModel {
        mean,
        cov,
        t: t.to_vec(),
    })
}

/// Single-orthant approximation to `P(Y <= t)`: the probability that every
/// `u_i <= 0`. Exact in the limit where the denominator is almost surely
/// positive; the approximation error is bounded by [`validity_diagnostic`].
pub fn approx_cdf(
    model: &NormalRatioModel,
    t: &[f64],
    n_points: usize,
    n_shifts: usize,
    seed: u64,
) -> Result<MvnProbability> {
    let lin = linearize(model, t)?;
    let zeros = vec![0.0; lin.mean.len()];
    mvn_cdf(&lin.mean, &lin.cov, &zeros, n_points, n_shifts, seed)
}

/// Exact `P(Y <= t)` as the sum of the two denominator-sign orthants of the
/// augmented vector `(u, x_1)`; the reported error estimate is the sum of the
/// two parts' estimates.
pub fn exact_cdf(
    model: &NormalRatioModel,
    t: &[f64],
    n_points: usize,
    n_shifts: usize,
    seed: u64,
) -> Result<MvnProbability> {
    check_threshold(model, t)?;
    let p = model.p();
    let s = model.sigma();
    let lin = linearize(model, t)?;

    // Covariance of (u, -x_1): the u block from the linearization, negated
    // cross terms, S_11 in the corner. The second orthant flips u instead of
    // x_1, which negates the same cross terms, so one matrix serves both.
    let mut rows: Vec<Vec<f64>> = (0..p).map(|_| vec![0.0; p]).collect();
    for i in 0..p - 1 {
        for j in 0..p - 1 {
            rows[i][j] = lin.cov.entry(i, j);
        }
        let cross = -(s.entry(i + 1, 0) - t[i] * s.entry(0, 0));
        rows[i][p - 1] = cross;
        rows[p - 1][i] = cross;
    }
    rows[p - 1][p - 1] = s.entry(0, 0);
    let aug = SpdMatrix::factorize(&rows).map_err(degenerate)?;

    let mut mean_pos = lin.mean.clone();
    mean_pos.push(-model.mu()[0]);
    let mean_neg: Vec<f64> = mean_pos.iter().map(|v| -v).collect();
    let zeros = vec![0.0; p];

    let first = mvn_cdf(&mean_pos, &aug, &zeros, n_points, n_shifts, seed)?;
    let second = mvn_cdf(&mean_neg, &aug, &zeros, n_points, n_shifts, seed)?;
    let error_estimate = first.error_estimate + second.error_estimate;
    Ok(MvnProbability {
        value: clamp_probability(first.value + second.value, error_estimate)?,
        error_estimate,
        method: first.method,
    })
}

/// `P(x_1 <= 0)`: how much probability the denominator puts on the sign flip
/// that the single-orthant approximation ignores. Doubles as an upper bound
/// on `|approx_cdf - exact_cdf|`.
pub fn validity_diagnostic(model: &NormalRatioModel) -> f64 {
    std_normal_cdf(-model.mu()[0] / model.sigma().entry(0, 0).sqrt())
}
