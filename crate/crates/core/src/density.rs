//! Closed-form density of the ratio vector built from a multivariate normal.
//!
//! For `x ~ N(mu, sigma)` in dimension `p`, the ratio vector
//! `y = (x_2/x_1, ..., x_p/x_1)` has an exact density obtained by integrating
//! the joint density of `(x_1, y)` over the denominator. Writing
//! `w = (1, y_1, ..., y_{p-1})`, the exponent of the integrand is the quadratic
//! `m z^2 + k z + (l - 1)` with
//!
//! ```text
//! m = w' sigma^{-1} w,   k = -2 w' sigma^{-1} mu,   l = mu' sigma^{-1} mu + 1,
//! ```
//!
//! and completing the square gives the center `b = -k / (2 m)` and remainder
//! `a = l/m - b^2`. The integral over the denominator reduces to Gaussian
//! moments: full even moments when `p` is odd, and truncated/half-line moments
//! split at the sign change of the denominator when `p` is even. Every term in
//! the resulting sums is nonnegative (powers of `b` appear with even exponents
//! when `p` is odd, and as `|b|` paired with nonnegative truncated moments when
//! `p` is even), so the assembly is a log-sum-exp over finite log terms.
//!
//! The distribution is heavy-tailed with no finite moments; everything is
//! evaluated in the log domain and only exponentiated at the edges.

use crate::error::{Error, Result};
use crate::linalg::SpdMatrix;
use crate::special::{ln_gamma, reg_gamma_p, reg_gamma_q, GammaArg};

const LN_2PI: f64 = 1.8378770664093454836;
const LN_2: f64 = core::f64::consts::LN_2;

/// Relative threshold below which the center `b` is treated as zero in the
/// even-`p` branch; the two evaluation paths agree to roundoff at the seam.
const CENTRAL_B_TOL: f64 = 1e-14;

/// Ratio model: the distribution of `(x_2/x_1, ..., x_p/x_1)` for
/// `x ~ N(mu, sigma)`.
#[derive(Debug, Clone)]
pub struct NormalRatioModel {
    mu: Vec<f64>,
    sigma: SpdMatrix,
    /// `L^{-1} mu` for the cached Cholesky factor; fixed per model.
    solved_mu: Vec<f64>,
    /// `l = mu' sigma^{-1} mu + 1`.
    l: f64,
    /// Log normalizing constant `-(p/2) ln(2 pi) - (1/2) ln det(sigma)`.
    log_c: f64,
}

impl NormalRatioModel {
    /// Builds a model from a mean vector and a factorized covariance.
    /// Requires `p >= 2` and matching dimensions.
    pub fn new(mu: Vec<f64>, sigma: SpdMatrix) -> Result<Self> {
        let p = sigma.dim();
        if p < 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: p,
            });
        }
        if mu.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: mu.len(),
            });
        }
        if mu.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput {
                context: "mean vector",
            });
        }
        let solved_mu = sigma.solve_lower(&mu);
        let l = solved_mu.iter().map(|v| v * v).sum::<f64>() + 1.0;
        let log_c = -0.5 * (p as f64) * LN_2PI - 0.5 * sigma.log_det();
        Ok(Self {
            mu,
            sigma,
            solved_mu,
            l,
            log_c,
        })
    }

    /// Convenience constructor that factorizes the covariance rows first.
    pub fn from_parts(mu: Vec<f64>, sigma_rows: &[Vec<f64>]) -> Result<Self> {
        let sigma = SpdMatrix::factorize(sigma_rows)?;
        Self::new(mu, sigma)
    }

    /// Dimension `p` of the underlying normal vector.
    pub fn p(&self) -> usize {
        self.sigma.dim()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn sigma(&self) -> &SpdMatrix {
        &self.sigma
    }

    /// Log density at `point`; see [`log_density`].
    pub fn log_density(&self, point: &RatioPoint) -> Result<f64> {
        log_density(self, point)
    }

    /// Density at `point`; see [`density`].
    pub fn density(&self, point: &RatioPoint) -> Result<f64> {
        density(self, point)
    }
}

/// A point in ratio space, of dimension `p - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioPoint {
    y: Vec<f64>,
}

impl RatioPoint {
    pub fn new(y: Vec<f64>) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput {
                context: "ratio point",
            });
        }
        Ok(Self { y })
    }

    pub fn coords(&self) -> &[f64] {
        &self.y
    }
}

/// Completed-square decomposition of the denominator integral at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Intermediates {
    /// Direction vector `(1, y_1, ..., y_{p-1})`.
    pub w: Vec<f64>,
    /// Quadratic coefficient `m = w' sigma^{-1} w`; strictly positive.
    pub m: f64,
    /// Linear coefficient `k = -2 w' sigma^{-1} mu`.
    pub k: f64,
    /// Constant `l = mu' sigma^{-1} mu + 1`.
    pub l: f64,
    /// Completed-square remainder `a = l/m - b^2`; satisfies `a * m >= 1`.
    pub a: f64,
    /// Completed-square center `b = -k / (2 m)`.
    pub b: f64,
    /// Log normalizing constant of the joint normal density.
    pub log_c: f64,
}

/// Computes the exponent decomposition at `point`.
///
/// The remainder is evaluated through the Lagrange identity
/// `a m = 1 + (|u|^2 |v|^2 - (u.v)^2) / |u|^2` with `u = L^{-1} w` and
/// `v = L^{-1} mu`, a sum of squares that cannot cancel; this keeps the
/// invariant `a m >= 1` intact in floating point.
pub fn intermediates(model: &NormalRatioModel, point: &RatioPoint) -> Result<Intermediates> {
    let p = model.p();
    if point.y.len() != p - 1 {
        return Err(Error::DimensionMismatch {
            expected: p - 1,
            got: point.y.len(),
        });
    }
    let mut w = Vec::with_capacity(p);
    w.push(1.0);
    w.extend_from_slice(&point.y);

    let u = model.sigma.solve_lower(&w);
    let v = &model.solved_mu;
    let m: f64 = u.iter().map(|t| t * t).sum();
    let k: f64 = -2.0 * u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    let l = model.l;
    if !m.is_finite() {
        // Astronomically distant point: the squared norm of L^{-1} w
        // overflowed. Signal with infinite m; density callers map this to
        // an exact zero in the value domain.
        return Ok(Intermediates {
            w,
            m: f64::INFINITY,
            k,
            l,
            a: 0.0,
            b: 0.0,
            log_c: model.log_c,
        });
    }

    let b = -k / (2.0 * m);
    let mut cross = 0.0;
    for i in 0..p {
        for j in (i + 1)..p {
            let d = u[i] * v[j] - u[j] * v[i];
            cross += d * d;
        }
    }
    let a = (1.0 + cross / m) / m;

    Ok(Intermediates {
        w,
        m,
        k,
        l,
        a,
        b,
        log_c: model.log_c,
    })
}

/// `alpha = (1/2) m a^2`, the Gaussian rate after the substitution
/// `u = (z - b) / a`.
fn alpha(m: f64, a: f64) -> f64 {
    0.5 * m * a * a
}

/// Full even Gaussian moment over the real line:
/// `∫ e^{-alpha u^2} u^{2j} du = alpha^{-(j+1/2)} Γ(j+1/2)`.
pub fn gaussian_even_moment(m: f64, a: f64, j: u32) -> f64 {
    ln_gaussian_even_moment(alpha(m, a), j).exp()
}

fn ln_gaussian_even_moment(alpha: f64, j: u32) -> f64 {
    -(j as f64 + 0.5) * alpha.ln() + ln_gamma(GammaArg::new(2 * j + 1))
}

/// Half-line odd Gaussian moment:
/// `∫_0^∞ e^{-alpha u^2} u^{2i-1} du = (1/2) alpha^{-i} Γ(i)`, `i >= 1`.
pub fn halfline_odd_moment(m: f64, a: f64, i: u32) -> f64 {
    debug_assert!(i >= 1);
    ln_halfline_odd_moment(alpha(m, a), i).exp()
}

fn ln_halfline_odd_moment(alpha: f64, i: u32) -> f64 {
    -LN_2 - (i as f64) * alpha.ln() + ln_gamma(GammaArg::new(2 * i))
}

/// Truncated even Gaussian moment over `[0, cutoff]`:
/// `∫_0^c e^{-alpha u^2} u^{2i} du = (1/2) alpha^{-(i+1/2)} γ(i+1/2, alpha c²)`.
/// For `i = 0` this is the erf integral `(π/alpha)^{1/2} erf(c√alpha) / 2`.
pub fn truncated_even_moment(m: f64, a: f64, cutoff: f64, i: u32) -> f64 {
    debug_assert!(cutoff >= 0.0);
    let al = alpha(m, a);
    ln_truncated_even_moment(al, al * cutoff * cutoff, i).exp()
}

fn ln_truncated_even_moment(alpha: f64, d2: f64, i: u32) -> f64 {
    let s = i as f64 + 0.5;
    let p = reg_gamma_p(s, d2);
    -LN_2 - s * alpha.ln() + ln_gamma(GammaArg::new(2 * i + 1)) + p.ln()
}

/// Truncated odd Gaussian moment over `[cutoff, ∞)`:
/// the half-line moment minus `(1/2) alpha^{-i} γ(i, alpha c²)`, evaluated
/// through the regularized upper gamma so large cutoffs keep relative
/// accuracy instead of cancelling.
pub fn truncated_odd_moment(m: f64, a: f64, cutoff: f64, i: u32) -> f64 {
    debug_assert!(i >= 1 && cutoff >= 0.0);
    let al = alpha(m, a);
    ln_truncated_odd_moment(al, al * cutoff * cutoff, i).exp()
}

fn ln_truncated_odd_moment(alpha: f64, d2: f64, i: u32) -> f64 {
    let q = reg_gamma_q(i as f64, d2);
    -LN_2 - (i as f64) * alpha.ln() + ln_gamma(GammaArg::new(2 * i)) + q.ln()
}

/// Log-sum-exp with the usual max shift; `-inf` entries drop out.
pub(crate) fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    max + sum.ln()
}

/// Natural log of the binomial coefficient for small `n`.
fn ln_binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut acc = 1.0_f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.ln()
}

/// Log density of the ratio vector at `point`.
///
/// Stays finite wherever the density is positive but underflows `f64`;
/// returns `-inf` only when an internal quadratic form overflows, which
/// corresponds to a genuine density of zero at any representable scale.
pub fn log_density(model: &NormalRatioModel, point: &RatioPoint) -> Result<f64> {
    let im = intermediates(model, point)?;
    if !im.m.is_finite() {
        return Ok(f64::NEG_INFINITY);
    }
    let p = model.p();
    let half_ma = 0.5 * im.m * im.a;
    // The +1 inside l cancels against e^{1/2}: pref carries both.
    let pref = im.log_c + 0.5 - half_ma;

    if p % 2 == 1 {
        // Odd p: the integrand power z^{p-1} is even, so only full even
        // moments survive and the powers of a cancel against the moment
        // scale, leaving sum_j C(p-1, 2j) b^{p-1-2j} (m/2)^{-(1/2+j)} Γ(j+1/2).
        let half_m_ln = (0.5 * im.m).ln();
        let ln_abs_b = if im.b == 0.0 { 0.0 } else { im.b.abs().ln() };
        let mut terms = Vec::with_capacity(p / 2 + 1);
        for j in 0..=((p - 1) / 2) as u32 {
            let e = (p - 1) as u32 - 2 * j;
            if e > 0 && im.b == 0.0 {
                continue;
            }
            terms.push(
                ln_binomial(p - 1, 2 * j as usize) + e as f64 * ln_abs_b
                    - (j as f64 + 0.5) * half_m_ln
                    + ln_gamma(GammaArg::new(2 * j + 1)),
            );
        }
        return Ok(pref + log_sum_exp(&terms));
    }

    // Even p: the integrand carries |z|^{p-1}; splitting at the sign change
    // of z and expanding (a u + b)^{p-1} in nonnegative powers of b makes
    // every term a nonnegative truncated or half-line moment.
    if im.b.abs() <= CENTRAL_B_TOL * im.a {
        // Central limit b -> 0: only the pure a^{p-1} term survives and the
        // two half-lines merge into (2/m)^{p/2} Γ(p/2).
        return Ok(pref + 0.5 * p as f64 * (LN_2 - im.m.ln()) + ln_gamma(GammaArg::new(p as u32)));
    }

    let al = alpha(im.m, im.a);
    let ln_a = im.a.ln();
    let ln_abs_b = im.b.abs().ln();
    let cutoff = im.b.abs() / im.a;
    let d2 = al * cutoff * cutoff;
    let mut terms = Vec::with_capacity(p);
    for k in 0..p {
        let e = (p - 1 - k) as f64;
        let ln_moment = if k % 2 == 1 {
            ln_truncated_odd_moment(al, d2, ((k + 1) / 2) as u32)
        } else {
            ln_truncated_even_moment(al, d2, (k / 2) as u32)
        };
        terms.push(ln_binomial(p - 1, k) + k as f64 * ln_a + e * ln_abs_b + ln_moment);
    }
    Ok(pref + LN_2 + ln_a + log_sum_exp(&terms))
}

/// Density of the ratio vector at `point` (exp of the log density; underflows
/// to zero in the extreme tails).
pub fn density(model: &NormalRatioModel, point: &RatioPoint) -> Result<f64> {
    Ok(log_density(model, point)?.exp())
}
