//! Distribution of ratios of jointly normal random variables.
//!
//! For a normal vector `x ~ N(mu, sigma)` in dimension `p >= 2` with an
//! almost-surely nonzero first coordinate, this crate works with the law of
//! the ratio vector `y = (x_2/x_1, ..., x_p/x_1)`:
//!
//! * exact closed-form density in any dimension ([`density`], [`log_density`]),
//! * exact and linearization-based CDF via multivariate normal orthant
//!   probabilities ([`cdf`]),
//! * seeded, reproducible sampling ([`sampler`]),
//! * independent numerical cross-checks by adaptive quadrature ([`quadrature`]).
//!
//! The ratio distribution is heavy-tailed with no finite moments, so all
//! density work happens in the log domain. Covariances are handled through a
//! cached Cholesky factor ([`SpdMatrix`]); inverses are never formed.

// The numeric kernels keep ported coefficient tables verbatim, NaN-catching
// comparisons spelled `!(x > 0.0)`, parity and index arithmetic that mirrors
// the derivations, and triangular loops indexed the way the algebra reads;
// these lints would rewrite exactly that.
#![allow(
    clippy::excessive_precision,
    clippy::needless_range_loop,
    clippy::neg_cmp_op_on_partial_ord,
    clippy::manual_div_ceil,
    clippy::manual_is_multiple_of,
    clippy::manual_range_contains
)]

pub mod cdf;
pub mod density;
pub mod error;
pub mod linalg;
pub mod mvn;
pub mod quadrature;
pub mod sampler;
pub mod special;

pub use cdf::{approx_cdf, exact_cdf, linearize, validity_diagnostic, LinearizedModel};

pub use density::{
    density, gaussian_even_moment, halfline_odd_moment, intermediates, log_density,
    truncated_even_moment, truncated_odd_moment, Intermediates, NormalRatioModel, RatioPoint,
};
pub use error::{Error, Result};
pub use linalg::{Matrix, SpdMatrix};
pub use mvn::{
    bvn_cdf, mvn_cdf, std_normal_cdf, Method, MvnProbability, DEFAULT_QMC_POINTS,
    DEFAULT_QMC_SHIFTS, MAX_QMC_DIM,
};
pub use quadrature::{density_by_quadrature, normalization_check, QuadratureResult};
pub use sampler::{
    binned_density, empirical_cdf, sample_mvn, sample_ratios, to_ratios, Histogram, SampleBatch,
};
pub use special::{erf, erfc, gamma, ln_gamma, lower_inc_gamma, GammaArg};
