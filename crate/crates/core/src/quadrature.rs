//! Adaptive quadrature cross-checks for the closed-form density.
//!
//! The density of the ratio vector is a one-dimensional integral over the
//! denominator variable no matter the dimension `p`, so an independent
//! evaluation only needs a careful 1-D scheme: Gauss-Kronrod 15-point panels,
//! bisected largest-error-first, on the whole line mapped through
//! `z = b + w * s / (1 - s^2)` for `s` in `(-1, 1)`, split at the sign change
//! of the denominator and at the completed-square center.
//!
//! Everything is evaluated relative to a log-domain shift at the integrand
//! peak so the cross-check keeps full relative accuracy even where the
//! density underflows `f64`.

use crate::density::{intermediates, log_density, NormalRatioModel, RatioPoint};
use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Kronrod abscissae for the 15-point rule on `[-1, 1]` (positive half).
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];

/// Weights of the embedded 7-point Gauss rule (odd-indexed abscissae of `XGK`).
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// Hard floor for requested relative tolerances; tighter requests are clamped.
const REL_TOL_FLOOR: f64 = 1e-13;

/// Panel budget for one adaptive integration.
const PANEL_BUDGET: usize = 10_000;

/// Result of an adaptive integration in the original value scale.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureResult {
    /// Integral estimate.
    pub value: f64,
    /// Absolute error estimate for `value`.
    pub abs_error_estimate: f64,
    /// Number of integrand evaluations consumed.
    pub evaluations: u64,
    /// Whether the error estimate met `rel_tol * max(1, |value|)` within the
    /// panel budget. A `false` still carries the best available estimate.
    pub converged: bool,
}

/// One evaluated panel: value and error estimate on `[lo, hi]`.
#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Gauss-Kronrod 15-point rule on `[lo, hi]`.
///
/// The error estimate follows the usual rescaling of `|K15 - G7|` against the
/// deviation integral `resasc`, which guards against the raw difference
/// under-reporting on non-smooth integrands.
fn gk15(f: &mut impl FnMut(f64) -> f64, lo: f64, hi: f64) -> Panel {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut fv = [0.0_f64; 15];
    for (i, &x) in XGK.iter().enumerate() {
        if i == 7 {
            fv[7] = f(center);
        } else {
            fv[i] = f(center - half * x);
            fv[14 - i] = f(center + half * x);
        }
    }
    let mut resk = 0.0;
    let mut resg = 0.0;
    for i in 0..8 {
        let pair = if i == 7 { fv[7] } else { fv[i] + fv[14 - i] };
        resk += WGK[i] * pair;
        if i % 2 == 1 {
            resg += WG[i / 2] * pair;
        }
    }
    let reskh = 0.5 * resk;
    let mut resabs = WGK[7] * fv[7].abs();
    let mut resasc = WGK[7] * (fv[7] - reskh).abs();
    for i in 0..7 {
        resabs += WGK[i] * (fv[i].abs() + fv[14 - i].abs());
        resasc += WGK[i] * ((fv[i] - reskh).abs() + (fv[14 - i] - reskh).abs());
    }
    resabs *= half.abs();
    resasc *= half.abs();
    let value = resk * half;
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    // roundoff floor: the estimate cannot honestly drop below the rounding
    // noise of the function values themselves
    err = err.max(50.0 * f64::EPSILON * resabs);
    Panel {
        lo,
        hi,
        value,
        err,
    }
}

/// Integrates `f` over the given segments by adaptive bisection, spending at
/// most `budget` panels. Returns `(value, err, evaluations, converged)`,
/// where convergence means `err <= rel_tol * max(abs_floor, |value|)`.
fn adaptive(
    f: &mut impl FnMut(f64) -> f64,
    segments: &[(f64, f64)],
    rel_tol: f64,
    abs_floor: f64,
    budget: usize,
) -> (f64, f64, u64, bool) {
    let mut heap = BinaryHeap::new();
    let mut evals = 0u64;
    let mut panels = 0usize;
    for &(lo, hi) in segments {
        if hi > lo {
            heap.push(gk15(f, lo, hi));
            evals += 15;
            panels += 1;
        }
    }
    loop {
        let value: f64 = heap.iter().map(|p| p.value).sum();
        let err: f64 = heap.iter().map(|p| p.err).sum();
        if err <= rel_tol * value.abs().max(abs_floor) {
            return (value, err, evals, true);
        }
        if panels >= budget {
            return (value, err, evals, false);
        }
        let worst = heap.pop().expect("segments are nonempty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if !(worst.lo < mid && mid < worst.hi) {
            // Interval no longer splittable in f64: keep it and give up on
            // shrinking its error further.
            let value = worst.value + heap.iter().map(|p| p.value).sum::<f64>();
            let err = worst.err + heap.iter().map(|p| p.err).sum::<f64>();
            let ok = err <= rel_tol * value.abs().max(abs_floor);
            return (value, err, evals, ok);
        }
        heap.push(gk15(f, worst.lo, mid));
        heap.push(gk15(f, mid, worst.hi));
        evals += 30;
        panels += 1;
    }
}

fn check_rel_tol(rel_tol: f64) -> Result<f64> {
    if !rel_tol.is_finite() || rel_tol < 0.0 {
        return Err(Error::NonFiniteInput {
            context: "relative tolerance",
        });
    }
    Ok(rel_tol.max(REL_TOL_FLOOR))
}

/// Inverse of `s -> s / (1 - s^2)` on `(-1, 1)`.
fn rational_map_inverse(zeta: f64) -> f64 {
    if zeta == 0.0 {
        0.0
    } else {
        // root of zeta s^2 + s - zeta = 0 inside the unit interval
        (-1.0 + (1.0 + 4.0 * zeta * zeta).sqrt()) / (2.0 * zeta)
    }
}

/// Evaluates the ratio density at `point` by direct integration over the
/// denominator, independently of the closed form.
///
/// The integrand `|z|^{p-1} * joint_normal(z, z*y)` is mapped onto `(-1, 1)`
/// by `z = b + w * s/(1 - s^2)` with the Gaussian width `w = 1/sqrt(m)`, the
/// interval is pre-split where `z = 0` and at the peak `z = b`, and the whole
/// computation runs shifted by the log-domain maximum, so convergence is
/// effectively relative even for underflowing tail values while still meeting
/// the documented `rel_tol * max(1, |value|)` criterion.
pub fn density_by_quadrature(
    model: &NormalRatioModel,
    point: &RatioPoint,
    rel_tol: f64,
) -> Result<QuadratureResult> {
    let rel_tol = check_rel_tol(rel_tol)?;
    let im = intermediates(model, point)?;
    if !im.m.is_finite() {
        return Ok(QuadratureResult {
            value: 0.0,
            abs_error_estimate: 0.0,
            evaluations: 0,
            converged: true,
        });
    }
    let pm1 = (model.p() - 1) as f64;
    let (m, a, b, log_c) = (im.m, im.a, im.b, im.log_c);

    // Peak of the log integrand: (p-1)/z = m (z - b) has one root per side
    // of zero; the shift keeps the working integrand O(1) at its maximum.
    let ell = |z: f64| {
        let q = z - b;
        log_c + 0.5 + pm1 * z.abs().ln() - 0.5 * m * (q * q + a)
    };
    let disc = (b * b + 4.0 * pm1 / m).sqrt();
    let shift = ell(0.5 * (b + disc)).max(ell(0.5 * (b - disc)));

    let w = 1.0 / m.sqrt();
    let mut f = |s: f64| {
        let u = 1.0 - s * s;
        let z = b + w * s / u;
        let e = ell(z) - shift;
        // NaN appears only when (z - b)^2 overflows, where the true
        // integrand has long since underflowed.
        if !(e > -746.0) {
            return 0.0;
        }
        e.exp() * (1.0 + s * s) / (u * u)
    };

    let s_zero = rational_map_inverse(-b / w);
    let (x1, x2) = (s_zero.min(0.0), s_zero.max(0.0));
    let segments = [(-1.0, x1), (x1, x2), (x2, 1.0)];

    // In shifted coordinates the promised criterion err <= rel_tol * max(1, |I|)
    // becomes a floor of exp(-shift) / w; capping the floor at 1 additionally
    // enforces genuine relative accuracy whenever the shifted mass allows it.
    let floor = ((-shift).exp() / w).min(1.0);
    let (vs, es, evals, ok) = adaptive(&mut f, &segments, rel_tol, floor, PANEL_BUDGET);

    let back = shift.exp() * w;
    Ok(QuadratureResult {
        value: vs * back,
        abs_error_estimate: es * back,
        evaluations: evals,
        converged: ok,
    })
}

/// Integrates the closed-form density over all of ratio space and reports the
/// total mass (1 up to quadrature error). Supported for `p = 2` (single
/// tangent-mapped axis) and `p = 3` (iterated integration); other dimensions
/// return `DimensionMismatch`.
///
/// For `p = 3` the reported error adds the inner-integral tolerance,
/// accumulated over the outer interval, to the outer rule's own estimate.
pub fn normalization_check(model: &NormalRatioModel, rel_tol: f64) -> Result<QuadratureResult> {
    let rel_tol = check_rel_tol(rel_tol)?;
    let half_pi = core::f64::consts::FRAC_PI_2;
    match model.p() {
        2 => {
            let mut bad = None;
            let mut f = |theta: f64| {
                let (s, c) = theta.sin_cos();
                let y = s / c;
                if !y.is_finite() {
                    return 0.0;
                }
                match log_density(model, &RatioPoint::new(vec![y]).expect("finite tangent")) {
                    // g(tan t) / cos^2 t stays bounded: the density decays
                    // exactly quadratically along each tail.
                    Ok(lg) => (lg - 2.0 * c.abs().ln()).exp(),
                    Err(e) => {
                        bad = Some(e);
                        0.0
                    }
                }
            };
            let (value, err, evals, converged) = adaptive(
                &mut f,
                &[(-half_pi, 0.0), (0.0, half_pi)],
                rel_tol,
                1.0,
                PANEL_BUDGET,
            );
            if let Some(e) = bad {
                return Err(e);
            }
            Ok(QuadratureResult {
                value,
                abs_error_estimate: err,
                evaluations: evals,
                converged,
            })
        }
        3 => {
            let inner_tol = (0.1 * rel_tol).max(REL_TOL_FLOOR);
            let inner_budget = 500;
            let mut bad = None;
            let mut inner_evals = 0u64;
            let mut any_inner_failed = false;
            let mut largest_slice = 1.0_f64;
            let mut outer = |t1: f64| {
                let (s1, c1) = t1.sin_cos();
                let y1 = s1 / c1;
                if !y1.is_finite() {
                    return 0.0;
                }
                // Fold the outer Jacobian into the inner integrand so the
                // inner convergence test sees the outer integrand's scale and
                // no error amplification happens near the interval ends.
                let ln_j1 = -2.0 * c1.abs().ln();
                let mut inner = |t2: f64| {
                    let (s2, c2) = t2.sin_cos();
                    let y2 = s2 / c2;
                    if !y2.is_finite() {
                        return 0.0;
                    }
                    let point = RatioPoint::new(vec![y1, y2]).expect("finite tangents");
                    match log_density(model, &point) {
                        Ok(lg) => (lg + ln_j1 - 2.0 * c2.abs().ln()).exp(),
                        Err(e) => {
                            bad = Some(e);
                            0.0
                        }
                    }
                };
                let (v, _e, n, ok) = adaptive(
                    &mut inner,
                    &[(-half_pi, 0.0), (0.0, half_pi)],
                    inner_tol,
                    1.0,
                    inner_budget,
                );
                inner_evals += n;
                any_inner_failed |= !ok;
                largest_slice = largest_slice.max(v.abs());
                v
            };
            let (value, outer_err, _outer_evals, outer_ok) = adaptive(
                &mut outer,
                &[(-half_pi, 0.0), (0.0, half_pi)],
                rel_tol,
                1.0,
                2_000,
            );
            if let Some(e) = bad {
                return Err(e);
            }
            // Each outer evaluation carries up to inner_tol * max(1, slice)
            // of inner error; integrate that bound over the outer interval.
            let err = outer_err + core::f64::consts::PI * inner_tol * largest_slice;
            let converged =
                outer_ok && !any_inner_failed && err <= rel_tol * value.abs().max(1.0);
            Ok(QuadratureResult {
                value,
                abs_error_estimate: err,
                evaluations: inner_evals,
                converged,
            })
        }
        p => Err(Error::DimensionMismatch { expected: 3, got: p }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::NormalRatioModel;
    use rand_chacha::rand_core::{RngCore, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    const PI: f64 = core::f64::consts::PI;

    fn uniform(rng: &mut ChaCha12Rng) -> f64 {
        (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    fn random_model(rng: &mut ChaCha12Rng, p: usize) -> NormalRatioModel {
        let a: Vec<Vec<f64>> = (0..p)
            .map(|_| (0..p).map(|_| 2.0 * uniform(rng) - 1.0).collect())
            .collect();
        let mut s = vec![vec![0.0; p]; p];
        for i in 0..p {
            for j in 0..p {
                let mut acc = 0.0;
                for k in 0..p {
                    acc += a[i][k] * a[j][k];
                }
                s[i][j] = acc + if i == j { 0.4 } else { 0.0 };
            }
        }
        let mu: Vec<f64> = (0..p).map(|_| 6.0 * uniform(rng) - 3.0).collect();
        NormalRatioModel::from_parts(mu, &s).unwrap()
    }

    #[test]
    fn rule_weights_are_consistent() {
        // Both rules integrate the constant 1 over [-1, 1] exactly.
        let kron: f64 = WGK[7] + 2.0 * WGK[..7].iter().sum::<f64>();
        assert!((kron - 2.0).abs() < 1e-14);
        let gauss: f64 = WG[3] + 2.0 * WG[..3].iter().sum::<f64>();
        assert!((gauss - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rule_is_exact_on_polynomials() {
        // Gauss-7 is exact through degree 13, so the error estimate must be
        // at roundoff level there; check the values too.
        for k in (0..=13usize).step_by(2) {
            let mut f = |x: f64| x.powi(k as i32);
            let panel = gk15(&mut f, -1.0, 1.0);
            let exact = 2.0 / (k as f64 + 1.0);
            assert!(
                (panel.value - exact).abs() <= 1e-14,
                "degree {k}: {} vs {exact}",
                panel.value
            );
            assert!(panel.err <= 1e-13, "degree {k} err {}", panel.err);
        }
    }

    #[test]
    fn rule_matches_exponential_integral() {
        let mut f = |x: f64| x.exp();
        let panel = gk15(&mut f, -1.0, 1.0);
        let exact = 1.0_f64.exp() - (-1.0_f64).exp();
        assert!((panel.value - exact).abs() <= 1e-14);
        assert!(panel.err >= (panel.value - exact).abs());
    }

    #[test]
    fn adaptive_reaches_pi() {
        let mut f = |x: f64| 4.0 / (1.0 + x * x);
        let (v, e, n, ok) = adaptive(&mut f, &[(0.0, 1.0)], 1e-13, 1.0, PANEL_BUDGET);
        assert!(ok);
        assert!((v - PI).abs() <= 1e-13);
        assert!(e >= (v - PI).abs());
        assert!(n >= 15);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        // sqrt has unbounded derivative at 0; subdivision must still converge.
        let mut f = |x: f64| x.sqrt();
        let (v, _e, _n, ok) = adaptive(&mut f, &[(0.0, 1.0)], 1e-12, 1.0, PANEL_BUDGET);
        assert!(ok);
        assert!((v - 2.0 / 3.0).abs() <= 1e-12);
    }

    #[test]
    fn adaptive_reports_budget_exhaustion() {
        let mut f = |x: f64| x.sqrt();
        let (v, e, _n, ok) = adaptive(&mut f, &[(0.0, 1.0)], 1e-13, 1.0, 2);
        assert!(!ok);
        assert!((v - 2.0 / 3.0).abs() <= 1e-3);
        assert!(e > 0.0);
    }

    #[test]
    fn rational_map_inverse_roundtrips() {
        for zeta in [-30.0, -1.0, -1e-3, 0.0, 1e-3, 1.0, 30.0] {
            let s = rational_map_inverse(zeta);
            assert!(s.abs() < 1.0);
            let back = s / (1.0 - s * s);
            assert!(
                (back - zeta).abs() <= 1e-12 * zeta.abs().max(1.0),
                "zeta {zeta} -> s {s} -> {back}"
            );
        }
    }

    #[test]
    fn quadrature_matches_closed_form_across_dimensions() {
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        for p in 2..=6usize {
            for _ in 0..8 {
                let model = random_model(&mut rng, p);
                let y: Vec<f64> = (0..p - 1).map(|_| 8.0 * uniform(&mut rng) - 4.0).collect();
                let point = RatioPoint::new(y.clone()).unwrap();
                let exact = model.density(&point).unwrap();
                let q = density_by_quadrature(&model, &point, 1e-10).unwrap();
                assert!(q.converged, "not converged at p={p}, y={y:?}");
                assert!(
                    ((q.value - exact) / exact).abs() <= 1e-9,
                    "p={p} y={y:?}: quadrature {} vs closed form {exact}",
                    q.value
                );
            }
        }
    }

    #[test]
    fn quadrature_tracks_underflowing_tail_values() {
        // Far in the tail the density is tiny but still representable; the
        // shifted integrand must preserve relative accuracy.
        let model = NormalRatioModel::from_parts(
            vec![4.0, 1.0],
            &[vec![1.0, 0.2], vec![0.2, 2.0]],
        )
        .unwrap();
        let point = RatioPoint::new(vec![2.5e3]).unwrap();
        let exact = model.density(&point).unwrap();
        assert!(exact > 0.0 && exact < 1e-9);
        let q = density_by_quadrature(&model, &point, 1e-10).unwrap();
        assert!(
            ((q.value - exact) / exact).abs() <= 1e-9,
            "tail: {} vs {exact}",
            q.value
        );
    }

    #[test]
    fn quadrature_rejects_bad_tolerance() {
        let model = random_model(&mut ChaCha12Rng::seed_from_u64(1), 2);
        let point = RatioPoint::new(vec![0.3]).unwrap();
        assert!(matches!(
            density_by_quadrature(&model, &point, f64::NAN),
            Err(Error::NonFiniteInput { .. })
        ));
        assert!(matches!(
            density_by_quadrature(&model, &point, -1.0),
            Err(Error::NonFiniteInput { .. })
        ));
    }

    #[test]
    fn tolerance_floor_still_converges() {
        let model = random_model(&mut ChaCha12Rng::seed_from_u64(5), 3);
        let point = RatioPoint::new(vec![0.7, -0.2]).unwrap();
        let q = density_by_quadrature(&model, &point, 1e-30).unwrap();
        let exact = model.density(&point).unwrap();
        assert!(((q.value - exact) / exact).abs() <= 1e-11);
    }

    #[test]
    fn two_dimensional_normalization_is_unity() {
        let mut rng = ChaCha12Rng::seed_from_u64(47);
        for _ in 0..4 {
            let model = random_model(&mut rng, 2);
            let r = normalization_check(&model, 1e-10).unwrap();
            assert!(r.converged);
            assert!(
                (r.value - 1.0).abs() <= 1e-9,
                "normalization came out as {}",
                r.value
            );
        }
    }

    #[test]
    fn three_dimensional_normalization_is_unity() {
        let model = NormalRatioModel::from_parts(
            vec![1.0, -0.5, 0.25],
            &[
                vec![1.0, 0.3, 0.1],
                vec![0.3, 2.0, -0.2],
                vec![0.1, -0.2, 1.5],
            ],
        )
        .unwrap();
        let r = normalization_check(&model, 1e-6).unwrap();
        assert!(
            (r.value - 1.0).abs() <= 1e-6,
            "normalization came out as {} (err {})",
            r.value,
            r.abs_error_estimate
        );
    }

    #[test]
    fn normalization_restricted_to_supported_dimensions() {
        let model = random_model(&mut ChaCha12Rng::seed_from_u64(9), 4);
        assert!(matches!(
            normalization_check(&model, 1e-8),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
