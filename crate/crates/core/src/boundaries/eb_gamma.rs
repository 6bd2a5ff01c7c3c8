//! Gamma-exponential conjugate mixture of the empirical Bernstein wealth.
//!
//! Mixing `exp(λs − ψ_E(λ)v)` over the density
//! `f(λ) ∝ (1−λ)^{ρ−1} e^{ρλ}` on `[0, 1)` has a closed form in terms of the
//! lower incomplete gamma function. With `a = v + ρ` and `b = s + v + ρ`,
//!
//! ```text
//! m(s, v) = e^{b−ρ} b^{−a} Γ(a) P(a, b) · ρ^ρ / (Γ(ρ) P(ρ, ρ)).
//! ```
//!
//! The logarithm is assembled from the Stirling form of `ln Γ(a)` so that the
//! cancellation between `b`, `a ln b` and `ln Γ(a)` happens analytically.

use crate::accumulators::EbAccumulator;
use crate::error::{domain, invalid, Error, Result};
use crate::special::{ln_gamma, ln_gamma_stirling_remainder, regularized_gamma_p, x_minus_log1p};

use super::boundary_tolerance;
use super::roots::invert_increasing;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// `(ln m(s, v), ∂/∂s ln m(s, v))` for `s ≥ 0`, `v ≥ 0`, `ρ > 0`.
pub fn eb_gamma_log_mixture(s: f64, v: f64, rho: f64) -> Result<(f64, f64)> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(domain("rho must be positive and finite", rho));
    }
    if !(v >= 0.0 && v.is_finite()) {
        return Err(domain("intrinsic time must be non-negative and finite", v));
    }
    if !(s >= 0.0 && s.is_finite()) {
        return Err(domain(
            "mixture argument must be non-negative and finite",
            s,
        ));
    }
    let a = v + rho;
    let b = s + a;
    let u = s / a;
    let xm = x_minus_log1p(u);
    let stirling = ln_gamma_stirling_remainder(a);
    let ln_p_ab = regularized_gamma_p(a, b)?.ln();
    let ln_p_rho = regularized_gamma_p(rho, rho)?.ln();
    let normalizer = -rho + rho * rho.ln() - ln_gamma(rho) - ln_p_rho;
    let value = a * xm - 0.5 * a.ln() + 0.5 * LN_2PI + stirling + normalizer + ln_p_ab;
    let hazard = (-a * xm - u.ln_1p() - 0.5 * (LN_2PI + a.ln()) - stirling - ln_p_ab).exp();
    let slope = s / b + hazard;
    if !value.is_finite() || !slope.is_finite() {
        return Err(Error::NonFinite("gamma-exponential mixture"));
    }
    Ok((value, slope))
}

/// Boundary of the gamma-exponential mixture at intrinsic time
/// `v = Σ (x − x̂)²`: the smallest `s ≥ 0` with `m(s, v) ≥ 1/α`.
pub fn eb_gamma_boundary(acc: &EbAccumulator, alpha: f64, rho: f64) -> Result<f64> {
    eb_gamma_boundary_with_hint(acc, alpha, rho, None)
}

/// [`eb_gamma_boundary`] starting the root search at `hint`.
pub fn eb_gamma_boundary_with_hint(
    acc: &EbAccumulator,
    alpha: f64,
    rho: f64,
    hint: Option<f64>,
) -> Result<f64> {
    if alpha.is_nan() || alpha <= 0.0 || alpha > 1.0 {
        return Err(invalid("alpha", format!("must lie in (0, 1], got {alpha}")));
    }
    let v = acc.sum_sq_dev();
    let threshold = -alpha.ln();
    let start = hint.unwrap_or_else(|| (2.0 * v.max(1.0) * threshold).sqrt());
    invert_increasing(
        |s| {
            let (value, slope) = eb_gamma_log_mixture(s, v, rho)?;
            Ok((value - threshold, slope))
        },
        start,
        Some(0.0),
        boundary_tolerance(acc.t()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundaries::psi_e;

    fn acc_with_v(v: f64) -> EbAccumulator {
        // one observation with deviation sqrt(v)
        let mut acc = EbAccumulator::new();
        acc.update(v.sqrt(), 0.0).unwrap();
        acc
    }

    /// Direct midpoint-rule mixture over a fine grid on `[0, 1)`.
    fn dense_log_mixture(s: f64, v: f64, rho: f64) -> f64 {
        let n = 200_000;
        let h = 1.0 / n as f64;
        let mut logs = Vec::with_capacity(n);
        let mut norm = 0.0;
        for i in 0..n {
            let l = (i as f64 + 0.5) * h;
            let prior = (rho - 1.0) * (-l).ln_1p() + rho * l;
            norm += prior.exp() * h;
            logs.push(prior + l * s - psi_e(l).unwrap() * v);
        }
        let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        m + (logs.iter().map(|x| (x - m).exp()).sum::<f64>() * h).ln() - norm.ln()
    }

    fn dense_boundary(v: f64, alpha: f64) -> f64 {
        let target = -alpha.ln();
        let (mut lo, mut hi) = (0.0, 1.0);
        while dense_log_mixture(hi, v, 1.0) < target {
            hi *= 2.0;
        }
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if dense_log_mixture(mid, v, 1.0) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    #[test]
    fn closed_form_matches_dense_mixture_values() {
        for &(s, v) in &[
            (0.0, 0.0),
            (3.0, 1.0),
            (10.0, 10.0),
            (25.0, 100.0),
            (5.0, 100.0),
        ] {
            let (closed, _) = eb_gamma_log_mixture(s, v, 1.0).unwrap();
            let dense = dense_log_mixture(s, v, 1.0);
            assert!(
                (closed - dense).abs() < 1e-6,
                "s={s} v={v}: {closed} vs {dense}"
            );
        }
    }

    #[test]
    fn slope_matches_finite_difference() {
        for &(s, v, rho) in &[
            (2.0, 5.0, 1.0),
            (40.0, 1e3, 1.0),
            (1e3, 1e6, 2.5),
            (0.5, 0.0, 0.7),
        ] {
            let (_, slope) = eb_gamma_log_mixture(s, v, rho).unwrap();
            let h = 1e-5 * s.max(1.0);
            let up = eb_gamma_log_mixture(s + h, v, rho).unwrap().0;
            let down = eb_gamma_log_mixture(s - h, v, rho).unwrap().0;
            let fd = (up - down) / (2.0 * h);
            assert!(
                (slope - fd).abs() < 1e-6 * slope.abs().max(1e-3),
                "{slope} vs {fd}"
            );
        }
    }

    #[test]
    fn boundary_matches_dense_oracle_within_two_percent() {
        for &v in &[10.0, 100.0] {
            let closed = eb_gamma_boundary(&acc_with_v(v), 0.05, 1.0).unwrap();
            let dense = dense_boundary(v, 0.05);
            assert!(
                ((closed - dense) / dense).abs() < 0.02,
                "v={v}: {closed} vs {dense}"
            );
        }
    }

    #[test]
    fn boundary_is_monotone_in_v_and_alpha() {
        let mut prev = 0.0;
        for &v in &[1.0, 10.0, 100.0, 1000.0] {
            let acc = acc_with_v(v);
            let b05 = eb_gamma_boundary(&acc, 0.05, 1.0).unwrap();
            let b01 = eb_gamma_boundary(&acc, 0.01, 1.0).unwrap();
            assert!(b05 > prev && b01 > b05);
            prev = b05;
        }
    }

    #[test]
    fn huge_intrinsic_time_stays_finite() {
        let b = eb_gamma_boundary(&acc_with_v(1e12), 0.05, 1.0).unwrap();
        // scale of sqrt(2 v ln(1/alpha) + v ln v)
        assert!(b > 1e6 && b < 1e8, "{b}");
    }

    #[test]
    fn mixture_starts_below_one() {
        for &v in &[0.0, 1.0, 50.0, 1e6] {
            assert!(eb_gamma_log_mixture(0.0, v, 1.0).unwrap().0 <= 1e-12);
        }
        let acc = acc_with_v(50.0);
        let vacuous = eb_gamma_boundary(&acc, 1.0, 1.0).unwrap();
        assert!(vacuous > 0.0 && vacuous < eb_gamma_boundary(&acc, 0.5, 1.0).unwrap());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(eb_gamma_log_mixture(1.0, 1.0, 0.0).is_err());
        assert!(eb_gamma_log_mixture(-1.0, 1.0, 1.0).is_err());
        assert!(eb_gamma_boundary(&acc_with_v(1.0), 0.0, 1.0).is_err());
    }
}
