//! Scalar special functions used by the mixture boundaries.
//!
//! Everything here is a pure function of its arguments. Series are summed
//! until an explicit tail bound falls below [`SERIES_TOL`]; root finders
//! bisect on a guaranteed bracket and then polish with guarded Newton steps.

use std::f64::consts::{E, PI};

use crate::error::{domain, Error, Result};

/// Absolute tolerance for series tails.
pub const SERIES_TOL: f64 = 1e-12;

const MAX_POLYLOG_TERMS: u64 = 100_000_000;

/// `x - ln(1 + x)` for `x > -1`, accurate near zero.
pub fn x_minus_log1p(x: f64) -> f64 {
    if x.abs() < 0.05 {
        // sum_{n>=2} (-1)^n x^n / n
        let mut term = x * x;
        let mut acc = 0.0;
        for n in 2..24 {
            let t = term / n as f64;
            acc += if n % 2 == 0 { t } else { -t };
            term *= x;
        }
        acc
    } else {
        x - x.ln_1p()
    }
}

/// The bet cap `1 + W0(-e^{-2}) ≈ 0.841406`.
pub fn lambda_cap() -> f64 {
    1.0 + lambert_w0(-(-2.0f64).exp()).expect("inside the W0 domain")
}

/// Principal branch of the Lambert W function on `[-1/e, ∞)`.
pub fn lambert_w0(z: f64) -> Result<f64> {
    let branch = -1.0 / E;
    if z.is_nan() || z < branch - 1e-16 {
        return Err(domain("lambert_w0 requires z >= -1/e", z));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    if z.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let near = 2.0 * (E * z + 1.0);
    if near <= 0.0 {
        return Ok(-1.0);
    }
    let mut w = if z < -0.25 {
        let p = near.sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if z < 3.0 {
        z.ln_1p()
    } else {
        let l1 = z.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };
    if near < 1e-10 {
        return Ok(w);
    }
    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - z;
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * (1.0 + w.abs()) {
            return Ok(w);
        }
    }
    Ok(w)
}

// B_{2k} / (2k)! for k = 1..=8.
const BERNOULLI_OVER_FACTORIAL: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30_240.0,
    -1.0 / 1_209_600.0,
    1.0 / 47_900_160.0,
    -691.0 / 1_307_674_368_000.0,
    1.0 / 74_724_249_600.0,
    -3617.0 / 10_670_622_842_880_000.0,
];

/// Riemann zeta on `r > 1` by Euler–Maclaurin summation.
///
/// Sums the first 15 terms directly, then adds the integral tail, the
/// half-term at `N = 16` and eight Bernoulli corrections. For real `r > 1`
/// the remainder is bounded by the first omitted correction, which is below
/// `1e-16` for every `r > 1`.
pub fn riemann_zeta(r: f64) -> Result<f64> {
    if r.is_nan() || r <= 1.0 {
        return Err(domain("riemann_zeta requires r > 1", r));
    }
    Ok(zeta_euler_maclaurin(r))
}

fn zeta_euler_maclaurin(s: f64) -> f64 {
    const N: usize = 16;
    let n = N as f64;
    let head: f64 = (1..N).rev().map(|m| (m as f64).powf(-s)).sum();
    let n_pow = n.powf(-s);
    let mut acc = head + n * n_pow / (s - 1.0) + 0.5 * n_pow;
    // rising factorial s (s+1) ... (s+2k-2) times N^{-s-2k+1}
    let mut rising = s;
    let mut power = n_pow / n;
    for (k, coef) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        acc += coef * rising * power;
        let j = 2.0 * k as f64;
        rising *= (s + j + 1.0) * (s + j + 2.0);
        power /= n * n;
    }
    acc
}

/// Jonquière polylogarithm `Li_r(η) = Σ_{m≥1} η^m m^{-r}` for `r > 1`, `η ∈ [0, 1]`.
///
/// Direct summation, stopped once the smaller of the geometric tail bound
/// `η^{M+1} (M+1)^{-r} / (1-η)` and the integral tail bound
/// `η^{M+1} M^{1-r} / (r-1)` is below [`SERIES_TOL`].
pub fn polylog(r: f64, eta: f64) -> Result<f64> {
    if r.is_nan() || r <= 1.0 {
        return Err(domain("polylog requires r > 1", r));
    }
    if eta.is_nan() || !(0.0..=1.0).contains(&eta) {
        return Err(domain("polylog requires eta in [0, 1]", eta));
    }
    if eta == 0.0 {
        return Ok(0.0);
    }
    if eta == 1.0 {
        return riemann_zeta(r);
    }
    let ln_eta = eta.ln();
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut m: u64 = 1;
    loop {
        let mf = m as f64;
        let term = (mf * ln_eta - r * mf.ln()).exp();
        // Neumaier summation; terms are positive and shrinking.
        let t = sum + term;
        comp += (sum - t) + term;
        sum = t;

        let next = mf + 1.0;
        let eta_next = (next * ln_eta).exp();
        let geometric = eta_next * next.powf(-r) / (1.0 - eta);
        let integral = eta_next * mf.powf(1.0 - r) / (r - 1.0);
        if geometric.min(integral) <= SERIES_TOL * 0.5 * (sum + comp).max(1.0) {
            return Ok(sum + comp);
        }
        m += 1;
        if m > MAX_POLYLOG_TERMS {
            return Err(Error::NonConvergence {
                routine: "polylog",
                iterations: MAX_POLYLOG_TERMS as usize,
            });
        }
    }
}

/// `β(x) = x² / ((1 + x)(x − ln(1 + x)))`, strictly decreasing from 2 to 1 on `x > 0`.
pub fn beta_ratio(x: f64) -> f64 {
    x * x / ((1.0 + x) * x_minus_log1p(x))
}

fn beta_ratio_derivative(x: f64) -> f64 {
    let h = x_minus_log1p(x);
    let d = (1.0 + x) * h;
    x * (2.0 * d - x * (h + x)) / (d * d)
}

/// Root-solved constants of the q-growth bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QGrowthConstants {
    pub q: f64,
    /// Root of `β(x) = q`. At `q = 2` this is the limit value 0.
    pub x_star: f64,
    /// `x_star^{2-q}`, with the limit value 1 at `q = 2`.
    pub c_star: f64,
}

/// Solve `β(x*) = q` and return `x*` together with `c* = x*^{2−q}`.
pub fn q_growth_constants(q: f64) -> Result<QGrowthConstants> {
    if q.is_nan() || q <= 1.0 || q > 2.0 {
        return Err(domain("q_growth_constants requires q in (1, 2]", q));
    }
    if q == 2.0 {
        return Ok(QGrowthConstants {
            q,
            x_star: 0.0,
            c_star: 1.0,
        });
    }
    let f = |x: f64| beta_ratio(x) - q;
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    let mut doublings = 0;
    while f(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 1100 {
            return Err(Error::NonConvergence {
                routine: "q_growth_constants bracket",
                iterations: doublings,
            });
        }
    }
    // f(lo) > 0 (β → 2 at 0), f(hi) <= 0
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi.max(1e-3) {
            break;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..8 {
        let fx = f(x);
        let dfx = beta_ratio_derivative(x);
        if dfx == 0.0 || !dfx.is_finite() {
            break;
        }
        let next = x - fx / dfx;
        if !(lo..=hi).contains(&next) {
            break;
        }
        let done = (next - x).abs() <= 1e-15 * x;
        x = next;
        if done {
            break;
        }
    }
    Ok(QGrowthConstants {
        q,
        x_star: x,
        c_star: x.powf(2.0 - q),
    })
}

/// `ln Γ(a) − ((a − ½) ln a − a + ½ ln 2π)`, the Stirling remainder.
///
/// Uses the asymptotic series for `a ≥ 10` so that callers can cancel the
/// large terms analytically.
pub fn ln_gamma_stirling_remainder(a: f64) -> f64 {
    if a >= 10.0 {
        let inv = 1.0 / a;
        let inv2 = inv * inv;
        inv * (1.0 / 12.0
            - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 / 1188.0))))
    } else {
        statrs::function::gamma::ln_gamma(a) - ((a - 0.5) * a.ln() - a + 0.5 * (2.0 * PI).ln())
    }
}

/// Natural log of the gamma function on `a > 0`.
pub fn ln_gamma(a: f64) -> f64 {
    statrs::function::gamma::ln_gamma(a)
}

const TEMME_MIN_SHAPE: f64 = 1000.0;

/// Regularized lower incomplete gamma `P(a, x)` for `a > 0`, `x ≥ 0`.
///
/// Small shapes go through `statrs`; for `a ≥ 1000` the first two terms of
/// Temme's uniform expansion are used, which avoids the `O(√a)` iteration
/// count of the series and continued fraction.
pub fn regularized_gamma_p(a: f64, x: f64) -> Result<f64> {
    if a.is_nan() || a <= 0.0 || !a.is_finite() {
        return Err(domain("regularized_gamma_p requires a > 0", a));
    }
    if x.is_nan() || x < 0.0 {
        return Err(domain("regularized_gamma_p requires x >= 0", x));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    if a < TEMME_MIN_SHAPE {
        return Ok(statrs::function::gamma::gamma_lr(a, x));
    }
    let lambda = x / a;
    let u = lambda - 1.0;
    let eta = u.signum() * (2.0 * x_minus_log1p(u)).sqrt();
    let c0 = if eta.abs() < 1e-2 {
        -1.0 / 3.0 + eta / 12.0 - 2.0 * eta * eta / 135.0 + eta.powi(3) / 864.0
    } else {
        1.0 / u - 1.0 / eta
    };
    let c1 = if eta.abs() < 5e-2 {
        -1.0 / 540.0 - eta / 288.0 + eta * eta / 378.0
    } else {
        1.0 / eta.powi(3) - 1.0 / u.powi(3) - 1.0 / (u * u) - 1.0 / (12.0 * u)
    };
    let remainder = (-0.5 * a * eta * eta).exp() / (2.0 * PI * a).sqrt() * (c0 + c1 / a);
    let scaled = eta * (0.5 * a).sqrt();
    if eta >= 0.0 {
        let q = 0.5 * statrs::function::erf::erfc(scaled) + remainder;
        Ok((1.0 - q).clamp(0.0, 1.0))
    } else {
        let p = 0.5 * statrs::function::erf::erfc(-scaled) - remainder;
        Ok(p.clamp(0.0, 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambert_examples() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        assert!((lambert_w0(E).unwrap() - 1.0).abs() < 1e-14);
        assert!((lambda_cap() - 0.841_405_660_436_960_6).abs() < 1e-12);
        assert!(lambert_w0(-1.0 / E - 1e-9).is_err());
        assert!((lambert_w0(-1.0 / E).unwrap() + 1.0).abs() < 1e-6);
    }

    #[test]
    fn lambert_inverts_on_a_grid() {
        let mut z = -1.0 / E + 1e-9;
        while z < 1e6 {
            let w = lambert_w0(z).unwrap();
            let back = w * w.exp();
            assert!(
                (back - z).abs() <= 1e-12 * z.abs().max(1e-3),
                "z={z} w={w} back={back}"
            );
            z = if z < 0.0 {
                z * 0.7 + 1e-3
            } else {
                z * 1.9 + 0.01
            };
        }
    }

    #[test]
    fn zeta_examples() {
        assert!((riemann_zeta(2.0).unwrap() - PI * PI / 6.0).abs() < 1e-13);
        assert!((riemann_zeta(4.0).unwrap() - PI.powi(4) / 90.0).abs() < 1e-13);
        // mpmath: zeta(3)
        assert!((riemann_zeta(3.0).unwrap() - 1.202_056_903_159_594_3).abs() < 1e-13);
        assert!(riemann_zeta(1.0).is_err());
        assert!(riemann_zeta(0.5).is_err());
    }

    #[test]
    fn zeta_matches_brute_force_with_tail_bound() {
        for &r in &[1.5, 2.5, 7.0] {
            let n = 2_000_000u64;
            let head: f64 = (1..=n).rev().map(|m| (m as f64).powf(-r)).sum();
            // tail in [∫_{n+1}^∞, ∫_n^∞]
            let lo = head + ((n + 1) as f64).powf(1.0 - r) / (r - 1.0);
            let hi = head + (n as f64).powf(1.0 - r) / (r - 1.0);
            let z = riemann_zeta(r).unwrap();
            assert!(
                z >= lo - 1e-12 && z <= hi + 1e-12,
                "r={r} z={z} [{lo},{hi}]"
            );
        }
    }

    #[test]
    fn polylog_examples() {
        assert_eq!(polylog(2.0, 0.0).unwrap(), 0.0);
        assert_eq!(polylog(2.0, 1.0).unwrap(), riemann_zeta(2.0).unwrap());
        let ln2 = 2f64.ln();
        let dilog_half = PI * PI / 12.0 - ln2 * ln2 / 2.0;
        assert!((polylog(2.0, 0.5).unwrap() - dilog_half).abs() < 1e-12);
        // mpmath: polylog(2, 0.95)
        assert!((polylog(2.0, 0.95).unwrap() - 1.440_633_796_970_039_5).abs() < 1e-12);
        assert!(polylog(2.0, 1.1).is_err());
        assert!(polylog(2.0, -0.1).is_err());
        assert!(polylog(1.0, 0.5).is_err());
    }

    #[test]
    fn polylog_bounded_by_zeta() {
        for &r in &[1.2, 2.0, 3.3] {
            let z = riemann_zeta(r).unwrap();
            for i in 0..=20 {
                let eta = i as f64 / 20.0;
                assert!(polylog(r, eta).unwrap() <= z + 1e-12);
            }
        }
    }

    #[test]
    fn q_growth_examples() {
        let c2 = q_growth_constants(2.0).unwrap();
        assert_eq!(c2.c_star, 1.0);
        // mpmath root of beta(x) = 1.5
        let c = q_growth_constants(1.5).unwrap();
        assert!((c.x_star - 1.816_960_535_536_510_8).abs() < 1e-10);
        assert!((c.c_star - 1.347_946_785_127_851_7).abs() < 1e-10);
        assert!((beta_ratio(c.x_star) - 1.5).abs() < 1e-10);
        let near_two = q_growth_constants(1.999).unwrap();
        assert!((near_two.c_star - 0.993_520_046_537_163_9).abs() < 1e-9);
        assert!(q_growth_constants(1.0).is_err());
        assert!(q_growth_constants(2.01).is_err());
    }

    #[test]
    fn q_growth_roots_hit_target() {
        for i in 1..100 {
            let q = 1.0 + i as f64 / 100.0;
            let c = q_growth_constants(q).unwrap();
            assert!((beta_ratio(c.x_star) - q).abs() < 1e-10, "q={q}");
        }
    }

    #[test]
    fn beta_is_decreasing_and_tends_to_two() {
        assert!((beta_ratio(1e-4) - 2.0).abs() < 1e-4);
        let mut prev = beta_ratio(1e-6);
        let mut x = 1e-6;
        while x < 1e8 {
            x *= 1.3;
            let b = beta_ratio(x);
            assert!(b < prev, "x={x}");
            prev = b;
        }
    }

    #[test]
    fn temme_agrees_with_series_near_switch() {
        for &a in &[1000.0, 2500.0, 9000.0] {
            let sd: f64 = f64::sqrt(a);
            for &off in &[-3.0, -0.5, 0.0, 0.3, 1.0, 4.0, 9.0] {
                let x = a + off * sd;
                let reference = statrs::function::gamma::gamma_lr(a, x);
                let temme = regularized_gamma_p(a, x).unwrap();
                assert!(
                    (reference - temme).abs() < 1e-9,
                    "a={a} x={x} ref={reference} temme={temme}"
                );
            }
        }
    }

    #[test]
    fn stirling_remainder_is_continuous_at_switch() {
        let below = ln_gamma(9.999_999)
            - ((9.999_999f64 - 0.5) * 9.999_999f64.ln() - 9.999_999 + 0.5 * (2.0 * PI).ln());
        let above = ln_gamma_stirling_remainder(10.0);
        assert!((below - above).abs() < 1e-8);
    }

    #[test]
    fn x_minus_log1p_matches_direct_away_from_zero() {
        for &x in &[-0.9, -0.2, 0.049, 0.051, 0.5, 10.0] {
            assert!((x_minus_log1p(x) - (x - f64::ln_1p(x))).abs() < 1e-15);
        }
        assert!((x_minus_log1p(1e-8) - 5e-17).abs() < 1e-24);
    }
}
