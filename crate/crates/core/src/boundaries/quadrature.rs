//! Continuous-mixture reference boundary by numeric quadrature.
//!
//! The prior `dF ∝ λ^{q/2−1}` on `(0, λ_max]` becomes uniform on `[0, 1]`
//! after the change of variables `u = (λ/λ_max)^{q/2}`, which removes the
//! integrable singularity at zero for `q < 2`.

use crate::accumulators::History;
use crate::error::{domain, Error, Result};

use super::roots::invert_increasing;
use super::{boundary_tolerance, HeavyParams};

const MAX_EVALUATIONS: usize = 2_000_000;
const MAX_DEPTH: u32 = 60;
const SCAN_POINTS: usize = 64;
const INITIAL_PANELS: usize = 32;

/// Adaptive Simpson integration of `f` over `[a, b]` to relative tolerance
/// `rel_tol` of the total.
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
) -> Result<f64> {
    if !(a.is_finite() && b.is_finite() && a <= b) {
        return Err(Error::NonFinite("integration limits"));
    }
    if a == b {
        return Ok(0.0);
    }
    // Start from equal panels so a narrow feature is not missed by the first
    // five-point estimate.
    let width = (b - a) / INITIAL_PANELS as f64;
    let nodes: Vec<f64> = (0..=2 * INITIAL_PANELS)
        .map(|i| f(a + 0.5 * width * i as f64))
        .collect();
    let mut evaluations = nodes.len();
    let mut panels = Vec::with_capacity(INITIAL_PANELS);
    let mut scale = 0.0f64;
    for p in 0..INITIAL_PANELS {
        let (fa, fm, fb) = (nodes[2 * p], nodes[2 * p + 1], nodes[2 * p + 2]);
        let whole = width / 6.0 * (fa + 4.0 * fm + fb);
        scale += whole.abs();
        let left = a + width * p as f64;
        panels.push((left, left + width, fa, fm, fb, whole));
    }
    let abs_tol = rel_tol * scale.max(f64::MIN_POSITIVE) / INITIAL_PANELS as f64;

    let mut total = 0.0;
    let mut stack: Vec<_> = panels
        .into_iter()
        .map(|(a, b, fa, fm, fb, whole)| (a, b, fa, fm, fb, whole, abs_tol, 0u32))
        .collect();
    while let Some((a, b, fa, fm, fb, whole, tol, depth)) = stack.pop() {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        evaluations += 2;
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol || depth >= MAX_DEPTH {
            if depth >= MAX_DEPTH && delta.abs() > 15.0 * tol {
                return Err(Error::NonConvergence {
                    routine: "adaptive Simpson (depth)",
                    iterations: evaluations,
                });
            }
            total += left + right + delta / 15.0;
            continue;
        }
        if evaluations > MAX_EVALUATIONS {
            return Err(Error::NonConvergence {
                routine: "adaptive Simpson",
                iterations: evaluations,
            });
        }
        stack.push((a, m, fa, flm, fm, left, 0.5 * tol, depth + 1));
        stack.push((m, b, fm, frm, fb, right, 0.5 * tol, depth + 1));
    }
    if !total.is_finite() {
        return Err(Error::NonFinite("quadrature"));
    }
    Ok(total)
}

fn check_q(q: f64) -> Result<()> {
    if q.is_nan() || q <= 1.0 || q > 2.0 {
        return Err(domain("q must lie in (1, 2]", q));
    }
    Ok(())
}

/// `ln ∫ exp(λy − Σ_s g(λ, d_s)) dF(λ)` with `dF ∝ λ^{q/2−1}` normalized on `(0, λ_max]`.
pub fn quadrature_log_wealth(history: &History, q: f64, lambda_max: f64, y: f64) -> Result<f64> {
    check_q(q)?;
    if !(lambda_max > 0.0 && lambda_max < 1.0) {
        return Err(domain("lambda_max must lie in (0, 1)", lambda_max));
    }
    if !y.is_finite() {
        return Err(Error::NonFinite("quadrature wealth argument"));
    }
    let power = 2.0 / q;
    let log_integrand = |u: f64| {
        let lambda = lambda_max * u.powf(power);
        lambda * y - history.sum_g_unchecked(lambda)
    };
    let peak = (0..=SCAN_POINTS)
        .map(|i| log_integrand(i as f64 / SCAN_POINTS as f64))
        .fold(f64::NEG_INFINITY, f64::max);
    let integral = integrate_adaptive(|u| (log_integrand(u) - peak).exp(), 0.0, 1.0, 1e-10)?;
    if integral <= 0.0 {
        return Err(Error::NonFinite("quadrature wealth underflow"));
    }
    Ok(peak + integral.ln())
}

/// Boundary of the continuous mixture: smallest `y` with wealth `≥ 1/α`.
pub fn quadrature_boundary(history: &History, q: f64, params: &HeavyParams) -> Result<f64> {
    params.validate()?;
    check_q(q)?;
    let threshold = -params.alpha.ln();
    invert_increasing(
        |y| {
            Ok((
                quadrature_log_wealth(history, q, params.lambda_max, y)? - threshold,
                f64::NAN,
            ))
        },
        0.0,
        None,
        boundary_tolerance(history.len() as u64),
    )
}
