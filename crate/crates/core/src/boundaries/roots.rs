use crate::error::{Error, Result};

const MAX_EXPANSIONS: usize = 2000;
const MAX_REFINEMENTS: usize = 400;

/// Find the smallest certified upper point of the root of an increasing,
/// convex function.
///
/// `f` returns `(value, slope)`; the slope may be NaN, in which case that step
/// bisects. The bracket is grown by doubling from `start` (clamped to
/// `floor`), then refined with Newton steps taken from the right, which stay
/// on the upper side of the root for convex `f`. The result `y` satisfies
/// `f(y) ≥ 0` and `f(y − tol) < 0`, unless `f(floor) ≥ 0` in which case `floor`
/// is returned.
pub fn invert_increasing<F>(mut f: F, start: f64, floor: Option<f64>, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    let floor_value = floor.unwrap_or(f64::NEG_INFINITY);
    let start = if start.is_finite() {
        start.max(floor_value)
    } else {
        floor.unwrap_or(0.0)
    };
    let (f0, d0) = f(start)?;
    let (mut lo, mut hi, mut f_hi, mut d_hi);
    if f0 >= 0.0 {
        hi = start;
        f_hi = f0;
        d_hi = d0;
        let mut step = start.abs().max(1.0) * 0.25;
        let mut expansions = 0;
        loop {
            let cand = (hi - step).max(floor_value);
            let (fc, dc) = f(cand)?;
            if fc < 0.0 {
                lo = cand;
                break;
            }
            hi = cand;
            f_hi = fc;
            d_hi = dc;
            if cand == floor_value {
                return Ok(cand);
            }
            step *= 2.0;
            expansions += 1;
            if expansions > MAX_EXPANSIONS {
                return Err(Error::NonConvergence {
                    routine: "boundary bracket (down)",
                    iterations: expansions,
                });
            }
        }
    } else {
        lo = start;
        let mut step = start.abs().max(1.0) * 0.25;
        let mut expansions = 0;
        loop {
            let cand = lo + step;
            let (fc, dc) = f(cand)?;
            if fc >= 0.0 {
                hi = cand;
                f_hi = fc;
                d_hi = dc;
                break;
            }
            lo = cand;
            step *= 2.0;
            expansions += 1;
            if expansions > MAX_EXPANSIONS || !cand.is_finite() {
                return Err(Error::NonConvergence {
                    routine: "boundary bracket (up)",
                    iterations: expansions,
                });
            }
        }
    }

    let mut slow_steps = 0;
    for _ in 0..MAX_REFINEMENTS {
        let width = hi - lo;
        // the tolerance cannot go below a few ulps of the bracket
        let tol = tol.max(4.0 * f64::EPSILON * hi.abs().max(lo.abs()));
        if width <= tol {
            return Ok(hi);
        }
        let newton = if d_hi > 0.0 && d_hi.is_finite() {
            hi - f_hi / d_hi
        } else {
            f64::NAN
        };
        let mut cand = if newton > lo && newton < hi && slow_steps < 3 {
            newton
        } else {
            slow_steps = 0;
            0.5 * (lo + hi)
        };
        if hi - cand < 0.05 * width {
            slow_steps += 1;
        } else {
            slow_steps = 0;
        }
        // Newton has converged up to the tolerance; probe just below to close the bracket.
        if hi - cand < 0.5 * tol {
            cand = (hi - 0.5 * tol).max(lo);
        }
        if cand <= lo || cand >= hi {
            return Ok(hi);
        }
        let (fc, dc) = f(cand)?;
        if fc >= 0.0 {
            hi = cand;
            f_hi = fc;
            d_hi = dc;
        } else {
            lo = cand;
        }
    }
    Err(Error::NonConvergence {
        routine: "boundary refinement",
        iterations: MAX_REFINEMENTS,
    })
}
