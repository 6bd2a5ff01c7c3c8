use crate::accumulators::{GridAccumulator, History};
use crate::error::{domain, invalid, Error, Result};
use crate::special::{polylog, riemann_zeta};

use super::roots::invert_increasing;
use super::{boundary_tolerance, HeavyParams};

/// Relative truncation tolerance for the bet-grid sum.
pub const DEFAULT_TRUNC_TOL: f64 = 1e-9;

/// Hard cap on the number of bet-grid terms summed.
pub const MAX_MIXTURE_TERMS: usize = 10_000;

/// Source of `Σ_s pen(λ, d_s)` for a fixed history.
pub trait Penalty {
    /// Total penalty at bet `lambda ∈ [0, 1)`.
    fn penalty(&self, lambda: f64) -> f64;
    /// Number of observations absorbed.
    fn count(&self) -> u64;
}

impl Penalty for GridAccumulator {
    fn penalty(&self, lambda: f64) -> f64 {
        self.sum_g_tilde_unchecked(lambda)
    }

    fn count(&self) -> u64 {
        self.t()
    }
}

impl Penalty for History {
    fn penalty(&self, lambda: f64) -> f64 {
        self.sum_g_unchecked(lambda)
    }

    fn count(&self) -> u64 {
        self.len() as u64
    }
}

/// A discrete mixture over bets `λ_j = λ_max / ξ^{j+1/2}` whose weights
/// decay geometrically, `w_j = w_0 ρ^j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteMixture {
    lambda_max: f64,
    ln_xi: f64,
    ln_w0: f64,
    ln_ratio: f64,
}

impl DiscreteMixture {
    /// Doubly-discrete robust mixture weights
    /// `z_j = ½ (ξ−1)/ξ^{1+j} · (1 + Li_r(η) / (η ζ(r)))`.
    pub fn ddrm(params: &HeavyParams) -> Result<Self> {
        params.validate()?;
        let factor = 1.0 + polylog(params.r, params.eta)? / (params.eta * riemann_zeta(params.r)?);
        let w0 = 0.5 * (params.xi - 1.0) / params.xi * factor;
        Ok(Self {
            lambda_max: params.lambda_max,
            ln_xi: params.xi.ln(),
            ln_w0: w0.ln(),
            ln_ratio: -params.xi.ln(),
        })
    }

    /// Discretization of the single-order prior `dF ∝ λ^{q/2−1}` on `(0, λ_max]`:
    /// `y_j = (q/2)(ξ−1)/ξ^{1 + jq/2}`.
    pub fn single_q(params: &HeavyParams, q: f64) -> Result<Self> {
        params.validate()?;
        if q.is_nan() || q <= 1.0 || q > 2.0 {
            return Err(domain("q must lie in (1, 2]", q));
        }
        let w0 = 0.5 * q * (params.xi - 1.0) / params.xi;
        Ok(Self {
            lambda_max: params.lambda_max,
            ln_xi: params.xi.ln(),
            ln_w0: w0.ln(),
            ln_ratio: -0.5 * q * params.xi.ln(),
        })
    }

    #[inline]
    pub fn bet(&self, j: usize) -> f64 {
        self.lambda_max * (-(j as f64 + 0.5) * self.ln_xi).exp()
    }

    #[inline]
    pub fn ln_weight(&self, j: usize) -> f64 {
        self.ln_w0 + j as f64 * self.ln_ratio
    }

    pub fn weight(&self, j: usize) -> f64 {
        self.ln_weight(j).exp()
    }

    /// `ln Σ_{i ≥ j} w_i`.
    #[inline]
    pub fn ln_tail_mass(&self, j: usize) -> f64 {
        self.ln_weight(j) - (-(self.ln_ratio.exp_m1())).ln()
    }

    pub fn total_mass(&self) -> f64 {
        self.ln_tail_mass(0).exp()
    }
}

/// Mixture log wealth at one `y`, with a certified bound on the dropped tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogWealth {
    /// Log of the partial sum over `j < terms`. Never above the full sum.
    pub log_value: f64,
    /// Log of an upper bound on the omitted terms.
    pub log_error_bound: f64,
    /// Derivative of `log_value` in `y`.
    pub slope: f64,
    pub terms: usize,
    /// False when the term cap stopped the sum before the tail met the tolerance.
    pub certified: bool,
}

impl LogWealth {
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }

    pub fn error_bound(&self) -> f64 {
        self.log_error_bound.exp()
    }
}

/// `y ↦ Σ_j w_j exp(λ_j y − P(λ_j))` for a fixed penalty source.
///
/// The per-bet penalties `P(λ_j)` do not depend on `y` and are cached as the
/// sum is extended.
#[derive(Debug, Clone)]
pub struct WealthCurve<'a, P: Penalty + ?Sized> {
    mixture: DiscreteMixture,
    penalty: &'a P,
    trunc_tol: f64,
    penalties: Vec<f64>,
}

impl<'a, P: Penalty + ?Sized> WealthCurve<'a, P> {
    pub fn new(mixture: DiscreteMixture, penalty: &'a P) -> Self {
        Self::with_tolerance(mixture, penalty, DEFAULT_TRUNC_TOL)
    }

    pub fn with_tolerance(mixture: DiscreteMixture, penalty: &'a P, trunc_tol: f64) -> Self {
        Self {
            mixture,
            penalty,
            trunc_tol,
            penalties: Vec::with_capacity(64),
        }
    }

    pub fn mixture(&self) -> &DiscreteMixture {
        &self.mixture
    }

    fn penalty_at(&mut self, j: usize) -> f64 {
        while self.penalties.len() <= j {
            let lambda = self.mixture.bet(self.penalties.len());
            self.penalties.push(self.penalty.penalty(lambda));
        }
        self.penalties[j]
    }

    /// Partial sum with at least `min_terms` terms, extended until the tail
    /// bound `Σ_{i>J} w_i · exp(λ_{J+1} max(y, 0))` drops below
    /// `trunc_tol` times the partial sum.
    pub fn log_wealth_with_terms(&mut self, y: f64, min_terms: usize) -> Result<LogWealth> {
        if y.is_nan() {
            return Err(Error::NonFinite("wealth argument"));
        }
        let ln_tol = self.trunc_tol.ln();
        let y_pos = y.max(0.0);
        let mut max_exp = f64::NEG_INFINITY;
        let mut scaled = 0.0;
        let mut scaled_slope = 0.0;
        for j in 0..MAX_MIXTURE_TERMS {
            let lambda = self.mixture.bet(j);
            let a = self.mixture.ln_weight(j) + lambda * y - self.penalty_at(j);
            if a > max_exp {
                let rescale = (max_exp - a).exp();
                scaled = scaled * rescale + 1.0;
                scaled_slope = scaled_slope * rescale + lambda;
                max_exp = a;
            } else {
                let e = (a - max_exp).exp();
                scaled += e;
                scaled_slope += lambda * e;
            }
            let log_value = max_exp + scaled.ln();
            let log_tail = self.mixture.ln_tail_mass(j + 1) + self.mixture.bet(j + 1) * y_pos;
            if j + 1 >= min_terms && log_tail <= ln_tol + log_value {
                return finish(log_value, log_tail, scaled_slope / scaled, j + 1, true);
            }
            if j + 1 == MAX_MIXTURE_TERMS {
                return finish(log_value, log_tail, scaled_slope / scaled, j + 1, false);
            }
        }
        unreachable!("loop returns on its final iteration")
    }

    pub fn log_wealth(&mut self, y: f64) -> Result<LogWealth> {
        self.log_wealth_with_terms(y, 1)
    }

    /// Smallest `y` (up to `tol`, rounded up) with partial wealth `≥ 1/α`.
    pub fn boundary(&mut self, alpha: f64, hint: Option<f64>) -> Result<f64> {
        if alpha.is_nan() || alpha <= 0.0 || alpha > 1.0 {
            return Err(invalid("alpha", format!("must lie in (0, 1], got {alpha}")));
        }
        let threshold = -alpha.ln();
        let tol = boundary_tolerance(self.penalty.count());
        invert_increasing(
            |y| {
                let lw = self.log_wealth(y)?;
                Ok((lw.log_value - threshold, lw.slope))
            },
            hint.unwrap_or(0.0),
            None,
            tol,
        )
    }
}

fn finish(
    log_value: f64,
    log_tail: f64,
    slope: f64,
    terms: usize,
    certified: bool,
) -> Result<LogWealth> {
    if log_value.is_nan() || log_value == f64::INFINITY || slope.is_nan() {
        return Err(Error::NonFinite("mixture wealth"));
    }
    Ok(LogWealth {
        log_value,
        log_error_bound: log_tail,
        slope,
        terms,
        certified,
    })
}

/// DDRM wealth at `y` as `(partial sum, bound on the dropped tail)`.
pub fn ddrm_wealth<P: Penalty + ?Sized>(
    curve: &mut WealthCurve<'_, P>,
    y: f64,
) -> Result<(f64, f64)> {
    let lw = curve.log_wealth(y)?;
    Ok((lw.value(), lw.error_bound()))
}

/// Crossing boundary of the doubly-discrete robust mixture for the
/// sketched history in `acc`.
pub fn ddrm_boundary(acc: &GridAccumulator, params: &HeavyParams) -> Result<f64> {
    if (acc.k() - params.k).abs() > 0.0 {
        return Err(invalid(
            "k",
            format!(
                "accumulator grid base {} differs from params {}",
                acc.k(),
                params.k
            ),
        ));
    }
    let mixture = DiscreteMixture::ddrm(params)?;
    WealthCurve::new(mixture, acc).boundary(params.alpha, None)
}

/// `(w_k, q_k)` for `k = 0..count`, with `w_k = (k+1)^{−r} / ζ(r)` and `q_k = 1 + η^k`.
pub fn q_adaptive_weights(r: f64, eta: f64, count: usize) -> Result<Vec<(f64, f64)>> {
    if count == 0 {
        return Err(invalid("count", "at least one order is required"));
    }
    if eta.is_nan() || eta <= 0.0 || eta >= 1.0 {
        return Err(domain("eta must lie in (0, 1)", eta));
    }
    let zeta = riemann_zeta(r)?;
    Ok((0..count)
        .map(|k| {
            let w = ((k + 1) as f64).powf(-r) / zeta;
            (w, 1.0 + eta.powi(k as i32))
        })
        .collect())
}

/// Certified lower bound on the inner mixture weight `Σ_k w_k y_{j,k}`.
///
/// Sums `k < orders` exactly and adds a lower bound on the remaining
/// orders, `½(ξ−1)/ξ^{1+j} ζ(r)^{−1} (∫_{K+1}^∞ x^{−r} dx + ½ (K+1)^{−r})`,
/// which drops the `η^k` and `ξ^{j(1−q_k/2)}` factors.
pub fn mixture_weight_truncated(params: &HeavyParams, j: usize, orders: usize) -> Result<f64> {
    params.validate()?;
    let weights = q_adaptive_weights(params.r, params.eta, orders)?;
    let xi = params.xi;
    let head: f64 = weights
        .iter()
        .rev()
        .map(|&(w, q)| w * 0.5 * q * (xi - 1.0) * (-(1.0 + j as f64 * q / 2.0) * xi.ln()).exp())
        .sum();
    let next = (orders + 1) as f64;
    let tail_sum = next.powf(1.0 - params.r) / (params.r - 1.0) + 0.5 * next.powf(-params.r);
    let tail =
        0.5 * (xi - 1.0) * (-(1.0 + j as f64) * xi.ln()).exp() * tail_sum / riemann_zeta(params.r)?;
    Ok(head + tail)
}

/// `Σ_{j < terms} z_j` by direct summation.
pub fn ddrm_weight_mass(params: &HeavyParams, terms: usize) -> Result<f64> {
    let m = DiscreteMixture::ddrm(params)?;
    Ok((0..terms).rev().map(|j| m.weight(j)).sum())
}
