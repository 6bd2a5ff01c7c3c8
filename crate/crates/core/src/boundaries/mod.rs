//! Wealth evaluation and boundary inversion.
//!
//! A boundary is the largest `y = Σ_s (x_s − E_{s−1}[x_s])` at which a mixture
//! of test supermartingales is still below `1/α`. Every mixture here is
//! strictly increasing and log-convex in `y`, so the boundary is the unique
//! root of `ln W(y) = ln(1/α)` and is found by [`roots::invert_increasing`].
//! Numerical error is always pushed upward: the returned boundary never sits
//! below the exact root.

mod eb_gamma;
mod mixture;
mod quadrature;
mod roots;
mod wealth;

pub use eb_gamma::{eb_gamma_boundary, eb_gamma_boundary_with_hint, eb_gamma_log_mixture};
pub use mixture::{
    ddrm_boundary, ddrm_wealth, ddrm_weight_mass, mixture_weight_truncated, q_adaptive_weights,
    DiscreteMixture, LogWealth, Penalty, WealthCurve, DEFAULT_TRUNC_TOL, MAX_MIXTURE_TERMS,
};
pub use quadrature::{integrate_adaptive, quadrature_boundary, quadrature_log_wealth};
pub use roots::invert_increasing;
pub use wealth::{eb_log_wealth, heavy_log_wealth, psi_e};

use crate::error::{invalid, Result};
use crate::special::lambda_cap;

/// Hyperparameters of the doubly-discrete robust mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeavyParams {
    /// Largest bet in the mixture, at most `1 + W0(−e^{−2})`.
    pub lambda_max: f64,
    /// Geometric spacing of the bet grid.
    pub xi: f64,
    /// Decay exponent of the weights over moment orders.
    pub r: f64,
    /// Base of the exponential sufficient-statistic grid.
    pub k: f64,
    /// Moment orders are `q = 1 + η^k`.
    pub eta: f64,
    /// Crossing probability.
    pub alpha: f64,
}

impl Default for HeavyParams {
    fn default() -> Self {
        Self {
            lambda_max: 0.5,
            xi: 1.6,
            r: 2.0,
            k: 1.5,
            eta: 0.95,
            alpha: 0.05,
        }
    }
}

impl HeavyParams {
    pub fn validate(&self) -> Result<()> {
        let cap = lambda_cap();
        if !(self.lambda_max > 0.0 && self.lambda_max <= cap + 1e-12) {
            return Err(invalid(
                "lambda_max",
                format!("must lie in (0, {cap:.6}], got {}", self.lambda_max),
            ));
        }
        if !(self.xi > 1.0 && self.xi.is_finite()) {
            return Err(invalid("xi", format!("must be > 1, got {}", self.xi)));
        }
        if !(self.r > 1.0 && self.r.is_finite()) {
            return Err(invalid("r", format!("must be > 1, got {}", self.r)));
        }
        if !(self.k > 1.0 && self.k.is_finite()) {
            return Err(invalid("k", format!("must be > 1, got {}", self.k)));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(invalid(
                "eta",
                format!("must lie in (0, 1), got {}", self.eta),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(invalid(
                "alpha",
                format!("must lie in (0, 1], got {}", self.alpha),
            ));
        }
        Ok(())
    }

    pub fn with_alpha(self, alpha: f64) -> Self {
        Self { alpha, ..self }
    }
}

/// Boundary root tolerance `1e−8 · max(1, t)`.
pub fn boundary_tolerance(t: u64) -> f64 {
    1e-8 * (t as f64).max(1.0)
}
