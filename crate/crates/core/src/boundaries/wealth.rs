use crate::accumulators::History;
use crate::error::{domain, Result};

/// `ψ_E(λ) = −λ − ln(1 − λ)`.
pub fn psi_e(lambda: f64) -> Result<f64> {
    if lambda.is_nan() || !(0.0..1.0).contains(&lambda) {
        return Err(domain("psi_e requires lambda in [0, 1)", lambda));
    }
    Ok(crate::special::x_minus_log1p(-lambda))
}

/// Exact log wealth of the heavy supermartingale, `λy − Σ_s g(λ, x_s − x̂_s)`.
pub fn heavy_log_wealth(history: &History, lambda: f64, y: f64) -> Result<f64> {
    Ok(lambda * y - history.sum_g(lambda)?)
}

/// Log wealth of the empirical Bernstein supermartingale, `λy − ψ_E(λ) Σ_s (x_s − x̂_s)²`.
pub fn eb_log_wealth(history: &History, lambda: f64, y: f64) -> Result<f64> {
    Ok(lambda * y - psi_e(lambda)? * history.sum_sq_dev())
}
