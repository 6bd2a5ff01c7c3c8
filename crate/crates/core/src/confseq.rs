//! Streaming lower confidence sequences and the off-policy two-sided transform.
//!
//! A [`CsState`] absorbs one observation at a time. Before each observation
//! the predictor emits `x̂ ∈ [0, 1]`, which then enters the sufficient
//! statistics together with the observation. Queries invert the wealth into a
//! lower bound on the running average of conditional means,
//! `L_t = (Σ X_s − boundary_t) / t`.

use std::fmt;
use std::str::FromStr;

use crate::accumulators::{EbAccumulator, GridAccumulator};
use crate::boundaries::{
    eb_gamma_boundary_with_hint, eb_gamma_log_mixture, DiscreteMixture, HeavyParams, WealthCurve,
};
use crate::error::{invalid, Error, Result};

/// Shape of the gamma-exponential prior for the empirical Bernstein baseline.
pub const EB_RHO: f64 = 1.0;

/// Default recomputation schedule: every step up to `t = 1000`, then every
/// `⌈t/1000⌉` steps.
pub fn default_cadence(t: u64) -> bool {
    t <= 1000 || t % t.div_ceil(1000) == 0
}

/// Which boundary the state maintains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Ddrm,
    Eb,
    Both,
}

impl Method {
    pub fn uses_ddrm(self) -> bool {
        matches!(self, Method::Ddrm | Method::Both)
    }

    pub fn uses_eb(self) -> bool {
        matches!(self, Method::Eb | Method::Both)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ddrm" => Ok(Method::Ddrm),
            "eb" => Ok(Method::Eb),
            "both" => Ok(Method::Both),
            other => Err(invalid(
                "method",
                format!("expected ddrm, eb or both, got {other:?}"),
            )),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Ddrm => "ddrm",
            Method::Eb => "eb",
            Method::Both => "both",
        })
    }
}

/// A user-supplied predictable forecaster.
///
/// `predict` is called before `observe` at every step; outputs are clamped
/// to `[0, 1]` by the caller.
pub trait Predictor: Send {
    fn predict(&self) -> f64;
    fn observe(&mut self, x: f64);
}

pub enum Strategy {
    /// `(½ + Σ_{s<t} min(x_s, 1)) / (t + 1)`.
    ShrunkMean,
    Constant(f64),
    Custom(Box<dyn Predictor>),
}

impl fmt::Debug for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::ShrunkMean => f.write_str("ShrunkMean"),
            Strategy::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            Strategy::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

#[derive(Debug)]
pub struct PredictorState {
    strategy: Strategy,
    count: u64,
    clipped_sum: f64,
}

impl Default for PredictorState {
    fn default() -> Self {
        Self::new(Strategy::ShrunkMean)
    }
}

impl PredictorState {
    pub fn new(strategy: Strategy) -> Self {
        Self {
            strategy,
            count: 0,
            clipped_sum: 0.0,
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Prediction for the next observation, always in `[0, 1]`.
    pub fn predict(&self) -> f64 {
        let raw = match &self.strategy {
            Strategy::ShrunkMean => (0.5 + self.clipped_sum) / (self.count as f64 + 1.0),
            Strategy::Constant(c) => *c,
            Strategy::Custom(p) => p.predict(),
        };
        if raw.is_nan() {
            0.5
        } else {
            raw.clamp(0.0, 1.0)
        }
    }

    pub fn observe(&mut self, x: f64) {
        self.count += 1;
        self.clipped_sum += x.min(1.0);
        if let Strategy::Custom(p) = &mut self.strategy {
            p.observe(x);
        }
    }
}

/// Static configuration of a confidence sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsConfig {
    pub params: HeavyParams,
    pub method: Method,
    /// Known upper bound on the conditional means; observations are divided by it.
    pub scale: f64,
    /// Prior shape of the empirical Bernstein mixture.
    pub rho: f64,
}

impl Default for CsConfig {
    fn default() -> Self {
        Self {
            params: HeavyParams::default(),
            method: Method::Both,
            scale: 1.0,
            rho: EB_RHO,
        }
    }
}

impl CsConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(invalid(
                "scale",
                format!("must be positive and finite, got {}", self.scale),
            ));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(invalid(
                "rho",
                format!("must be positive and finite, got {}", self.rho),
            ));
        }
        Ok(())
    }
}

/// A lower bound at one time, per-time and running maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lower {
    pub raw: f64,
    pub running: f64,
}

impl Lower {
    pub fn pick(&self, running: bool) -> f64 {
        if running {
            self.running
        } else {
            self.raw
        }
    }
}

/// Result of a query, in the caller's units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub t: u64,
    pub sum_x: f64,
    pub ddrm: Option<Lower>,
    pub eb: Option<Lower>,
}

/// Which methods' per-time lower bounds exceed a given value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Exceedance {
    pub ddrm: bool,
    pub eb: bool,
}

/// Streaming state of one lower confidence sequence.
#[derive(Debug)]
pub struct CsState {
    config: CsConfig,
    mixture: DiscreteMixture,
    grid: GridAccumulator,
    eb: EbAccumulator,
    predictor: PredictorState,
    running_ddrm: f64,
    running_eb: f64,
    hint_ddrm: Option<f64>,
    hint_eb: Option<f64>,
}

impl CsState {
    pub fn new(config: CsConfig) -> Result<Self> {
        Self::with_predictor(config, PredictorState::default())
    }

    pub fn with_predictor(config: CsConfig, predictor: PredictorState) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            mixture: DiscreteMixture::ddrm(&config.params)?,
            grid: GridAccumulator::new(config.params.k)?,
            eb: EbAccumulator::new(),
            config,
            predictor,
            running_ddrm: 0.0,
            running_eb: 0.0,
            hint_ddrm: None,
            hint_eb: None,
        })
    }

    pub fn config(&self) -> &CsConfig {
        &self.config
    }

    pub fn t(&self) -> u64 {
        self.predictor.count()
    }

    /// Sum of observations in the caller's units.
    pub fn sum_x(&self) -> f64 {
        self.eb.sum_x() * self.config.scale
    }

    pub fn grid(&self) -> &GridAccumulator {
        &self.grid
    }

    pub fn eb_accumulator(&self) -> &EbAccumulator {
        &self.eb
    }

    /// The prediction that the next observation will be paired with.
    pub fn next_prediction(&self) -> f64 {
        self.predictor.predict()
    }

    /// Running lower bound of the primary method (DDRM unless the state is EB-only).
    pub fn running_lower(&self) -> f64 {
        if self.config.method.uses_ddrm() {
            self.running_ddrm
        } else {
            self.running_eb
        }
    }

    /// Absorb one observation without recomputing any boundary.
    pub fn observe(&mut self, x: f64) -> Result<()> {
        if !x.is_finite() {
            return Err(Error::NonFinite("observation"));
        }
        if x < 0.0 {
            return Err(crate::error::domain("observations must be non-negative", x));
        }
        let scaled = x / self.config.scale;
        let x_hat = self.predictor.predict();
        if self.config.method.uses_ddrm() {
            self.grid.update(scaled, x_hat)?;
        }
        self.eb.update(scaled, x_hat)?;
        self.predictor.observe(scaled);
        Ok(())
    }

    /// Recompute the boundaries and update the running maxima.
    pub fn query(&mut self) -> Result<Bounds> {
        let t = self.t();
        if t == 0 {
            return Err(Error::NoObservations);
        }
        let scale = self.config.scale;
        let sum = self.eb.sum_x();
        let to_lower = |boundary: f64| ((sum - boundary) / t as f64).clamp(0.0, 1.0) * scale;
        let ddrm = if self.config.method.uses_ddrm() {
            let b = self.ddrm_boundary()?;
            let raw = to_lower(b);
            self.running_ddrm = self.running_ddrm.max(raw);
            Some(Lower {
                raw,
                running: self.running_ddrm,
            })
        } else {
            None
        };
        let eb = if self.config.method.uses_eb() {
            let b = self.eb_boundary()?;
            let raw = to_lower(b);
            self.running_eb = self.running_eb.max(raw);
            Some(Lower {
                raw,
                running: self.running_eb,
            })
        } else {
            None
        };
        Ok(Bounds {
            t,
            sum_x: sum * scale,
            ddrm,
            eb,
        })
    }

    /// Absorb one observation and query.
    pub fn update(&mut self, x: f64) -> Result<Bounds> {
        self.observe(x)?;
        self.query()
    }

    /// DDRM boundary in scaled units.
    pub fn ddrm_boundary(&mut self) -> Result<f64> {
        let b = WealthCurve::new(self.mixture, &self.grid)
            .boundary(self.config.params.alpha, self.hint_ddrm)?;
        self.hint_ddrm = Some(b);
        Ok(b)
    }

    /// Empirical Bernstein boundary in scaled units.
    pub fn eb_boundary(&mut self) -> Result<f64> {
        let b = eb_gamma_boundary_with_hint(
            &self.eb,
            self.config.params.alpha,
            self.config.rho,
            self.hint_eb,
        )?;
        self.hint_eb = Some(b);
        Ok(b)
    }

    /// Whether each method's per-time lower bound, at each of `alphas`,
    /// exceeds `mean` (caller's units).
    ///
    /// Equivalent to comparing [`CsState::query`] output against `mean`, but
    /// a single wealth evaluation at `y = Σx − t·mean` settles most cases
    /// without a root-find; only near-ties fall back to the full boundary.
    pub fn exceeds(&mut self, mean: f64, alphas: &[f64]) -> Result<Vec<Exceedance>> {
        let t = self.t();
        if t == 0 {
            return Err(Error::NoObservations);
        }
        let mut out = vec![Exceedance::default(); alphas.len()];
        let scaled_mean = mean / self.config.scale;
        // Lower bounds are clamped to [0, 1].
        if scaled_mean >= 1.0 {
            return Ok(out);
        }
        let y = self.eb.sum_x() - t as f64 * scaled_mean;
        if y <= 0.0 {
            return Ok(out);
        }
        let margin = 1e-6;
        if self.config.method.uses_ddrm() {
            let log_w = WealthCurve::new(self.mixture, &self.grid)
                .log_wealth(y)?
                .log_value;
            for (slot, &alpha) in out.iter_mut().zip(alphas) {
                let threshold = -alpha.ln();
                if log_w >= threshold - margin {
                    let b = WealthCurve::new(self.mixture, &self.grid).boundary(alpha, Some(y))?;
                    slot.ddrm = ((self.eb.sum_x() - b) / t as f64).clamp(0.0, 1.0) > scaled_mean;
                }
            }
        }
        if self.config.method.uses_eb() {
            let (log_m, _) = eb_gamma_log_mixture(y, self.eb.sum_sq_dev(), self.config.rho)?;
            for (slot, &alpha) in out.iter_mut().zip(alphas) {
                let threshold = -alpha.ln();
                if log_m >= threshold - margin {
                    let b = eb_gamma_boundary_with_hint(&self.eb, alpha, self.config.rho, Some(y))?;
                    slot.eb = ((self.eb.sum_x() - b) / t as f64).clamp(0.0, 1.0) > scaled_mean;
                }
            }
        }
        Ok(out)
    }
}

/// A two-sided interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    /// Build from a lower bound and a complementary lower bound, collapsing
    /// to the midpoint if the two sides cross.
    fn from_sides(lower: f64, complement_lower: f64) -> Self {
        let upper = 1.0 - complement_lower;
        if lower > upper {
            let mid = 0.5 * (lower + upper);
            Self {
                lower: mid,
                upper: mid,
            }
        } else {
            Self { lower, upper }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffPolicyBounds {
    pub t: u64,
    pub ddrm: Option<Interval>,
    pub eb: Option<Interval>,
    /// Query result of the `w·r` side.
    pub lower_side: Bounds,
    /// Query result of the `w·(1 − r)` side.
    pub complement_side: Bounds,
}

/// Two-sided confidence sequence for a policy value from importance-weighted
/// rewards `(w, r)` with `E[w] = 1` and `r ∈ [0, 1]`.
///
/// The lower side tracks `w·r`; the upper side is one minus a lower bound on
/// the mean of `w·(1 − r)`.
#[derive(Debug)]
pub struct OffPolicyCs {
    lower: CsState,
    complement: CsState,
    running: bool,
}

impl OffPolicyCs {
    /// With `split_alpha` each side runs at `α/2`, so the pair is a level-`α`
    /// sequence; otherwise each side runs at `α`.
    pub fn new(config: CsConfig, split_alpha: bool) -> Result<Self> {
        let mut side = config;
        side.scale = 1.0;
        if split_alpha {
            side.params.alpha = 0.5 * config.params.alpha;
        }
        Ok(Self {
            lower: CsState::new(side)?,
            complement: CsState::new(side)?,
            running: false,
        })
    }

    /// Report running maxima instead of per-time bounds.
    pub fn with_running_max(mut self, running: bool) -> Self {
        self.running = running;
        self
    }

    pub fn t(&self) -> u64 {
        self.lower.t()
    }

    pub fn sides(&self) -> (&CsState, &CsState) {
        (&self.lower, &self.complement)
    }

    pub fn observe(&mut self, w: f64, r: f64) -> Result<()> {
        if !(w >= 0.0 && w.is_finite()) {
            return Err(crate::error::domain(
                "importance weights must be non-negative and finite",
                w,
            ));
        }
        if !(0.0..=1.0).contains(&r) {
            return Err(crate::error::domain("rewards must lie in [0, 1]", r));
        }
        self.lower.observe(w * r)?;
        self.complement.observe(w * (1.0 - r))
    }

    pub fn query(&mut self) -> Result<OffPolicyBounds> {
        let lo = self.lower.query()?;
        let co = self.complement.query()?;
        let running = self.running;
        let side = |a: Option<Lower>, b: Option<Lower>| match (a, b) {
            (Some(a), Some(b)) => Some(Interval::from_sides(a.pick(running), b.pick(running))),
            _ => None,
        };
        Ok(OffPolicyBounds {
            t: lo.t,
            ddrm: side(lo.ddrm, co.ddrm),
            eb: side(lo.eb, co.eb),
            lower_side: lo,
            complement_side: co,
        })
    }

    pub fn update(&mut self, w: f64, r: f64) -> Result<OffPolicyBounds> {
        self.observe(w, r)?;
        self.query()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shrunk_mean_examples() {
        let mut p = PredictorState::default();
        assert_eq!(p.predict(), 0.5);
        for _ in 0..9 {
            p.observe(0.0);
        }
        assert!((p.predict() - 0.05).abs() < 1e-15);
        let mut p = PredictorState::default();
        for i in 0..9 {
            p.observe(1.0 + i as f64);
        }
        assert!((p.predict() - 0.95).abs() < 1e-15);
        assert_eq!(PredictorState::new(Strategy::Constant(3.0)).predict(), 1.0);
    }

    #[test]
    fn query_before_data_is_an_error() {
        let mut cs = CsState::new(CsConfig::default()).unwrap();
        assert!(matches!(cs.query(), Err(Error::NoObservations)));
    }

    #[test]
    fn zero_stream_has_zero_lower_bound() {
        let mut cs = CsState::new(CsConfig::default()).unwrap();
        for _ in 0..200 {
            let b = cs.update(0.0).unwrap();
            assert_eq!(b.ddrm.unwrap().raw, 0.0);
            assert_eq!(b.eb.unwrap().raw, 0.0);
        }
    }

    #[test]
    fn rejects_invalid_observations() {
        let mut cs = CsState::new(CsConfig::default()).unwrap();
        assert!(cs.observe(-1.0).is_err());
        assert!(cs.observe(f64::NAN).is_err());
        assert!(cs.observe(f64::INFINITY).is_err());
        assert_eq!(cs.t(), 0);
    }

    #[test]
    fn scale_is_applied_both_ways() {
        let mut a = CsState::new(CsConfig::default()).unwrap();
        let mut b = CsState::new(CsConfig {
            scale: 4.0,
            ..CsConfig::default()
        })
        .unwrap();
        let mut last = (0.0, 0.0);
        for i in 0..300 {
            let x = (i % 5) as f64 * 0.4;
            let ba = a.update(x).unwrap();
            let bb = b.update(4.0 * x).unwrap();
            last = (ba.ddrm.unwrap().raw, bb.ddrm.unwrap().raw);
        }
        assert!(last.0 > 0.0);
        assert!((4.0 * last.0 - last.1).abs() < 1e-6);
    }

    #[test]
    fn exceeds_agrees_with_query() {
        let mut cs = CsState::new(CsConfig::default()).unwrap();
        let alphas = [0.05, 0.5, 1.0];
        for i in 0..400 {
            cs.observe(if i % 3 == 0 { 2.5 } else { 0.1 }).unwrap();
            if i % 20 == 19 {
                for &mean in &[0.0, 0.3, 0.5, 0.8] {
                    let ex = cs.exceeds(mean, &alphas).unwrap();
                    for (e, &alpha) in ex.iter().zip(&alphas) {
                        let mut probe = CsState::new(CsConfig {
                            params: HeavyParams::default().with_alpha(alpha),
                            ..CsConfig::default()
                        })
                        .unwrap();
                        probe.grid = cs.grid.clone();
                        probe.eb = cs.eb.clone();
                        probe.predictor.count = cs.t();
                        let q = probe.query().unwrap();
                        assert_eq!(
                            e.ddrm,
                            q.ddrm.unwrap().raw > mean,
                            "t={} mean={mean} alpha={alpha}",
                            i + 1
                        );
                        assert_eq!(e.eb, q.eb.unwrap().raw > mean);
                    }
                }
            }
        }
    }

    #[test]
    fn offpolicy_all_success_and_all_failure() {
        let mut cs = OffPolicyCs::new(CsConfig::default(), true).unwrap();
        let first = cs.update(1.0, 1.0).unwrap();
        let d = first.ddrm.unwrap();
        assert_eq!((d.lower, d.upper), (0.0, 1.0));
        let mut last = first;
        for _ in 0..2000 {
            last = cs.update(1.0, 1.0).unwrap();
        }
        let d = last.ddrm.unwrap();
        assert!(d.lower > 0.9 && d.upper == 1.0);

        let mut cs = OffPolicyCs::new(CsConfig::default(), true).unwrap();
        for _ in 0..2000 {
            last = cs.update(1.0, 0.0).unwrap();
        }
        let d = last.ddrm.unwrap();
        assert!(d.lower == 0.0 && d.upper < 0.1);
    }

    #[test]
    fn cadence_thins_out() {
        assert!((1..=1000).all(default_cadence));
        let hits = (1001..=100_000).filter(|&t| default_cadence(t)).count();
        assert!(hits > 3000 && hits < 6000, "{hits}");
        assert!(default_cadence(100_000));
    }

    #[test]
    fn method_parsing() {
        assert_eq!("DDRM".parse::<Method>().unwrap(), Method::Ddrm);
        assert_eq!("both".parse::<Method>().unwrap(), Method::Both);
        assert!("bayes".parse::<Method>().is_err());
        assert_eq!(Method::Eb.to_string(), "eb");
    }
}
