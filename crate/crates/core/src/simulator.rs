//! Seeded off-policy environments and coverage audits.
//!
//! Every environment emits importance-weighted rewards `(w, r)` with
//! `E[w | past] = 1` and `r ∈ [0, 1]`, plus the conditional mean of `w·r`
//! for the current step.
//!
//! Randomness comes from ChaCha20 seeded with `seed_from_u64(seed)` and the
//! word stream set to a per-purpose id ([`STREAM_EPS_GREEDY`],
//! [`STREAM_PARETO`]). Uniform floats are `(next_u64 >> 11) · 2⁻⁵³`, and each
//! step consumes a fixed number of 64-bit draws so streams are reproducible
//! at the integer level.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::confseq::{CsConfig, CsState, Method};
use crate::error::{invalid, Result};

pub const STREAM_EPS_GREEDY: u64 = 1;
pub const STREAM_PARETO: u64 = 2;

/// One simulated observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimRecord {
    /// 1-based step index.
    pub t: u64,
    pub w: f64,
    pub r: f64,
    /// `E[w·r | past]` at this step.
    pub true_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsGreedyParams {
    pub actions: usize,
    pub epsilon: f64,
    /// Probability that the evaluated policy picks the logger's greedy
    /// action. `None` calibrates it to `target_second_moment`.
    pub agreement: Option<f64>,
    pub target_second_moment: f64,
    pub base_mean: f64,
    pub amplitude: f64,
    pub period: f64,
    pub trend: f64,
    /// Reward-mean deficit of non-greedy actions.
    pub gap: f64,
}

impl Default for EpsGreedyParams {
    fn default() -> Self {
        Self {
            actions: 20,
            epsilon: 0.1,
            agreement: None,
            target_second_moment: 10.0,
            base_mean: 0.6,
            amplitude: 0.2,
            period: 1000.0,
            trend: 2e-6,
            gap: 0.1,
        }
    }
}

impl EpsGreedyParams {
    /// Logging probabilities of the greedy action and of each other action.
    pub fn logging_probabilities(&self) -> (f64, f64) {
        let k = self.actions as f64;
        (1.0 - self.epsilon + self.epsilon / k, self.epsilon / k)
    }

    /// Agreement rate `f` with `f/p_g + (1−f)/p_o = E[w²]`, solved exactly
    /// (the second moment is affine in `f`).
    pub fn calibrated_agreement(&self) -> Result<f64> {
        let (p_greedy, p_other) = self.logging_probabilities();
        let (hi, lo) = (1.0 / p_other, 1.0 / p_greedy);
        let target = self.target_second_moment;
        if hi == lo {
            return Err(invalid(
                "agreement",
                "a uniform logger fixes E[w²]; supply an explicit agreement rate",
            ));
        }
        if !(target >= lo && target <= hi) {
            return Err(invalid(
                "target_second_moment",
                format!("must lie in [{lo}, {hi}] for this logger, got {target}"),
            ));
        }
        Ok((hi - target) / (hi - lo))
    }

    fn agreement_rate(&self) -> Result<f64> {
        match self.agreement {
            Some(f) if (0.0..=1.0).contains(&f) => Ok(f),
            Some(f) => Err(invalid("agreement", format!("must lie in [0, 1], got {f}"))),
            None => self.calibrated_agreement(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.actions < 2 {
            return Err(invalid(
                "actions",
                format!("need at least 2, got {}", self.actions),
            ));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(invalid(
                "epsilon",
                format!("must lie in (0, 1], got {}", self.epsilon),
            ));
        }
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(invalid(
                "period",
                format!("must be positive, got {}", self.period),
            ));
        }
        for (name, v) in [
            ("base_mean", self.base_mean),
            ("amplitude", self.amplitude),
            ("trend", self.trend),
            ("gap", self.gap),
        ] {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        self.agreement_rate().map(|_| ())
    }

    /// Reward mean of the greedy action at step `t`.
    pub fn greedy_mean(&self, t: u64) -> f64 {
        let t = t as f64;
        (self.base_mean + self.amplitude * (std::f64::consts::TAU * t / self.period).sin()
            - self.trend * t)
            .clamp(0.0, 1.0)
    }

    pub fn other_mean(&self, t: u64) -> f64 {
        (self.greedy_mean(t) - self.gap).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParetoParams {
    /// Tail index `a ∈ (1, 2)`; weights are `((a−1)/a)·U^{−1/a}`.
    pub shape: f64,
    pub reward_mean: f64,
}

impl Default for ParetoParams {
    fn default() -> Self {
        Self {
            shape: 1.5,
            reward_mean: 0.5,
        }
    }
}

impl ParetoParams {
    pub fn scale(&self) -> f64 {
        (self.shape - 1.0) / self.shape
    }

    fn validate(&self) -> Result<()> {
        if !(self.shape > 1.0 && self.shape < 2.0) {
            return Err(invalid(
                "shape",
                format!("must lie in (1, 2), got {}", self.shape),
            ));
        }
        if !(0.0..=1.0).contains(&self.reward_mean) {
            return Err(invalid(
                "reward_mean",
                format!("must lie in [0, 1], got {}", self.reward_mean),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnvKind {
    EpsGreedy(EpsGreedyParams),
    Pareto(ParetoParams),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvConfig {
    pub kind: EnvKind,
    pub seed: u64,
    pub horizon: u64,
}

impl EnvConfig {
    pub fn eps_greedy(seed: u64, horizon: u64) -> Self {
        Self {
            kind: EnvKind::EpsGreedy(EpsGreedyParams::default()),
            seed,
            horizon,
        }
    }

    pub fn pareto(seed: u64, horizon: u64) -> Self {
        Self {
            kind: EnvKind::Pareto(ParetoParams::default()),
            seed,
            horizon,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            EnvKind::EpsGreedy(p) => p.validate(),
            EnvKind::Pareto(p) => p.validate(),
        }
    }
}

struct Draws(ChaCha20Rng);

impl Draws {
    fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self(rng)
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `0..n` from one draw.
    fn index(&mut self, n: usize) -> usize {
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }
}

enum State {
    EpsGreedy {
        params: EpsGreedyParams,
        agreement: f64,
    },
    Pareto(ParetoParams),
}

/// Iterator over the records of one environment run.
pub struct SimStream {
    state: State,
    draws: Draws,
    t: u64,
    horizon: u64,
}

impl Iterator for SimStream {
    type Item = SimRecord;

    fn next(&mut self) -> Option<SimRecord> {
        if self.t >= self.horizon {
            return None;
        }
        self.t += 1;
        let t = self.t;
        Some(match &self.state {
            State::EpsGreedy { params, agreement } => {
                // six draws per step: greedy action, target agreement, target
                // alternative, logger exploration, logger alternative, reward
                let k = params.actions;
                let greedy = self.draws.index(k);
                let agrees = self.draws.uniform() < *agreement;
                let target_other = (greedy + 1 + self.draws.index(k - 1)) % k;
                let exploit = self.draws.uniform() >= params.epsilon;
                let explore_action = self.draws.index(k);
                let u_reward = self.draws.uniform();
                let target = if agrees { greedy } else { target_other };
                let logged = if exploit { greedy } else { explore_action };
                let (p_greedy, p_other) = params.logging_probabilities();
                let propensity = if logged == greedy { p_greedy } else { p_other };
                let w = if logged == target {
                    1.0 / propensity
                } else {
                    0.0
                };
                let mean_of = |a: usize| {
                    if a == greedy {
                        params.greedy_mean(t)
                    } else {
                        params.other_mean(t)
                    }
                };
                let r = if u_reward < mean_of(logged) { 1.0 } else { 0.0 };
                let true_value =
                    agreement * params.greedy_mean(t) + (1.0 - agreement) * params.other_mean(t);
                SimRecord {
                    t,
                    w,
                    r,
                    true_value,
                }
            }
            State::Pareto(params) => {
                let u = 1.0 - self.draws.uniform();
                let w = params.scale() * u.powf(-1.0 / params.shape);
                let r = if self.draws.uniform() < params.reward_mean {
                    1.0
                } else {
                    0.0
                };
                SimRecord {
                    t,
                    w,
                    r,
                    true_value: params.reward_mean,
                }
            }
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.horizon - self.t) as usize;
        (left, Some(left))
    }
}

/// Stream for any environment kind.
pub fn stream(cfg: &EnvConfig) -> Result<SimStream> {
    cfg.validate()?;
    let (state, purpose) = match cfg.kind {
        EnvKind::EpsGreedy(params) => (
            State::EpsGreedy {
                params,
                agreement: params.agreement_rate()?,
            },
            STREAM_EPS_GREEDY,
        ),
        EnvKind::Pareto(params) => (State::Pareto(params), STREAM_PARETO),
    };
    Ok(SimStream {
        state,
        draws: Draws::new(cfg.seed, purpose),
        t: 0,
        horizon: cfg.horizon,
    })
}

/// ε-greedy logger over a discrete action set with seasonal, trending rewards.
pub fn eps_greedy_stream(cfg: &EnvConfig) -> Result<SimStream> {
    match cfg.kind {
        EnvKind::EpsGreedy(_) => stream(cfg),
        EnvKind::Pareto(_) => Err(invalid("kind", "expected an eps-greedy configuration")),
    }
}

/// Constant environment with Pareto importance weights of infinite variance.
pub fn pareto_stream(cfg: &EnvConfig) -> Result<SimStream> {
    match cfg.kind {
        EnvKind::Pareto(_) => stream(cfg),
        EnvKind::EpsGreedy(_) => Err(invalid("kind", "expected a pareto configuration")),
    }
}

/// Per-level violation rates from a coverage audit.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditRow {
    pub alpha: f64,
    pub ddrm_rate: Option<f64>,
    pub eb_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub seeds: usize,
    pub rows: Vec<AuditRow>,
}

impl AuditReport {
    /// Two-sided normal-approximation half width `z·sqrt(p(1−p)/n)`.
    pub fn binomial_half_width(&self, rate: f64, z: f64) -> f64 {
        z * (rate * (1.0 - rate) / self.seeds as f64).sqrt()
    }
}

/// For each seed `env.seed + i`, whether the per-time lower bound on `w·r`
/// ever exceeds the running mean of the true values, at each level.
fn audit_seed(
    env: &EnvConfig,
    cs: &CsConfig,
    alphas: &[f64],
    seed: u64,
) -> Result<Vec<(bool, bool)>> {
    let mut state = CsState::new(*cs)?;
    let mut hits = vec![(false, false); alphas.len()];
    let mut true_sum = 0.0;
    for rec in stream(&env.with_seed(seed))? {
        state.observe(rec.w * rec.r)?;
        true_sum += rec.true_value;
        let pending: Vec<f64> = alphas
            .iter()
            .zip(&hits)
            .filter(|(_, h)| (cs.method.uses_ddrm() && !h.0) || (cs.method.uses_eb() && !h.1))
            .map(|(&a, _)| a)
            .collect();
        if pending.is_empty() {
            break;
        }
        let ex = state.exceeds(true_sum / rec.t as f64, alphas)?;
        for (h, e) in hits.iter_mut().zip(ex) {
            h.0 |= e.ddrm;
            h.1 |= e.eb;
        }
    }
    Ok(hits)
}

/// Coverage audit over `seeds` independent streams at several levels.
///
/// Seeds are `env.seed, env.seed + 1, …`; `threads` caps the worker count
/// (`None` uses the global pool). Aggregation is in seed order.
pub fn coverage_audit_levels(
    env: &EnvConfig,
    cs: &CsConfig,
    alphas: &[f64],
    seeds: usize,
    threads: Option<usize>,
) -> Result<AuditReport> {
    env.validate()?;
    cs.validate()?;
    if seeds == 0 {
        return Err(invalid("seeds", "at least one seed is required"));
    }
    for &a in alphas {
        if !(a > 0.0 && a <= 1.0) {
            return Err(invalid("alpha", format!("must lie in (0, 1], got {a}")));
        }
    }
    let run = || -> Result<Vec<Vec<(bool, bool)>>> {
        (0..seeds as u64)
            .into_par_iter()
            .map(|i| audit_seed(env, cs, alphas, env.seed.wrapping_add(i)))
            .collect()
    };
    let per_seed = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| invalid("threads", e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    let n = seeds as f64;
    let rows = alphas
        .iter()
        .enumerate()
        .map(|(i, &alpha)| {
            let ddrm = per_seed.iter().filter(|s| s[i].0).count() as f64 / n;
            let eb = per_seed.iter().filter(|s| s[i].1).count() as f64 / n;
            AuditRow {
                alpha,
                ddrm_rate: cs.method.uses_ddrm().then_some(ddrm),
                eb_rate: cs.method.uses_eb().then_some(eb),
            }
        })
        .collect();
    Ok(AuditReport { seeds, rows })
}

/// Fraction of `n_seeds` streams whose lower bound ever exceeds the true
/// running mean. For `Method::Both` the larger of the two rates is returned.
pub fn coverage_audit(env: &EnvConfig, method: Method, alpha: f64, n_seeds: usize) -> Result<f64> {
    let cs = CsConfig {
        method,
        ..CsConfig::default()
    };
    let report = coverage_audit_levels(env, &cs, &[alpha], n_seeds, None)?;
    let row = &report.rows[0];
    Ok(row.ddrm_rate.unwrap_or(0.0).max(row.eb_rate.unwrap_or(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calibration_hits_second_moment() {
        let p = EpsGreedyParams::default();
        let f = p.calibrated_agreement().unwrap();
        assert!((f - 190.0 / (200.0 - 1.0 / 0.905)).abs() < 1e-12);
        let (pg, po) = p.logging_probabilities();
        assert!((f / pg + (1.0 - f) / po - 10.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_logger_weights() {
        let cfg = EnvConfig {
            kind: EnvKind::EpsGreedy(EpsGreedyParams {
                epsilon: 1.0,
                agreement: Some(1.0),
                ..EpsGreedyParams::default()
            }),
            seed: 3,
            horizon: 200_000,
        };
        let mut sum = 0.0;
        for rec in stream(&cfg).unwrap() {
            assert!(rec.w == 0.0 || (rec.w - 20.0).abs() < 1e-12);
            sum += rec.w;
        }
        assert!((sum / 200_000.0 - 1.0).abs() < 0.03);
        let uncalibrated = EnvConfig {
            kind: EnvKind::EpsGreedy(EpsGreedyParams {
                epsilon: 1.0,
                ..EpsGreedyParams::default()
            }),
            ..cfg
        };
        assert!(stream(&uncalibrated).is_err());
    }

    #[test]
    fn eps_greedy_moments() {
        let recs: Vec<_> = stream(&EnvConfig::eps_greedy(11, 100_000))
            .unwrap()
            .collect();
        let n = recs.len() as f64;
        let m1 = recs.iter().map(|r| r.w).sum::<f64>() / n;
        let m2 = recs.iter().map(|r| r.w * r.w).sum::<f64>() / n;
        assert!((0.98..=1.02).contains(&m1), "{m1}");
        assert!((8.5..=11.5).contains(&m2), "{m2}");
        assert!(recs
            .iter()
            .all(|r| (0.0..=1.0).contains(&r.r) && (0.0..=1.0).contains(&r.true_value)));
    }

    #[test]
    fn pareto_moments_and_support() {
        let cfg = EnvConfig::pareto(5, 1_000_000);
        let mut sum = 0.0;
        for rec in stream(&cfg).unwrap() {
            assert!(rec.w >= 1.0 / 3.0);
            sum += rec.w;
        }
        let mean = sum / 1e6;
        assert!((0.97..=1.03).contains(&mean), "{mean}");
        let bad = EnvConfig {
            kind: EnvKind::Pareto(ParetoParams {
                shape: 2.0,
                ..ParetoParams::default()
            }),
            ..cfg
        };
        assert!(stream(&bad).is_err());
    }

    #[test]
    fn streams_are_deterministic_and_seed_dependent() {
        for cfg in [EnvConfig::eps_greedy(9, 500), EnvConfig::pareto(9, 500)] {
            let a: Vec<_> = stream(&cfg).unwrap().collect();
            let b: Vec<_> = stream(&cfg).unwrap().collect();
            let c: Vec<_> = stream(&cfg.with_seed(10)).unwrap().collect();
            assert_eq!(a.len(), 500);
            assert!(a
                .iter()
                .zip(&b)
                .all(|(x, y)| x.w.to_bits() == y.w.to_bits() && x.r == y.r));
            assert_ne!(a, c);
        }
    }

    #[test]
    fn kind_specific_constructors_check_kind() {
        assert!(eps_greedy_stream(&EnvConfig::pareto(1, 1)).is_err());
        assert!(pareto_stream(&EnvConfig::eps_greedy(1, 1)).is_err());
    }

    #[test]
    fn vacuous_level_audit_mostly_violates() {
        let env = EnvConfig::pareto(0, 300);
        let rate = coverage_audit(&env, Method::Ddrm, 1.0, 20).unwrap();
        assert!(rate >= 0.5, "{rate}");
    }
}
