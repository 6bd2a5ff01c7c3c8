//! Shared fixtures for the criterion benchmarks.

use heavycs::simulator::stream;
use heavycs::{CsConfig, CsState, EnvConfig, Method};

/// Importance-weighted rewards `w·r` from the Pareto environment.
pub fn pareto_observations(n: u64, seed: u64) -> Vec<f64> {
    stream(&EnvConfig::pareto(seed, n))
        .expect("default pareto environment is valid")
        .map(|r| r.w * r.r)
        .collect()
}

/// A state that has absorbed `xs` under `method` with default parameters.
pub fn warmed_state(method: Method, xs: &[f64]) -> CsState {
    let mut cs = CsState::new(CsConfig {
        method,
        ..CsConfig::default()
    })
    .expect("default configuration is valid");
    for &x in xs {
        cs.observe(x).expect("simulated observations are valid");
    }
    cs
}
