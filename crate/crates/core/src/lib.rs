//! Anytime-valid lower confidence sequences for heavy-tailed non-negative streams.
//!
//! The crate tracks a running sum of observations together with a compact
//! sketch of their deviations from a predictable forecast, and inverts a
//! discrete mixture of test supermartingales into a lower bound on the
//! running average of conditional means. The bound stays valid when the
//! observations have infinite variance. An empirical Bernstein boundary is
//! included as a baseline.
//!
//! ```
//! use heavycs::{CsConfig, CsState};
//!
//! let mut cs = CsState::new(CsConfig::default()).unwrap();
//! for i in 0..500 {
//!     cs.observe(if i % 10 == 0 { 4.0 } else { 0.3 }).unwrap();
//! }
//! let bounds = cs.query().unwrap();
//! assert!(bounds.ddrm.unwrap().raw > 0.0);
//! ```

pub mod accumulators;
pub mod boundaries;
pub mod confseq;
pub mod error;
pub mod simulator;
pub mod special;

pub use accumulators::{EbAccumulator, GridAccumulator, History};
pub use boundaries::{DiscreteMixture, HeavyParams, LogWealth, WealthCurve};
pub use confseq::{
    default_cadence, Bounds, CsConfig, CsState, Interval, Lower, Method, OffPolicyBounds,
    OffPolicyCs, PredictorState, Strategy,
};
pub use error::{Error, Result};
pub use simulator::{EnvConfig, EnvKind, SimRecord};
