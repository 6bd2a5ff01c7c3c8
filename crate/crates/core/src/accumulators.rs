//! Streaming sufficient statistics for the log-wealth penalty.
//!
//! The heavy supermartingale's log wealth at bet `λ` is `λ y − Σ_s g(λ, d_s)`
//! with `d_s = x_s − x̂_s` and `g(λ, x) = λx − ln(1 + λx)`. Evaluating that sum
//! for arbitrary `λ` needs the whole history. [`GridAccumulator`] instead keeps
//! an upper bound `g̃ ≥ g` that is piecewise quadratic on `(−1, 1]` and
//! interpolates `g` on an exponential grid `k^n` above 1, so the sum for any
//! `λ` is recovered from two scalars plus two numbers per populated grid cell.
//! The number of cells grows like `log_k(max |d|)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::special::x_minus_log1p;

/// Snapshot format version written by [`GridAccumulator::to_json`].
pub const SNAPSHOT_VERSION: u32 = 1;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new(value: f64) -> Self {
        Self {
            sum: value,
            comp: 0.0,
        }
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl PartialEq for CompensatedSum {
    fn eq(&self, other: &Self) -> bool {
        self.value() == other.value()
    }
}

/// `g(λ, x) = λx − ln(1 + λx)`.
pub fn g(lambda: f64, x: f64) -> Result<f64> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(domain("g requires a finite lambda >= 0", lambda));
    }
    if !x.is_finite() || 1.0 + lambda * x <= 0.0 {
        return Err(domain("g requires 1 + lambda * x > 0", x));
    }
    Ok(g_unchecked(lambda, x))
}

#[inline]
pub(crate) fn g_unchecked(lambda: f64, x: f64) -> f64 {
    x_minus_log1p(lambda * x)
}

/// `k^n` as used by both the update and evaluation paths.
#[inline]
fn grid_point(k: f64, n: i32) -> f64 {
    k.powi(n)
}

/// `⌊log_k d⌋` for `d > 1`, corrected by direct comparison against [`grid_point`]
/// so that `d = k^n` lands in cell `n`.
fn grid_index(k: f64, d: f64) -> i32 {
    let mut n = ((d.ln() / k.ln()).floor() as i32).max(0);
    while n > 0 && grid_point(k, n) > d {
        n -= 1;
    }
    while grid_point(k, n + 1) <= d {
        n += 1;
    }
    n
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_nan() || !(0.0..1.0).contains(&lambda) {
        return Err(domain("lambda must lie in [0, 1)", lambda));
    }
    Ok(())
}

fn check_grid_base(k: f64) -> Result<()> {
    if k.is_nan() || k <= 1.0 || !k.is_finite() {
        return Err(domain("grid base k must be > 1", k));
    }
    Ok(())
}

/// Piecewise upper bound `g̃(λ, x; k) ≥ g(λ, x)`.
pub fn g_tilde(lambda: f64, x: f64, k: f64) -> Result<f64> {
    check_lambda(lambda)?;
    check_grid_base(k)?;
    if x.is_nan() || x <= -1.0 || x.is_infinite() {
        return Err(domain("g_tilde requires x > -1", x));
    }
    Ok(g_tilde_unchecked(lambda, x, k))
}

/// Relative inflation of the interpolated part of `g̃`, covering the rounding
/// error of the interpolation so that `g̃ ≥ g` also holds in floating point.
const ROUNDING_GUARD: f64 = 1.0 + 16.0 * f64::EPSILON;

fn g_tilde_unchecked(lambda: f64, x: f64, k: f64) -> f64 {
    let l2 = lambda * lambda;
    if x <= 0.0 {
        l2 / (2.0 * (1.0 - lambda)) * x * x
    } else if x <= 1.0 {
        0.5 * l2 * x * x
    } else {
        let n = grid_index(k, x);
        let x1 = grid_point(k, n);
        let x2 = grid_point(k, n + 1);
        let alpha = (x2 - x) / (x2 - x1);
        let m = l2 / (1.0 + lambda * x2).powi(2);
        let width = x2 - x1;
        (alpha * g_unchecked(lambda, x1) + (1.0 - alpha) * g_unchecked(lambda, x2)) * ROUNDING_GUARD
            - 0.5 * m * alpha * (1.0 - alpha) * width * width
    }
}

/// Per-cell sufficient statistics for `d > 1`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    /// Interpolation mass placed on grid point `k^n`.
    pub z: f64,
    /// Accumulated `α(1−α)/2` for observations whose left grid point is `k^n`.
    pub y: f64,
}

/// Sublinear sketch of `Σ_s g̃(λ, x_s − x̂_s; k)` plus first-moment sums.
#[derive(Debug, Clone, PartialEq)]
pub struct GridAccumulator {
    k: f64,
    t: u64,
    sum_x: CompensatedSum,
    neg_sq: CompensatedSum,
    unit_sq: CompensatedSum,
    cells: BTreeMap<i32, Cell>,
    max_abs: f64,
}

impl GridAccumulator {
    pub fn new(k: f64) -> Result<Self> {
        check_grid_base(k)?;
        Ok(Self {
            k,
            t: 0,
            sum_x: CompensatedSum::default(),
            neg_sq: CompensatedSum::default(),
            unit_sq: CompensatedSum::default(),
            cells: BTreeMap::new(),
            max_abs: 0.0,
        })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn sum_x(&self) -> f64 {
        self.sum_x.value()
    }

    pub fn neg_sq(&self) -> f64 {
        self.neg_sq.value()
    }

    pub fn unit_sq(&self) -> f64 {
        self.unit_sq.value()
    }

    pub fn max_abs(&self) -> f64 {
        self.max_abs
    }

    pub fn cells(&self) -> impl Iterator<Item = (i32, Cell)> + '_ {
        self.cells.iter().map(|(&n, &c)| (n, c))
    }

    /// Number of distinct grid cells holding state.
    pub fn populated_cells(&self) -> usize {
        self.cells.len()
    }

    /// Count of scalar statistics held: the two quadratic sums plus every
    /// non-zero `z` and `y` entry.
    pub fn state_entries(&self) -> usize {
        2 + self
            .cells
            .values()
            .map(|c| usize::from(c.z != 0.0) + usize::from(c.y != 0.0))
            .sum::<usize>()
    }

    /// Incorporate one observation `x ≥ 0` with its prediction `x_hat ∈ [0, 1]`.
    pub fn update(&mut self, x: f64, x_hat: f64) -> Result<()> {
        validate_observation(x, x_hat)?;
        let d = x - x_hat;
        self.t += 1;
        self.sum_x.add(x);
        self.max_abs = self.max_abs.max(d.abs());
        if d <= 0.0 {
            self.neg_sq.add(d * d);
        } else if d <= 1.0 {
            self.unit_sq.add(d * d);
        } else {
            let n = grid_index(self.k, d);
            let x1 = grid_point(self.k, n);
            let x2 = grid_point(self.k, n + 1);
            let alpha = (x2 - d) / (x2 - x1);
            let lower = self.cells.entry(n).or_default();
            lower.z += alpha;
            lower.y += 0.5 * alpha * (1.0 - alpha);
            self.cells.entry(n + 1).or_default().z += 1.0 - alpha;
        }
        Ok(())
    }

    /// `Σ_s g̃(λ, d_s; k)` reconstructed from the sufficient statistics.
    pub fn sum_g_tilde(&self, lambda: f64) -> Result<f64> {
        check_lambda(lambda)?;
        Ok(self.sum_g_tilde_unchecked(lambda))
    }

    pub(crate) fn sum_g_tilde_unchecked(&self, lambda: f64) -> f64 {
        if lambda == 0.0 {
            return 0.0;
        }
        let l2 = lambda * lambda;
        let mut acc =
            l2 / (2.0 * (1.0 - lambda)) * self.neg_sq.value() + 0.5 * l2 * self.unit_sq.value();
        for (&n, cell) in &self.cells {
            let x1 = grid_point(self.k, n);
            if cell.z != 0.0 {
                acc += cell.z * g_unchecked(lambda, x1) * ROUNDING_GUARD;
            }
            if cell.y != 0.0 {
                let x2 = grid_point(self.k, n + 1);
                let width = x2 - x1;
                acc -= cell.y * l2 / (1.0 + lambda * x2).powi(2) * width * width;
            }
        }
        acc
    }

    /// JSON snapshot `{version, k, t, sum_x, neg_sq, unit_sq, cells, max_abs}`.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.snapshot()).expect("snapshot is plain data")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let snap: GridSnapshot =
            serde_json::from_str(text).map_err(|e| Error::Snapshot(e.to_string()))?;
        Self::from_snapshot(snap)
    }

    fn snapshot(&self) -> GridSnapshot {
        GridSnapshot {
            version: SNAPSHOT_VERSION,
            k: self.k,
            t: self.t,
            sum_x: self.sum_x(),
            neg_sq: self.neg_sq(),
            unit_sq: self.unit_sq(),
            cells: self
                .cells
                .iter()
                .map(|(&n, c)| CellRecord { n, z: c.z, y: c.y })
                .collect(),
            max_abs: self.max_abs,
        }
    }

    fn from_snapshot(snap: GridSnapshot) -> Result<Self> {
        if snap.version != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!(
                "unsupported version {} (expected {SNAPSHOT_VERSION})",
                snap.version
            )));
        }
        check_grid_base(snap.k).map_err(|e| Error::Snapshot(e.to_string()))?;
        let scalars = [snap.sum_x, snap.neg_sq, snap.unit_sq, snap.max_abs];
        if scalars.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Snapshot("negative or non-finite statistic".into()));
        }
        let mut cells = BTreeMap::new();
        let mut prev = None;
        for c in snap.cells {
            if c.n < 0 || prev.is_some_and(|p| p >= c.n) {
                return Err(Error::Snapshot(format!("cell index {} out of order", c.n)));
            }
            if !c.z.is_finite() || !c.y.is_finite() || c.z < 0.0 || c.y < 0.0 {
                return Err(Error::Snapshot(format!("bad statistics in cell {}", c.n)));
            }
            prev = Some(c.n);
            cells.insert(c.n, Cell { z: c.z, y: c.y });
        }
        Ok(Self {
            k: snap.k,
            t: snap.t,
            sum_x: CompensatedSum::new(snap.sum_x),
            neg_sq: CompensatedSum::new(snap.neg_sq),
            unit_sq: CompensatedSum::new(snap.unit_sq),
            cells,
            max_abs: snap.max_abs,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSnapshot {
    version: u32,
    k: f64,
    t: u64,
    sum_x: f64,
    neg_sq: f64,
    unit_sq: f64,
    cells: Vec<CellRecord>,
    max_abs: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CellRecord {
    n: i32,
    z: f64,
    y: f64,
}

pub(crate) fn validate_observation(x: f64, x_hat: f64) -> Result<()> {
    if !x.is_finite() || x < 0.0 {
        return Err(domain("observation must be finite and >= 0", x));
    }
    if x_hat.is_nan() || !(0.0..=1.0).contains(&x_hat) {
        return Err(domain("prediction must lie in [0, 1]", x_hat));
    }
    Ok(())
}

/// Constant-space statistics for the empirical Bernstein supermartingale.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EbAccumulator {
    t: u64,
    sum_x: CompensatedSum,
    sum_sq_dev: CompensatedSum,
}

impl EbAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn update(&mut self, x: f64, x_hat: f64) -> Result<()> {
        validate_observation(x, x_hat)?;
        let d = x - x_hat;
        self.t += 1;
        self.sum_x.add(x);
        self.sum_sq_dev.add(d * d);
        Ok(())
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn sum_x(&self) -> f64 {
        self.sum_x.value()
    }

    /// `Σ (x_s − x̂_s)²`, the intrinsic time of the Bernstein process.
    pub fn sum_sq_dev(&self) -> f64 {
        self.sum_sq_dev.value()
    }
}

/// Raw `(x, x̂)` history. Linear space; used as the reference the sketch is
/// checked against and for exact-`g` wealth on short streams.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    pairs: Vec<(f64, f64)>,
}

impl History {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut h = Self::new();
        for (x, x_hat) in pairs {
            h.push(x, x_hat)?;
        }
        Ok(h)
    }

    pub fn push(&mut self, x: f64, x_hat: f64) -> Result<()> {
        validate_observation(x, x_hat)?;
        self.pairs.push((x, x_hat));
        Ok(())
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn sum_x(&self) -> f64 {
        self.pairs.iter().map(|p| p.0).sum()
    }

    /// Exact `Σ_s g(λ, d_s)`.
    pub fn sum_g(&self, lambda: f64) -> Result<f64> {
        check_lambda(lambda)?;
        Ok(self.sum_g_unchecked(lambda))
    }

    pub(crate) fn sum_g_unchecked(&self, lambda: f64) -> f64 {
        self.pairs
            .iter()
            .map(|&(x, x_hat)| g_unchecked(lambda, x - x_hat))
            .sum()
    }

    /// Brute-force `Σ_s g̃(λ, d_s; k)`.
    pub fn sum_g_tilde(&self, lambda: f64, k: f64) -> Result<f64> {
        check_lambda(lambda)?;
        check_grid_base(k)?;
        Ok(self
            .pairs
            .iter()
            .map(|&(x, x_hat)| g_tilde_unchecked(lambda, x - x_hat, k))
            .sum())
    }

    pub fn sum_sq_dev(&self) -> f64 {
        self.pairs.iter().map(|&(x, xh)| (x - xh) * (x - xh)).sum()
    }
}
