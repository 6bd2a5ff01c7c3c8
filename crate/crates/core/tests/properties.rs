use proptest::prelude::*;

use heavycs::accumulators::{g, g_tilde};
use heavycs::boundaries::{
    ddrm_boundary, eb_log_wealth, heavy_log_wealth, quadrature_boundary, DiscreteMixture,
    HeavyParams, WealthCurve,
};
use heavycs::special::{lambda_cap, q_growth_constants};
use heavycs::{CsConfig, CsState, GridAccumulator, History, OffPolicyCs, PredictorState};

/// Non-negative observations mixing a bounded part with a heavy tail.
fn observation() -> impl Strategy<Value = f64> {
    prop_oneof![
        3 => 0.0..1.0f64,
        1 => Just(0.0),
        1 => (1e-9..1.0f64).prop_map(|u| u.powf(-1.0 / 1.3) - 1.0),
        1 => (0.0..9.0f64).prop_map(|e| 10f64.powf(e)),
    ]
}

fn stream_with_predictions(max_len: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec(observation(), 0..max_len).prop_map(|xs| {
        let mut p = PredictorState::default();
        xs.into_iter()
            .map(|x| {
                let h = p.predict();
                p.observe(x);
                (x, h)
            })
            .collect()
    })
}

fn bet() -> impl Strategy<Value = f64> {
    0.0..lambda_cap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn g_tilde_dominates_g(lambda in 0.0..0.999f64, x in -0.999_999..1e7f64, k in 1.01..5.0f64) {
        prop_assert!(g_tilde(lambda, x, k).unwrap() >= g(lambda, x).unwrap());
    }

    #[test]
    fn g_tilde_dominates_g_on_grid_points(lambda in 0.0..0.999f64, n in 0i32..60, k in 1.01..5.0f64, nudge in -1i64..=1) {
        let x = f64::from_bits((k.powi(n).to_bits() as i64 + nudge) as u64);
        prop_assume!(x > -1.0);
        prop_assert!(g_tilde(lambda, x, k).unwrap() >= g(lambda, x).unwrap());
    }

    #[test]
    fn g_tilde_error_is_cubic_near_zero(x in -0.999..1.0f64, k in 1.1..3.0f64) {
        for &lambda in &[1e-1, 1e-2, 1e-3] {
            let gap = g_tilde(lambda, x, k).unwrap() - g(lambda, x).unwrap();
            prop_assert!(gap / (lambda * lambda * lambda) <= 1.0, "lambda={lambda} ratio={}", gap / lambda.powi(3));
        }
    }

    #[test]
    fn sketch_equals_brute_force(pairs in stream_with_predictions(300), lambda in bet(), k in 1.1..3.0f64) {
        let mut acc = GridAccumulator::new(k).unwrap();
        for &(x, h) in &pairs {
            acc.update(x, h).unwrap();
        }
        let h = History::from_pairs(pairs).unwrap();
        let sketch = acc.sum_g_tilde(lambda).unwrap();
        let brute = h.sum_g_tilde(lambda, k).unwrap();
        prop_assert!((sketch - brute).abs() <= 1e-9 * brute.abs().max(1e-300), "{sketch} vs {brute}");
    }

    #[test]
    fn snapshot_round_trips(pairs in stream_with_predictions(400), k in 1.1..3.0f64) {
        let mut acc = GridAccumulator::new(k).unwrap();
        for &(x, h) in &pairs {
            acc.update(x, h).unwrap();
        }
        let back = GridAccumulator::from_json(&acc.to_json()).unwrap();
        prop_assert_eq!(&back, &acc);
        prop_assert_eq!(back.to_json(), acc.to_json());
    }

    #[test]
    fn heavy_wealth_dominates_eb(pairs in stream_with_predictions(100), lambda in 0.0..0.84f64, y in -50.0..50.0f64) {
        let h = History::from_pairs(pairs).unwrap();
        prop_assert!(heavy_log_wealth(&h, lambda, y).unwrap() >= eb_log_wealth(&h, lambda, y).unwrap());
    }

    #[test]
    fn truncation_certificate_brackets_long_sum(pairs in stream_with_predictions(200), y in -20.0..200.0f64) {
        let mut acc = GridAccumulator::new(1.5).unwrap();
        for &(x, h) in &pairs {
            acc.update(x, h).unwrap();
        }
        let mixture = DiscreteMixture::ddrm(&HeavyParams::default()).unwrap();
        let mut curve = WealthCurve::new(mixture, &acc);
        let short = curve.log_wealth(y).unwrap();
        let long = curve.log_wealth_with_terms(y, 10_000).unwrap();
        prop_assert!(short.certified);
        prop_assert!(long.value() >= short.value() * (1.0 - 1e-12));
        prop_assert!(long.value() <= (short.value() + short.error_bound()) * (1.0 + 1e-12));
    }

    #[test]
    fn boundaries_are_monotone_in_alpha(pairs in stream_with_predictions(150)) {
        let mut acc = GridAccumulator::new(1.5).unwrap();
        for &(x, h) in &pairs {
            acc.update(x, h).unwrap();
        }
        let p = HeavyParams::default();
        let b05 = ddrm_boundary(&acc, &p).unwrap();
        let b01 = ddrm_boundary(&acc, &p.with_alpha(0.01)).unwrap();
        prop_assert!(b01 > b05);
    }

    #[test]
    fn sketched_boundary_is_conservative(pairs in stream_with_predictions(40)) {
        let p = HeavyParams::default();
        let mut acc = GridAccumulator::new(p.k).unwrap();
        for &(x, h) in &pairs {
            acc.update(x, h).unwrap();
        }
        let h = History::from_pairs(pairs).unwrap();
        let mixture = DiscreteMixture::ddrm(&p).unwrap();
        let sketched = WealthCurve::new(mixture, &acc).boundary(p.alpha, None).unwrap();
        let exact = WealthCurve::new(mixture, &h).boundary(p.alpha, None).unwrap();
        let tol = 1e-8 * (h.len() as f64).max(1.0);
        prop_assert!(sketched >= exact - tol, "{sketched} < {exact}");
    }

    #[test]
    fn running_lower_never_decreases(xs in prop::collection::vec(observation(), 1..200)) {
        let mut cs = CsState::new(CsConfig::default()).unwrap();
        let mut prev = 0.0;
        for x in xs {
            let b = cs.update(x).unwrap();
            let d = b.ddrm.unwrap();
            prop_assert!(d.running >= prev && d.running >= d.raw);
            prop_assert!((0.0..=1.0).contains(&d.running));
            prev = d.running;
        }
    }

    #[test]
    fn predictions_ignore_the_future(xs in prop::collection::vec(observation(), 2..60), cut in 0usize..60, seed in any::<u64>()) {
        let cut = cut % xs.len();
        let mut shuffled = xs.clone();
        // permute only the observations at or after the cut
        let tail = &mut shuffled[cut..];
        let n = tail.len();
        for i in (1..n).rev() {
            let j = (seed.wrapping_mul(6364136223846793005).wrapping_add(i as u64) % (i as u64 + 1)) as usize;
            tail.swap(i, j);
        }
        let replay = |data: &[f64]| {
            let mut cs = CsState::new(CsConfig::default()).unwrap();
            for &x in &data[..cut] {
                cs.observe(x).unwrap();
            }
            cs.next_prediction()
        };
        prop_assert_eq!(replay(&xs).to_bits(), replay(&shuffled).to_bits());
    }

    #[test]
    fn offpolicy_interval_is_ordered(steps in prop::collection::vec((observation(), 0.0..=1.0f64), 1..150), split in any::<bool>()) {
        let mut cs = OffPolicyCs::new(CsConfig::default(), split).unwrap();
        for (w, r) in steps {
            let b = cs.update(w, r).unwrap();
            for iv in [b.ddrm.unwrap(), b.eb.unwrap()] {
                prop_assert!(0.0 <= iv.lower && iv.lower <= iv.upper && iv.upper <= 1.0, "{iv:?}");
            }
        }
    }

    #[test]
    fn q_growth_bound_positive_side(q in 1.0001..=2.0f64, lambda in bet(), log_x in -6.0..6.0f64) {
        let x = 10f64.powf(log_x);
        let c = q_growth_constants(q).unwrap().c_star;
        let rhs = lambda.powf(q) * (x * x).min(c * x.powf(q));
        prop_assert!(g(lambda, x).unwrap() <= rhs * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn q_growth_bound_negative_side(q in 1.0001..=2.0f64, lambda in 0.0..0.683_802f64, x in -0.999_999..=0.0f64) {
        let rhs = lambda.powf(q) * x * x;
        prop_assert!(g(lambda, x).unwrap() <= rhs * (1.0 + 1e-12) + 1e-300);
    }
}

/// On `x ≤ 0` the growth bound `g(λ, x) ≤ λ^q x²` only holds while
/// `−λ − ln(1 − λ) ≤ λ²`, i.e. for `λ` up to about 0.68380; the full bet cap
/// `1 + W0(−e^{−2})` is where `g(λ, −1) = 1` instead.
#[test]
fn q_growth_bound_fails_near_cap_for_negative_deviations() {
    let lambda = lambda_cap();
    let x = -1.0 + 1e-12;
    let lhs = g(lambda, x).unwrap();
    let rhs = lambda.powf(2.0) * x * x;
    assert!((lhs - 1.0).abs() < 1e-6, "{lhs}");
    assert!((rhs - 0.708).abs() < 1e-3, "{rhs}");
    assert!(lhs > rhs);
    let edge: f64 = 0.683_802_623_752_020_7;
    let at_edge = -edge - (-edge).ln_1p();
    assert!((at_edge - edge * edge).abs() < 1e-12);
}

#[test]
fn quadrature_versus_single_order_discretization() {
    let p = HeavyParams::default();
    let mut worst = f64::INFINITY;
    for s in 0..20u64 {
        let len = 1 + (s % 6) as usize;
        let pairs: Vec<(f64, f64)> = (0..len)
            .map(|i| {
                let u = ((s * 31 + i as u64 * 17) % 97) as f64 / 97.0;
                let x = if i % 3 == 0 { 4.0 * u } else { u };
                (x, 0.5)
            })
            .collect();
        let h = History::from_pairs(pairs).unwrap();
        for &q in &[1.5, 2.0] {
            let quad = quadrature_boundary(&h, q, &p).unwrap();
            let disc = WealthCurve::new(DiscreteMixture::single_q(&p, q).unwrap(), &h)
                .boundary(p.alpha, None)
                .unwrap();
            worst = worst.min((disc - quad) / quad);
        }
    }
    // discretization slack measured on these histories
    assert!(worst >= -0.05, "{worst}");
}
