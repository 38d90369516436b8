use cantor_pca::meanfield::{self, DEFAULT_ROOT_TOL};
use cantor_pca::rational::{IntervalSet, Rat};
use proptest::prelude::*;
use statrs::distribution::{Binomial, DiscreteCDF};

fn alpha(eps: f64) -> f64 {
    0.5 * (1.0 - (1.0 - 2.0 * eps / (1.0 - eps)).sqrt())
}

/// `P(Bin(2n+1, x) >= n+1)` through statrs.
fn g_oracle(n: u32, x: f64) -> f64 {
    let b = Binomial::new(x, 2 * n as u64 + 1).unwrap();
    1.0 - b.cdf(n as u64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn half_is_always_a_root(n in 0u32..20, eps in 0.0f64..=1.0) {
        prop_assume!(!(n == 0 && eps == 0.0));
        prop_assert!(meanfield::eval_p(n, eps, 0.5).unwrap().abs() < 1e-14);
    }

    #[test]
    fn p_is_antisymmetric(n in 0u32..20, eps in 0.0f64..=1.0, x in 0.0f64..=1.0) {
        let a = meanfield::eval_p(n, eps, x).unwrap();
        let b = meanfield::eval_p(n, eps, 1.0 - x).unwrap();
        prop_assert!((a + b).abs() < 1e-12);
    }

    #[test]
    fn g_matches_the_binomial_tail(n in 0u32..30, x in 0.001f64..0.999) {
        let got = meanfield::eval_g(n, x).unwrap();
        prop_assert!((got - g_oracle(n, x)).abs() < 1e-11);
    }

    #[test]
    fn g_is_increasing(n in 0u32..30, x in 0.0f64..0.99, dx in 0.001f64..0.01) {
        prop_assert!(meanfield::eval_g(n, x + dx).unwrap() >= meanfield::eval_g(n, x).unwrap());
    }

    #[test]
    fn roots_match_the_closed_form(eps in 0.0f64..0.333) {
        let set = meanfield::find_fixed_points(1, eps, DEFAULT_ROOT_TOL).unwrap();
        let lower = set.lower().unwrap();
        prop_assert!((lower - alpha(eps)).abs() < 1e-9, "{lower} vs {}", alpha(eps));
        prop_assert!((meanfield::alpha_closed_form(eps).unwrap() - alpha(eps)).abs() < 1e-12);
    }

    #[test]
    fn roots_come_in_mirrored_pairs(n in 1u32..12, eps in 0.0f64..=1.0) {
        let v = meanfield::find_fixed_points(n, eps, DEFAULT_ROOT_TOL).unwrap().values();
        for (a, b) in v.iter().zip(v.iter().rev()) {
            prop_assert!((a + b - 1.0).abs() < 1e-9);
        }
        for x in &v {
            prop_assert!(meanfield::eval_p(n, eps, *x).unwrap().abs() < 1e-8);
        }
    }

    /// `[0, α_ε]` maps into itself under `h`.
    #[test]
    fn lower_interval_is_stable(n in 1u32..8, frac in 0.0f64..0.9, x in 0.0f64..=1.0) {
        let l = meanfield::mf_threshold(n, 1e-9).unwrap();
        let eps = frac * l;
        let a = meanfield::lower_fixed_point(n, eps).unwrap().unwrap();
        let y = x * a;
        prop_assert!(meanfield::eval_h(n, eps, y).unwrap() <= a + 1e-12);
    }

    #[test]
    fn gate_probability_complements(m in 1u64..400, q in 0.0f64..=1.0, a in 0i64..10, b in 0i64..10) {
        let (lo, hi) = (a.min(b), a.max(b));
        let set = IntervalSet::closed(Rat::new(lo, 10).unwrap(), Rat::new(hi, 10).unwrap());
        let two = Rat::from_integer(2);
        let comp = set.complement_within(&Rat::zero(), &two);
        let p = meanfield::gate_probability(m, q, &set).unwrap();
        let c = meanfield::gate_probability(m, q, &comp).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&p));
        prop_assert!((p + c - 1.0).abs() < 1e-10);
    }

    #[test]
    fn layered_recursion_with_silent_gate_is_plain(n in 0u32..6, eps in 0.0f64..=1.0, a0 in 0.0f64..=1.0) {
        let a = meanfield::layered_recursion(n, eps, 0.0, a0, 6).unwrap();
        let b = meanfield::marginal_recursion(n, eps, a0, 6).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn thresholds_increase_toward_one() {
    let mut prev = 0.0;
    for n in 1..=15 {
        let l = meanfield::mf_threshold(n, 1e-7).unwrap();
        assert!(l > prev && l < 1.0);
        prev = l;
    }
}

#[test]
fn surely_firing_gate_pins_half_eps() {
    let seq = meanfield::layered_recursion(1, 0.3, 1.0, 0.9, 4).unwrap();
    for v in &seq.values[1..] {
        assert!((v - 0.15).abs() < 1e-15);
    }
}

#[test]
fn domain_errors() {
    assert!(meanfield::alpha_closed_form(0.4).is_err());
    assert!(meanfield::alpha_closed_form(1.0).is_err());
    assert!(meanfield::alpha_closed_form(-0.1).is_err());
    assert!(meanfield::find_fixed_points(0, 0.0, 1e-10).is_err());
    assert!(meanfield::eval_h(1, 1.5, 0.2).is_err());
    assert!(meanfield::gate_probability(0, 0.5, &IntervalSet::unit()).is_err());
    assert!(matches!(
        meanfield::gate_probability(1 << 45, 0.5, &IntervalSet::unit()),
        Err(cantor_pca::Error::Resource { .. })
    ));
}
