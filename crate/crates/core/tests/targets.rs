use proptest::prelude::*;
use steinlab_core::quadrature::{adaptive, AdaptiveOptions};
use steinlab_core::targets::{check_conditions, uniform_grid, verify_lemma41, Lemma41Options};
use steinlab_core::{DriftSpec, SteinSolution, TargetLaw};

const INF: f64 = f64::INFINITY;

fn monomial(c: f64, k: u32) -> TargetLaw {
    TargetLaw::build(DriftSpec::OddMonomial { c, k }, (-INF, INF), 0.0).unwrap()
}

fn drifts() -> impl Strategy<Value = DriftSpec> {
    prop_oneof![
        (0.2f64..5.0).prop_map(|c| DriftSpec::Linear { c }),
        (0.2f64..3.0, 1u32..4).prop_map(|(c, k)| DriftSpec::OddMonomial { c, k }),
    ]
}

#[test]
fn quartic_normalizer_matches_gamma_closed_form() {
    // ∫ e^{-y⁴/12} dy = 2 Γ(5/4) 12^{1/4}, Γ(5/4) = 0.906402477055477
    let want = 1.0 / (2.0 * 0.906_402_477_055_477 * 12f64.powf(0.25));
    assert!((monomial(1.0 / 3.0, 2).c1() - want).abs() < 1e-12);
}

#[test]
fn normalization_by_independent_quadrature() {
    for (c, k) in [(1.0, 1), (1.0 / 3.0, 2), (0.5, 3), (2.0, 2)] {
        let t = monomial(c, k);
        let (lo, hi) = t.support();
        let opts = AdaptiveOptions::default();
        let mass = adaptive(|y| t.pdf(y), lo, hi, opts).unwrap().value;
        assert!((mass - 1.0).abs() < 1e-10, "c={c} k={k}: {mass}");
    }
}

#[test]
fn normal_stein_value_at_origin() {
    let t = monomial(1.0, 1);
    let (f, _) = SteinSolution::new(&t, 0.0).eval(0.0);
    assert!((f - 0.25 / 0.398_942_280_401_432_7).abs() < 1e-12);
}

#[test]
fn lemma41_on_quartic_grid() {
    let t = monomial(1.0 / 3.0, 2);
    let grid = uniform_grid(-8.0, 8.0, 1e-3);
    for r in verify_lemma41(&t, &[-2.0, -1.0, 0.0, 1.0, 2.0], &grid, &Lemma41Options::default()) {
        assert!(r.passed(), "{:?}", r.failures());
    }
}

#[test]
fn reversed_drift_fails_a1() {
    let r = steinlab_core::targets::check_drift_conditions(DriftSpec::Linear { c: -1.0 }, (-5.0, 5.0), 0.0).unwrap();
    assert!(!r.passed());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn constructed_laws_are_normalized_and_symmetric(spec in drifts()) {
        let t = TargetLaw::build(spec, (-INF, INF), 0.0).unwrap();
        prop_assert!((t.cdf(0.0) - 0.5).abs() < 1e-12);
        prop_assert!((t.pdf(0.0) - t.c1()).abs() < 1e-14 * t.c1());
        let (lo, hi) = t.support();
        prop_assert!(t.cdf(lo) < 1e-15 && t.sf(hi) < 1e-15);
        prop_assert!(check_conditions(&t).passed());
    }

    #[test]
    fn cdf_is_monotone_and_quantile_inverts_it(spec in drifts(), us in prop::collection::vec(1e-6f64..(1.0 - 1e-6), 20)) {
        let t = TargetLaw::build(spec, (-INF, INF), 0.0).unwrap();
        let (lo, hi) = t.support();
        let mut prev = 0.0;
        for w in uniform_grid(lo, hi, (hi - lo) / 500.0) {
            let f = t.cdf(w);
            prop_assert!(f >= prev - 1e-15 && (0.0..=1.0).contains(&f));
            prev = f;
        }
        for u in us {
            prop_assert!((t.cdf(t.quantile(u)) - u).abs() <= 1e-8);
        }
    }

    #[test]
    fn stein_equation_holds_and_matches_differences(spec in drifts(), z in -2.5f64..2.5, ws in prop::collection::vec(-3.0f64..3.0, 16)) {
        let t = TargetLaw::build(spec, (-INF, INF), 0.0).unwrap();
        let s = SteinSolution::new(&t, z);
        let fz = t.cdf(z);
        for w in ws {
            let (f, fp) = s.eval(w);
            let ind = if w <= z { 1.0 } else { 0.0 };
            prop_assert!((fp - t.g(w) * f - (ind - fz)).abs() < 1e-12);
            prop_assert!(f >= 0.0 && f <= 1.0 / t.c1() + 1e-6);
            if (w - z).abs() > 1e-2 {
                let h = 1e-5;
                let fd = (s.eval(w + h).0 - s.eval(w - h).0) / (2.0 * h);
                prop_assert!((fd - fp).abs() < 1e-5 * (1.0 + fp.abs()), "w={w} z={z} fd={fd} fp={fp}");
            }
        }
    }

    #[test]
    fn lemma41_holds_under_the_conditions(spec in drifts(), z in -2.0f64..2.0) {
        let t = TargetLaw::build(spec, (-INF, INF), 0.0).unwrap();
        let grid = uniform_grid(-6.0, 6.0, 1e-2);
        let r = SteinSolution::new(&t, z).verify_lemma41(&grid, &Lemma41Options::default());
        prop_assert!(r.passed(), "{:?}", r.failures());
    }

    #[test]
    fn tabulated_linear_drift_reproduces_the_normal(c in 0.5f64..2.0) {
        let points: Vec<(f64, f64)> = (-40..=40).map(|i| { let w = i as f64 * 0.25; (w, c * w) }).collect();
        let t = TargetLaw::build(DriftSpec::Tabulated { points }, (-INF, INF), 0.0).unwrap();
        let want = (c / (2.0 * std::f64::consts::PI)).sqrt();
        prop_assert!((t.c1() - want).abs() < 1e-9 * want);
    }
}

#[test]
fn far_tail_stein_evaluation_terminates() {
    // G(w) ≈ 1.2e4 here; the tail integral must not chase rounding noise
    let t = monomial(2.6145338646118246, 3);
    let s = SteinSolution::new(&t, 0.49177556820003243);
    let (f, _) = s.eval(-5.338083324340602);
    assert!(f >= 0.0 && f < 1e-3);
}
