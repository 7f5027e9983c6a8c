use rand::Rng;
use steinlab_core::models::*;
use steinlab_core::pair::{exchangeability_check, sample_bound, CondStats, PairModel};
use steinlab_core::{Execution, Result, StreamRng, TargetLaw};

/// `ed2 ≡ 2λ`, `edabs ≡ 0`, `ed ≡ λ g(w)` with `W` uniform on `[-1, 1]`.
struct Degenerate {
    target: TargetLaw,
}

impl PairModel for Degenerate {
    type Config = f64;

    fn name(&self) -> &'static str {
        "degenerate"
    }
    fn params(&self) -> serde_json::Value {
        serde_json::Value::Null
    }
    fn n(&self) -> usize {
        2
    }
    fn lambda(&self) -> f64 {
        0.5
    }
    fn target(&self) -> &TargetLaw {
        &self.target
    }
    fn delta_max(&self) -> Option<f64> {
        Some(0.0)
    }
    fn sample_config(&self, rng: &mut StreamRng) -> f64 {
        2.0 * rng.random::<f64>() - 1.0
    }
    fn statistic(&self, x: &f64) -> f64 {
        *x
    }
    fn cond_stats(&self, x: &f64) -> Result<CondStats> {
        Ok(CondStats {
            w: *x,
            ed: 0.5 * x,
            ed2: 1.0,
            edabs: 0.0,
            ed3: 0.0,
        })
    }
    fn sample_pair(&self, x: &f64, _rng: &mut StreamRng) -> (f64, f64) {
        (*x, *x)
    }
}

/// Delegates to a model but resamples two coordinates per pair.
struct TwoSteps<M>(M);

macro_rules! two_steps {
    ($model:ty, $config:ty) => {
        impl PairModel for TwoSteps<$model> {
            type Config = $config;
            fn name(&self) -> &'static str {
                "two_steps"
            }
            fn params(&self) -> serde_json::Value {
                self.0.params()
            }
            fn n(&self) -> usize {
                self.0.n()
            }
            fn lambda(&self) -> f64 {
                self.0.lambda()
            }
            fn target(&self) -> &TargetLaw {
                self.0.target()
            }
            fn sample_config(&self, rng: &mut StreamRng) -> $config {
                self.0.sample_config(rng)
            }
            fn statistic(&self, x: &$config) -> f64 {
                self.0.statistic(x)
            }
            fn cond_stats(&self, x: &$config) -> Result<CondStats> {
                self.0.cond_stats(x)
            }
            fn sample_pair(&self, x: &$config, rng: &mut StreamRng) -> (f64, f64) {
                self.0.resample_coordinates(x, rng, 2)
            }
        }
    };
}

two_steps!(QuadraticModel, Vec<f64>);
two_steps!(CurieWeissModel, CwConfig);
two_steps!(ColoredGraphModel, Vec<u32>);

const EX: Execution = Execution::Parallel;

fn quadratic(n: usize) -> QuadraticModel {
    QuadraticModel::new(MatrixSpec::Tridiagonal { n }.build().unwrap(), XLaw::Rademacher).unwrap()
}

fn cw(beta: f64, n: usize) -> CurieWeissModel {
    CurieWeissModel::new(BaseMeasure::new(BaseMeasureSpec::TwoPoint).unwrap(), beta, n).unwrap()
}

fn graph(n: usize, c: u32) -> ColoredGraphModel {
    ColoredGraphModel::new(Graph::complete(n).unwrap(), c).unwrap()
}

#[test]
fn degenerate_model_has_zero_rhs() {
    let m = Degenerate {
        target: TargetLaw::normal(1.0).unwrap(),
    };
    let s = sample_bound(&m, 1000, 3, EX).unwrap();
    let b = s.theorem(EX);
    assert_eq!(b.rhs.value, 0.0);
    assert_eq!(b.rhs.se, 0.0);
    assert_eq!(s.third_moment_term().value, 0.0);
    let bd = s.bounded_difference(EX).unwrap();
    assert_eq!(bd.rhs.value, 0.0);
}

#[test]
fn residual_free_models_report_exact_zero() {
    let b = sample_bound(&quadratic(30), 400, 1, EX).unwrap().theorem(EX);
    assert_eq!(b.t3.value, 0.0);
    assert_eq!(b.t3.se, 0.0);
    let b = sample_bound(&graph(12, 3), 400, 1, EX).unwrap().theorem(EX);
    assert_eq!(b.t3.value, 0.0);
}

#[test]
fn terms_are_nonnegative_and_sum() {
    let b = sample_bound(&cw(0.5, 40), 3000, 9, EX).unwrap().theorem(EX);
    for t in [b.t1, b.t2, b.t3, b.rhs] {
        assert!(t.value >= 0.0 && t.se >= 0.0);
    }
    assert!((b.rhs.value - (b.t1.value + b.t2.value + b.t3.value)).abs() <= 1e-15 * b.rhs.value);
    assert!(b.rhs.se > 0.0);
}

#[test]
fn bound_terms_are_reproducible_and_policy_independent() {
    let m = cw(1.0, 64);
    let a = sample_bound(&m, 2000, 11, Execution::Parallel)
        .unwrap()
        .theorem(Execution::Parallel);
    let b = sample_bound(&m, 2000, 11, Execution::Parallel)
        .unwrap()
        .theorem(Execution::Parallel);
    let c = sample_bound(&m, 2000, 11, Execution::Sequential)
        .unwrap()
        .theorem(Execution::Sequential);
    let row = |t: &steinlab_core::BoundTerms| serde_json::to_string(&t.to_row()).unwrap();
    assert_eq!(row(&a), row(&b));
    assert_eq!(row(&a), row(&c));
    let d = sample_bound(&m, 2000, 12, EX).unwrap().theorem(EX);
    assert_ne!(a.rhs.value, d.rhs.value);
}

#[test]
fn doubling_replications_shrinks_se_by_root_two() {
    // ratio se(M)/se(2M) averaged over 10 seeds, expected √2
    let m = quadratic(20);
    let mut ratio = 0.0;
    for seed in 0..10 {
        let a = sample_bound(&m, 2000, seed, EX).unwrap().theorem(EX);
        let b = sample_bound(&m, 4000, seed + 100, EX).unwrap().theorem(EX);
        ratio += a.t2.se / b.t2.se / 10.0;
    }
    let r = ratio / std::f64::consts::SQRT_2;
    assert!(r > 1.0 / 1.6 && r < 1.6, "ratio {ratio}");
}

#[test]
fn bounded_difference_needs_delta() {
    let s = sample_bound(&quadratic(10), 100, 1, EX).unwrap();
    assert!(s.bounded_difference(EX).is_err());
    let m = graph(10, 10);
    let s = sample_bound(&m, 500, 1, EX).unwrap();
    let b = s.bounded_difference(EX).unwrap();
    assert!(b.rhs.value >= 3.0 * m.delta_max().unwrap());
}

#[test]
fn third_moment_term_is_nonnegative() {
    for seed in 0..5 {
        let s = sample_bound(&cw(0.3, 25), 500, seed, EX).unwrap();
        assert!(s.third_moment_term().value >= 0.0);
    }
}

#[test]
fn third_moment_term_matches_two_by_two_enumeration() {
    // a12 = a21 = 1 with Rademacher signs, so W = X1 X2; enumerate the 4
    // configurations and the 2 resample outcomes of each index
    let a = SymmetricMatrix::from_dense(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
    let m = QuadraticModel::new(a, XLaw::Rademacher).unwrap();
    let mut mean_abs = 0.0;
    for x1 in [-1.0f64, 1.0] {
        for x2 in [-1.0f64, 1.0] {
            let w = x1 * x2;
            let mut ed3 = 0.0;
            for i in 0..2 {
                for xp in [-1.0f64, 1.0] {
                    let wp = if i == 0 { xp * x2 } else { x1 * xp };
                    ed3 += 0.25 * (w - wp).powi(3);
                }
            }
            mean_abs += 0.25 * ed3.abs();
        }
    }
    let want = 2.0 * (mean_abs / m.lambda()).sqrt();
    let got = sample_bound(&m, 1000, 5, EX).unwrap().third_moment_term();
    assert!((got.value - want).abs() < 1e-12, "{} vs {want}", got.value);
}

#[test]
fn every_model_passes_exchangeability_at_n20() {
    let m = 100_000;
    let r = exchangeability_check(&quadratic(20), m, 21, EX).unwrap();
    assert!(r.passed(), "{r:#?}");
    let r = exchangeability_check(&cw(0.5, 20), m, 21, EX).unwrap();
    assert!(r.passed(), "{r:#?}");
    let r = exchangeability_check(&cw(1.0, 20), m, 21, EX).unwrap();
    assert!(r.passed(), "{r:#?}");
    // Δw/λ is heavy tailed on K20, so the graph checks use more draws
    let r = exchangeability_check(&graph(20, 4), 10 * m, 21, EX).unwrap();
    assert!(r.passed(), "{r:#?}");
    let r = exchangeability_check(&HeisenbergModel::new(4.0, 20).unwrap(), m, 21, EX).unwrap();
    assert!(r.passed(), "{r:#?}");
}

#[test]
fn symmetric_control_is_identically_zero() {
    let r = exchangeability_check(&cw(0.5, 20), 1000, 2, EX).unwrap();
    let c = r.exchangeability.iter().find(|c| c.name.starts_with("u+v")).unwrap();
    assert_eq!(c.mean, 0.0);
    assert_eq!(c.se, 0.0);
    assert!(c.passed);
}

#[test]
fn two_coordinate_resampling_breaks_the_regression_check() {
    let m = 100_000;
    let r = exchangeability_check(&TwoSteps(quadratic(20)), m, 4, EX).unwrap();
    assert!(!r.regression_holds(), "{r:#?}");
    let r = exchangeability_check(&TwoSteps(cw(0.5, 20)), m, 4, EX).unwrap();
    assert!(!r.regression_holds(), "{r:#?}");
    let r = exchangeability_check(&TwoSteps(graph(20, 4)), m, 4, EX).unwrap();
    assert!(!r.regression_holds(), "{r:#?}");
}

#[test]
fn mean_conditional_drift_is_zero() {
    let checks = [
        exchangeability_check(&quadratic(40), 20_000, 8, EX).unwrap(),
        exchangeability_check(&cw(0.7, 40), 20_000, 8, EX).unwrap(),
        exchangeability_check(&graph(15, 3), 20_000, 8, EX).unwrap(),
        exchangeability_check(&HeisenbergModel::new(5.0, 40).unwrap(), 5_000, 8, EX).unwrap(),
    ];
    for r in checks {
        let e = r.regression.iter().find(|c| c.name == "E[ed]").unwrap();
        assert!(e.passed, "{}: {e:?}", r.model);
    }
}
