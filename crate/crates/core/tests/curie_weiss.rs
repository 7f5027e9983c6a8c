use proptest::prelude::*;
use steinlab_core::models::{BaseMeasure, BaseMeasureSpec, CurieWeissModel, CwConfig, DensityFamily};
use steinlab_core::pair::{exchangeability_check, PairModel};
use steinlab_core::stats::{derive_stream, mean_se};
use steinlab_core::Execution;

fn two_point() -> BaseMeasure {
    BaseMeasure::new(BaseMeasureSpec::TwoPoint).unwrap()
}

fn model(beta: f64, n: usize) -> CurieWeissModel {
    CurieWeissModel::new(two_point(), beta, n).unwrap()
}

fn ln_choose(n: usize, k: usize) -> f64 {
    let lf = |m: usize| (1..=m).map(|i| (i as f64).ln()).sum::<f64>();
    lf(n) - lf(k) - lf(n - k)
}

/// Exact law of the number of +1 spins: weights `C(n,j) 2^-n e^{βS²/2n}`,
/// returned normalized along with the log of their total.
fn plus_count_law(beta: f64, n: usize) -> (Vec<f64>, f64) {
    let nf = n as f64;
    let ln_w: Vec<f64> = (0..=n)
        .map(|j| {
            let s = 2.0 * j as f64 - nf;
            ln_choose(n, j) - nf * 2f64.ln() + beta * s * s / (2.0 * nf)
        })
        .collect();
    let top = ln_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = ln_w.iter().map(|l| (l - top).exp()).sum();
    let p = ln_w.iter().map(|l| (l - top).exp() / total).collect();
    (p, top + total.ln())
}

/// Counts in the model's atom order for `plus` spins equal to +1.
fn counts(m: &CurieWeissModel, plus: usize) -> CwConfig {
    let n = m.n();
    let atoms = m.rho().atoms();
    CwConfig::Counts(
        atoms
            .iter()
            .map(|&(x, _)| if x > 0.0 { plus as u32 } else { (n - plus) as u32 })
            .collect(),
    )
}

#[test]
fn sampler_matches_enumeration_at_n8() {
    let (n, beta) = (8, 0.5);
    let m = model(beta, n);
    let (p, _) = plus_count_law(beta, n);
    let reps = 1_000_000u64;
    let mut hist = vec![0u64; n + 1];
    for r in 0..reps {
        let mut rng = derive_stream(17, 0, r);
        let s = m.magnetization(&m.sample_config(&mut rng));
        hist[((s + n as f64) / 2.0).round() as usize] += 1;
    }
    let chi2: f64 = hist
        .iter()
        .zip(&p)
        .map(|(&o, &q)| {
            let e = q * reps as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    // upper 0.001 point of chi-square with 8 degrees of freedom
    assert!(chi2 < 26.124, "chi2 = {chi2}");
    let tv: f64 = hist
        .iter()
        .zip(&p)
        .map(|(&o, &q)| (o as f64 / reps as f64 - q).abs())
        .sum::<f64>()
        / 2.0;
    assert!(tv <= 4.0 * ((n + 1) as f64 / reps as f64).sqrt());
}

#[test]
fn kernel_matches_enumeration_at_n8() {
    // conditionals from ratios of the joint weight e^{βS²/(2n)}
    let (n, beta) = (8usize, 0.5);
    let m = model(beta, n);
    let h = m.scale();
    for code in 0..256u32 {
        let x: Vec<f64> = (0..n).map(|i| if code >> i & 1 == 1 { 1.0 } else { -1.0 }).collect();
        let s: f64 = x.iter().sum();
        let mut mom = [0.0; 4];
        for i in 0..n {
            let rest = s - x[i];
            let wt = |y: f64| (beta * (rest + y).powi(2) / (2.0 * n as f64)).exp();
            let z = wt(1.0) + wt(-1.0);
            for y in [-1.0, 1.0] {
                let p = wt(y) / z / n as f64;
                let d = h * (x[i] - y);
                mom[0] += p * d;
                mom[1] += p * d * d;
                mom[2] += p * d * d.abs();
                mom[3] += p * d * d * d;
            }
        }
        let plus = x.iter().filter(|&&v| v > 0.0).count();
        let cs = m.cond_stats(&counts(&m, plus)).unwrap();
        assert!((cs.w - h * s).abs() < 1e-14);
        for (got, want) in [cs.ed, cs.ed2, cs.edabs, cs.ed3].into_iter().zip(mom) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }
}

#[test]
fn normalizer_matches_enumeration() {
    for beta in [0.3, 0.8, 1.0] {
        for n in [2usize, 5, 10] {
            let (_, ln_z) = plus_count_law(beta, n);
            let got = model(beta, n).log_partition_ratio();
            assert!(
                (got - ln_z).abs() < 1e-6 * ln_z.abs().max(1.0),
                "beta={beta} n={n}: {got} vs {ln_z}"
            );
        }
    }
}

#[test]
fn tanh_identity_for_every_rest() {
    for (beta, n) in [(0.5, 9usize), (1.0, 30)] {
        let m = model(beta, n);
        for j in 0..n {
            let rest = 2.0 * j as f64 - (n - 1) as f64;
            let want = (beta * rest / n as f64).tanh();
            assert!((m.conditional_mean(rest) - want).abs() < 1e-15);
        }
        assert_eq!(m.conditional_mean(0.0), 0.0);
    }
}

#[test]
fn targets_follow_the_regime() {
    let m = model(0.5, 100);
    assert!(m.k().is_none());
    assert!((m.target().moment(2) - 2.0).abs() < 1e-10);
    let m = model(1.0, 100);
    assert_eq!(m.k(), Some(2));
    assert!((m.c2().unwrap() - 1.0 / 12.0).abs() < 1e-9);
    assert!((m.target().cdf(0.0) - 0.5).abs() < 1e-14);
    assert!((m.lambda() - 100f64.powf(-1.5)).abs() < 1e-18);
    assert!((m.scale() - 100f64.powf(-0.75)).abs() < 1e-15);
}

#[test]
fn critical_variance_approaches_the_quartic_law() {
    let target = model(1.0, 16).target().moment(2);
    let var = |n: usize| {
        let (p, _) = plus_count_law(1.0, n);
        let h = (n as f64).powf(-0.75);
        p.iter()
            .enumerate()
            .map(|(j, q)| q * (h * (2.0 * j as f64 - n as f64)).powi(2))
            .sum::<f64>()
    };
    let gaps: Vec<f64> = [16, 64, 256, 1024, 4096]
        .iter()
        .map(|&n| (var(n) - target).abs())
        .collect();
    assert!(gaps.windows(2).all(|g| g[1] < g[0]), "{gaps:?}");
    assert!(gaps[4] < 0.05 * target);

    // and the sampler reproduces the exact variance at n = 256
    let m = model(1.0, 256);
    let mut rng = derive_stream(3, 0, 0);
    let sq: Vec<f64> = (0..200_000)
        .map(|_| m.statistic(&m.sample_config(&mut rng)).powi(2))
        .collect();
    let s = mean_se(&sq);
    assert!((s.mean - var(256)).abs() < 4.0 * s.se, "{} vs {}", s.mean, var(256));
}

#[test]
fn variance_identity_improves_with_n() {
    // exact mean of ed2/(2λ) under the Gibbs law
    for beta in [0.5, 1.0] {
        let gap = |n: usize| {
            let m = model(beta, n);
            let (p, _) = plus_count_law(beta, n);
            let mean: f64 = p
                .iter()
                .enumerate()
                .filter(|(_, q)| **q > 1e-300)
                .map(|(j, q)| q * m.cond_stats(&counts(&m, j)).unwrap().ed2 / (2.0 * m.lambda()))
                .sum();
            (mean - 1.0).abs()
        };
        let gaps: Vec<f64> = [10, 40, 160, 640].iter().map(|&n| gap(n)).collect();
        assert!(gaps.windows(2).all(|g| g[1] < g[0]), "beta={beta}: {gaps:?}");
    }
}

#[test]
fn continuous_measures_pass_the_pair_diagnostics() {
    for spec in [
        BaseMeasureSpec::Density(DensityFamily::Uniform),
        BaseMeasureSpec::Density(DensityFamily::SymmetricBeta { alpha: 2.0 }),
        BaseMeasureSpec::Atoms(vec![
            [-1.5f64.sqrt(), 1.0 / 3.0],
            [0.0, 1.0 / 3.0],
            [1.5f64.sqrt(), 1.0 / 3.0],
        ]),
    ] {
        let m = CurieWeissModel::new(BaseMeasure::new(spec.clone()).unwrap(), 0.6, 15).unwrap();
        let r = exchangeability_check(&m, 20_000, 5, Execution::Parallel).unwrap();
        assert!(r.passed(), "{spec:?}: {r:#?}");
    }
}

#[test]
fn uniform_base_measure_is_standardized_and_critical() {
    let rho = BaseMeasure::new(BaseMeasureSpec::Density(DensityFamily::Uniform)).unwrap();
    assert!(rho.moment(1).abs() < 1e-12);
    assert!((rho.moment(2) - 1.0).abs() < 1e-10);
    // fourth cumulant of the standardized uniform is 9/5 − 3 = −6/5
    let m = CurieWeissModel::new(rho, 1.0, 50).unwrap();
    assert_eq!(m.k(), Some(2));
    // numeric differentiation of a quadrature mgf: ~1e-6 relative
    assert!((m.c2().unwrap() / 0.05 - 1.0).abs() < 1e-6, "{:?}", m.c2());
}

#[test]
fn invalid_parameters_are_rejected() {
    assert!(CurieWeissModel::new(two_point(), 1.2, 10).is_err());
    assert!(CurieWeissModel::new(two_point(), 0.0, 10).is_err());
    assert!(CurieWeissModel::new(two_point(), 0.5, 0).is_err());
    assert!(BaseMeasure::new(BaseMeasureSpec::Atoms(vec![[0.0, 0.5], [1.0, 0.5]])).is_err());
    let m = model(0.5, 10);
    assert!(m.cond_stats(&CwConfig::Counts(vec![3, 3])).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_invariants_on_random_counts(n in 1usize..200, beta in 0.05f64..1.0, frac in 0.0f64..1.0) {
        let m = model(beta, n);
        let plus = ((n as f64) * frac).floor() as usize;
        let cs = m.cond_stats(&counts(&m, plus)).unwrap();
        prop_assert!(cs.check().is_ok(), "{:?}", cs);
    }

    #[test]
    fn kernel_invariants_on_continuous_configs(n in 2usize..30, beta in 0.1f64..1.0, seed in any::<u64>()) {
        let rho = BaseMeasure::new(BaseMeasureSpec::Density(DensityFamily::Uniform)).unwrap();
        let m = CurieWeissModel::new(rho, beta, n).unwrap();
        let mut rng = derive_stream(seed, 0, 0);
        let x = m.sample_config(&mut rng);
        let cs = m.cond_stats(&x).unwrap();
        prop_assert!(cs.check().is_ok(), "{:?}", cs);
        if let CwConfig::Values(v) = &x {
            prop_assert!(v.iter().all(|t| t.abs() <= 3f64.sqrt()));
        }
    }
}
