use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Right-continuous empirical distribution function with uniform weights.
#[derive(Clone, Debug)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    /// Sorts the sample once. NaN values are rejected.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("empirical CDF needs at least one value"));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(invalid("sample contains NaN"));
        }
        values.sort_unstable_by(f64::total_cmp);
        Ok(Self { sorted: values })
    }

    /// Wraps an already sorted sample, checking the ordering.
    pub fn from_sorted(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("empirical CDF needs at least one value"));
        }
        if values.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::InvalidArgument("ecdf input is not sorted ascending".into()));
        }
        Ok(Self { sorted: values })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    /// `#{x_i <= x} / M`.
    pub fn eval(&self, x: f64) -> f64 {
        let k = self.sorted.partition_point(|v| *v <= x);
        k as f64 / self.sorted.len() as f64
    }
}

/// Kolmogorov distance together with where the supremum is attained.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct KsDistance {
    pub distance: f64,
    pub location: f64,
    /// Binomial standard error `sqrt(F(1-F)/M)` at the maximising point.
    pub se: f64,
}

/// Exact `sup_z |F_M(z) - F(z)|` for a continuous CDF `F`:
/// `max_i max(i/M - F(x_(i)), F(x_(i)) - (i-1)/M)`.
pub fn ks_distance<F: Fn(f64) -> f64>(ecdf: &Ecdf, cdf: F) -> KsDistance {
    let m = ecdf.len() as f64;
    let mut best = KsDistance {
        distance: 0.0,
        location: ecdf.sorted[0],
        se: 0.0,
    };
    let mut best_f = 0.5;
    for (i, &x) in ecdf.sorted.iter().enumerate() {
        let f = cdf(x).clamp(0.0, 1.0);
        let up = (i + 1) as f64 / m - f;
        let down = f - i as f64 / m;
        let d = up.max(down);
        if d > best.distance {
            best.distance = d;
            best.location = x;
            best_f = f;
        }
    }
    best.se = (best_f * (1.0 - best_f) / m).sqrt();
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::{DriftSpec, TargetLaw};
    use rand::Rng;

    fn normal() -> TargetLaw {
        TargetLaw::build(DriftSpec::Linear { c: 1.0 }, (f64::NEG_INFINITY, f64::INFINITY), 0.0).unwrap()
    }

    #[test]
    fn quantile_midpoints_give_half_over_m() {
        let t = normal();
        for m in [1usize, 10, 1000] {
            let xs: Vec<f64> = (1..=m).map(|i| t.quantile((i as f64 - 0.5) / m as f64)).collect();
            let e = Ecdf::from_sorted(xs).unwrap();
            let d = ks_distance(&e, |x| t.cdf(x)).distance;
            assert!((d - 0.5 / m as f64).abs() < 1e-8, "m={m}: {d}");
        }
    }

    #[test]
    fn single_median_sample() {
        let e = Ecdf::new(vec![0.0]).unwrap();
        let d = ks_distance(&e, |x| normal().cdf(x));
        assert!((d.distance - 0.5).abs() < 1e-14);
    }

    #[test]
    fn hundred_thousand_quantile_draws() {
        let t = normal();
        let m = 100_000;
        let xs: Vec<f64> = (1..=m).map(|i| t.quantile((i as f64 - 0.5) / m as f64)).collect();
        let d = ks_distance(&Ecdf::from_sorted(xs).unwrap(), |x| t.cdf(x)).distance;
        assert!((d - 5e-6).abs() < 1e-8);
    }

    #[test]
    fn unsorted_input_is_rejected() {
        assert!(Ecdf::from_sorted(vec![1.0, 0.0]).is_err());
        assert!(Ecdf::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn eval_is_right_continuous() {
        let e = Ecdf::new(vec![2.0, 1.0, 1.0, 3.0]).unwrap();
        assert_eq!(e.eval(0.999), 0.0);
        assert_eq!(e.eval(1.0), 0.5);
        assert_eq!(e.eval(2.5), 0.75);
        assert_eq!(e.eval(3.0), 1.0);
    }

    #[test]
    fn dkw_band_holds_for_exact_samples() {
        // P(D > eps) <= 2 exp(-2 M eps^2) = 0.001 at the chosen eps.
        let m = 400usize;
        let eps = ((2.0f64 / 0.001).ln() / (2.0 * m as f64)).sqrt();
        let mut exceed = 0;
        for run in 0..1000u64 {
            let mut rng = crate::derive_stream(77, 0, run);
            let xs: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
            let d = ks_distance(&Ecdf::new(xs).unwrap(), |x: f64| x.clamp(0.0, 1.0)).distance;
            if d > eps {
                exceed += 1;
            }
        }
        assert!(exceed <= 1, "{exceed} runs outside the DKW band");
    }
}
