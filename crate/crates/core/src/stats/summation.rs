use serde::{Deserialize, Serialize};

const BLOCK: usize = 32;

/// Pairwise (tree) summation. The split points depend only on the length,
/// so the result is a deterministic function of the ordered input.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Pairwise sum of `f` applied to each element.
pub fn pairwise_sum_by<T, F: Fn(&T) -> f64 + Copy>(xs: &[T], f: F) -> f64 {
    if xs.len() <= BLOCK {
        return xs.iter().map(f).sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum_by(&xs[..mid], f) + pairwise_sum_by(&xs[mid..], f)
}

/// Sample mean and its standard error `sd / sqrt(len)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

pub fn mean_se(xs: &[f64]) -> MeanSe {
    mean_se_by(xs, |x| *x)
}

pub fn mean_se_by<T, F: Fn(&T) -> f64 + Copy>(xs: &[T], f: F) -> MeanSe {
    let n = xs.len();
    if n == 0 {
        return MeanSe {
            mean: f64::NAN,
            se: f64::NAN,
        };
    }
    let mean = pairwise_sum_by(xs, f) / n as f64;
    if n == 1 {
        return MeanSe { mean, se: 0.0 };
    }
    let ss = pairwise_sum_by(xs, |x| {
        let d = f(x) - mean;
        d * d
    });
    let var = ss / (n - 1) as f64;
    MeanSe {
        mean,
        se: (var / n as f64).sqrt(),
    }
}
