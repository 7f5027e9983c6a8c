//! Log-log regression of Kolmogorov distance against `n`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::stream::{derive_stream, lane, purpose};
use crate::error::{invalid, Result};

pub const DEFAULT_BOOTSTRAP: usize = 1000;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RateFit {
    /// `(n, distance)` pairs; one point per per-`n` replication batch.
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope from the OLS residuals.
    pub slope_se: f64,
    /// 95% bootstrap-t interval for the slope.
    pub slope_ci: (f64, f64),
}

struct Ols {
    slope: f64,
    intercept: f64,
    slope_se: f64,
    residuals: Vec<f64>,
}

fn ols(x: &[f64], y: &[f64]) -> Ols {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - intercept - slope * a).collect();
    let ss: f64 = residuals.iter().map(|r| r * r).sum();
    let dof = (x.len() as f64 - 2.0).max(1.0);
    let slope_se = (ss / dof / sxx).sqrt();
    Ols {
        slope,
        intercept,
        slope_se,
        residuals,
    }
}

/// Ordinary least squares of `ln d` on `ln n` with a residual bootstrap-t
/// interval for the slope.
///
/// Each point is one block (the distance of a whole per-`n` batch), so the
/// bootstrap resamples block residuals rather than individual replications.
/// Residuals are inflated by `sqrt(N/(N-2))` before resampling.
pub fn fit_rate(points: &[(f64, f64)], bootstrap: usize, seed: u64) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(invalid("rate fit needs at least 3 points"));
    }
    if let Some(p) = points.iter().find(|p| !(p.1 > 0.0) || !(p.0 > 0.0)) {
        return Err(invalid(format!("rate fit needs positive n and distance, got {p:?}")));
    }
    let x: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    if x.iter().all(|v| *v == x[0]) {
        return Err(invalid("rate fit needs at least two distinct n"));
    }
    let fit = ols(&x, &y);
    let scale = 1e-12 * (1.0 + fit.intercept.abs());
    if fit.residuals.iter().all(|r| r.abs() <= scale) || bootstrap == 0 {
        return Ok(RateFit {
            points: points.to_vec(),
            slope: fit.slope,
            intercept: fit.intercept,
            slope_se: fit.slope_se,
            slope_ci: (fit.slope, fit.slope),
        });
    }
    let n = x.len() as f64;
    let inflate = (n / (n - 2.0).max(1.0)).sqrt();
    let resid: Vec<f64> = fit.residuals.iter().map(|r| r * inflate).collect();
    let mut rng = derive_stream(seed, lane(purpose::BOOTSTRAP, 0xfa7e), 0);
    let mut t_stats = Vec::with_capacity(bootstrap);
    let mut ystar = vec![0.0; x.len()];
    for _ in 0..bootstrap {
        for (k, yk) in ystar.iter_mut().enumerate() {
            *yk = fit.intercept + fit.slope * x[k] + resid[rng.random_range(0..resid.len())];
        }
        let b = ols(&x, &ystar);
        if b.slope_se > 0.0 {
            t_stats.push((b.slope - fit.slope) / b.slope_se);
        }
    }
    t_stats.sort_unstable_by(f64::total_cmp);
    let q = |p: f64| -> f64 {
        let pos = p * (t_stats.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        t_stats[lo] + (pos - lo as f64) * (t_stats[hi] - t_stats[lo])
    };
    let ci = if t_stats.len() < 2 {
        (fit.slope, fit.slope)
    } else {
        (fit.slope - q(0.975) * fit.slope_se, fit.slope - q(0.025) * fit.slope_se)
    };
    Ok(RateFit {
        points: points.to_vec(),
        slope: fit.slope,
        intercept: fit.intercept,
        slope_se: fit.slope_se,
        slope_ci: ci,
    })
}
