//! Replication sweeps: samples of `W`, Kolmogorov distances to the target
//! and rate fits over an `n` grid.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::exec::{self, Execution};
use crate::pair::PairModel;
use crate::stats::stream::{lane, purpose};
use crate::stats::{derive_stream, fit_rate, ks_distance, Ecdf, RateFit};

/// `m` exact draws of the model statistic; replication `r` uses the stream
/// `(seed, lane(STATISTIC, n), r)`.
pub fn sample_statistics<M: PairModel>(model: &M, m: u64, seed: u64, exec: Execution) -> Vec<f64> {
    let level = lane(purpose::STATISTIC, model.n() as u32);
    exec::map_indexed(exec, m, |r| {
        let mut rng = derive_stream(seed, level, r);
        model.sample_statistic(&mut rng)
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KsPoint {
    pub n: usize,
    pub replications: u64,
    pub ks: f64,
    /// Binomial standard error of the empirical CDF at the maximizing point.
    pub se: f64,
    pub location: f64,
}

/// Kolmogorov distance between `m` draws of `W` and the model's target.
pub fn ks_point<M: PairModel>(model: &M, m: u64, seed: u64, exec: Execution) -> Result<KsPoint> {
    if m == 0 {
        return Err(invalid("need at least one replication"));
    }
    let ecdf = Ecdf::new(sample_statistics(model, m, seed, exec))?;
    let target = model.target();
    let d = ks_distance(&ecdf, |x| target.cdf(x));
    Ok(KsPoint {
        n: model.n(),
        replications: m,
        ks: d.distance,
        se: d.se,
        location: d.location,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RateSweep {
    pub points: Vec<KsPoint>,
    pub fit: RateFit,
}

/// Kolmogorov distance at every `n` of a strictly increasing grid, then
/// the log-log fit with `bootstrap` resamples.
pub fn rate_sweep<M, F>(
    build: F,
    n_grid: &[usize],
    m: u64,
    seed: u64,
    bootstrap: usize,
    exec: Execution,
) -> Result<RateSweep>
where
    M: PairModel,
    F: Fn(usize) -> Result<M>,
{
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("n grid must be strictly increasing"));
    }
    let mut points = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let model = build(n)?;
        let p = ks_point(&model, m, seed, exec)?;
        log::info!("{} n={n}: ks={:.5} (se {:.5})", model.name(), p.ks, p.se);
        points.push(p);
    }
    let xy: Vec<(f64, f64)> = points.iter().map(|p| (p.n as f64, p.ks)).collect();
    let fit = fit_rate(&xy, bootstrap, seed)?;
    Ok(RateSweep { points, fit })
}
