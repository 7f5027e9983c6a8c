//! Samplers for the auxiliary-field marginals and von Mises–Fisher spins.

use rand::Rng;

use crate::error::{Error, Result};
use crate::quadrature;
use crate::special;
use crate::stats::pairwise_sum;

/// Log-density drop (nats) at which a tabulated density is truncated.
pub const DROP: f64 = 46.0;

/// Inverse-CDF sampler for a univariate density known up to a constant.
///
/// The density is truncated where its log falls `DROP` nats below the
/// maximum, split into equal cells, and each cell's mass is integrated
/// with an 8-point Gauss–Legendre rule. Inside a cell the draw inverts the
/// log-linear interpolant between the cell edges.
#[derive(Clone, Debug)]
pub struct TabulatedSampler {
    edges: Vec<f64>,
    log_edge: Vec<f64>,
    cum: Vec<f64>,
    log_normalizer: f64,
}

impl TabulatedSampler {
    /// `log_density` must be unimodal-ish around `mode_hint` within
    /// `domain`; `cells` is the table resolution.
    pub fn new<F: Fn(f64) -> f64>(log_density: F, mode_hint: f64, domain: (f64, f64), cells: usize) -> Result<Self> {
        if cells < 16 {
            return Err(crate::error::invalid("a tabulated sampler needs at least 16 cells"));
        }
        let (a, b) = domain;
        if !(mode_hint >= a && mode_hint <= b) {
            return Err(crate::error::invalid(format!(
                "mode hint {mode_hint} outside [{a}, {b}]"
            )));
        }
        let f0 = log_density(mode_hint);
        if !f0.is_finite() {
            return Err(Error::Construction(format!(
                "log-density is not finite at the mode hint {mode_hint}"
            )));
        }
        let scale = mode_hint.abs().max(1.0);
        let (hi, max_r) = reach(&log_density, mode_hint, 1.0, b, scale)?;
        let (lo, max_l) = reach(&log_density, mode_hint, -1.0, a, scale)?;
        let log_max = max_r.max(max_l).max(f0);
        // tighten to the DROP level relative to the global maximum
        let hi = tighten(&log_density, mode_hint, hi, log_max);
        let lo = tighten(&log_density, mode_hint, lo, log_max);
        let h = (hi - lo) / cells as f64;
        let edges: Vec<f64> = (0..=cells)
            .map(|i| if i == cells { hi } else { lo + h * i as f64 })
            .collect();
        let log_edge: Vec<f64> = edges.iter().map(|&x| (log_density(x) - log_max).max(-745.0)).collect();
        let gl = quadrature::rule(8);
        let masses: Vec<f64> = edges
            .windows(2)
            .map(|w| gl.integrate(|x| (log_density(x) - log_max).exp(), w[0], w[1]))
            .collect();
        if masses.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::Construction("tabulated density has non-finite cell mass".into()));
        }
        let total = pairwise_sum(&masses);
        if !(total > 0.0) {
            return Err(Error::Construction("tabulated density has zero mass".into()));
        }
        let mut cum = Vec::with_capacity(cells + 1);
        cum.push(0.0);
        let mut run = 0.0;
        for m in &masses {
            run += m;
            cum.push(run / total);
        }
        *cum.last_mut().expect("cells >= 16") = 1.0;
        Ok(Self {
            edges,
            log_edge,
            cum,
            log_normalizer: log_max + total.ln(),
        })
    }

    /// `ln ∫ exp(log_density)` over the truncated range.
    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    pub fn range(&self) -> (f64, f64) {
        (self.edges[0], self.edges[self.edges.len() - 1])
    }

    pub fn cells(&self) -> usize {
        self.edges.len() - 1
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        self.invert(u)
    }

    /// Inverse of the tabulated CDF at `u ∈ [0, 1)`.
    pub fn invert(&self, u: f64) -> f64 {
        let n = self.cells();
        let j = (self.cum.partition_point(|c| *c <= u).max(1) - 1).min(n - 1);
        let width = self.cum[j + 1] - self.cum[j];
        let frac = if width > 0.0 {
            ((u - self.cum[j]) / width).clamp(0.0, 1.0)
        } else {
            0.5
        };
        let (x0, x1) = (self.edges[j], self.edges[j + 1]);
        let h = x1 - x0;
        let s = (self.log_edge[j + 1] - self.log_edge[j]) / h;
        let sh = s * h;
        if sh.abs() < 1e-9 {
            return x0 + frac * h;
        }
        // ∫_0^t e^{s x} dx / ∫_0^h e^{s x} dx = frac
        let t = (frac * sh.exp_m1()).ln_1p() / s;
        (x0 + t.clamp(0.0, h)).min(x1)
    }

    /// CDF of the sampler's own law (log-linear within cells).
    pub fn cdf(&self, x: f64) -> f64 {
        let n = self.cells();
        if x <= self.edges[0] {
            return 0.0;
        }
        if x >= self.edges[n] {
            return 1.0;
        }
        let j = (self.edges.partition_point(|e| *e <= x).max(1) - 1).min(n - 1);
        let (x0, x1) = (self.edges[j], self.edges[j + 1]);
        let h = x1 - x0;
        let s = (self.log_edge[j + 1] - self.log_edge[j]) / h;
        let t = x - x0;
        let frac = if (s * h).abs() < 1e-9 {
            t / h
        } else {
            (s * t).exp_m1() / (s * h).exp_m1()
        };
        self.cum[j] + frac * (self.cum[j + 1] - self.cum[j])
    }
}

// Walks outward from `start` by doubling until the log-density has dropped
// DROP nats below the running maximum or the domain ends.
fn reach<F: Fn(f64) -> f64>(f: &F, start: f64, dir: f64, end: f64, scale: f64) -> Result<(f64, f64)> {
    let limit = (end - start).abs();
    let mut best = f(start);
    let mut d = 1e-3 * scale;
    let mut prev = 0.0;
    loop {
        let dd = d.min(limit);
        // sample the new stretch to keep track of the maximum
        for s in 1..=32 {
            let x = start + dir * (prev + (dd - prev) * s as f64 / 32.0);
            let v = f(x);
            if v.is_nan() {
                return Err(Error::Construction(format!("log-density is NaN at {x}")));
            }
            best = best.max(v);
        }
        let x = start + dir * dd;
        if f(x) < best - DROP || dd >= limit {
            return Ok((x, best));
        }
        prev = dd;
        d *= 2.0;
        if d > 1e12 * scale {
            return Err(Error::Construction("density does not decay".into()));
        }
    }
}

// Moves `edge` inward to where the log-density first reaches max - DROP.
fn tighten<F: Fn(f64) -> f64>(f: &F, inner: f64, edge: f64, log_max: f64) -> f64 {
    let thr = log_max - DROP;
    if f(edge) >= thr {
        return edge;
    }
    let dir = (edge - inner).signum();
    let dist = (edge - inner).abs();
    // find the outermost sample above the threshold on a coarse grid
    let m = 512;
    let mut inside = 0.0;
    for i in (0..=m).rev() {
        let d = dist * i as f64 / m as f64;
        if f(inner + dir * d) >= thr {
            inside = d;
            break;
        }
    }
    let mut outside = (inside + dist / m as f64).min(dist);
    let mut inside = inside;
    while outside - inside > 1e-13 * dist.max(1.0) {
        let mid = 0.5 * (inside + outside);
        if f(inner + dir * mid) >= thr {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    inner + dir * outside
}

/// Inverse CDF of the vMF cosine on S² with concentration `c ≥ 0`:
/// `cos θ = 1 + ln(u + (1 − u)e^{−2c})/c`.
#[inline]
pub fn vmf_cos_from_uniform(c: f64, u: f64) -> f64 {
    if c < 1e-12 {
        return 2.0 * u - 1.0;
    }
    (1.0 + ((1.0 - u) * (-2.0 * c).exp_m1()).ln_1p() / c).clamp(-1.0, 1.0)
}

/// vMF draw with unit mean direction `mu` and concentration `c`.
pub fn sample_vmf<R: Rng + ?Sized>(mu: [f64; 3], c: f64, rng: &mut R) -> [f64; 3] {
    let (e1, e2) = orthonormal_frame(mu);
    let t = vmf_cos_from_uniform(c, rng.random());
    let phi = std::f64::consts::TAU * rng.random::<f64>();
    let r = (1.0 - t * t).max(0.0).sqrt();
    let (s, co) = phi.sin_cos();
    [
        t * mu[0] + r * (co * e1[0] + s * e2[0]),
        t * mu[1] + r * (co * e1[1] + s * e2[1]),
        t * mu[2] + r * (co * e1[2] + s * e2[2]),
    ]
}

/// Uniform point on S².
pub fn uniform_direction<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    sample_vmf([0.0, 0.0, 1.0], 0.0, rng)
}

/// Two unit vectors completing `mu` to a right-handed orthonormal frame.
pub fn orthonormal_frame(mu: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    // pick the axis least aligned with mu
    let a = if mu[0].abs() < 0.6 {
        [1.0, 0.0, 0.0]
    } else if mu[1].abs() < 0.6 {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let d = a[0] * mu[0] + a[1] * mu[1] + a[2] * mu[2];
    let mut e1 = [a[0] - d * mu[0], a[1] - d * mu[1], a[2] - d * mu[2]];
    let n1 = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    e1 = [e1[0] / n1, e1[1] / n1, e1[2] / n1];
    let e2 = [
        mu[1] * e1[2] - mu[2] * e1[1],
        mu[2] * e1[0] - mu[0] * e1[2],
        mu[0] * e1[1] - mu[1] * e1[0],
    ];
    (e1, e2)
}

/// Mean of the vMF cosine, `coth c − 1/c`.
pub fn vmf_mean_cos(c: f64) -> f64 {
    special::langevin(c)
}
