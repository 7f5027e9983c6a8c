//! Mean-field Heisenberg model on `(S²)ⁿ` with Gibbs weight
//! `exp((β/2n) Σ_{i,j} ⟨σ_i, σ_j⟩)`, `β > 3`.

use rand::Rng;
use serde::Serialize;

use crate::aux::{sample_vmf, uniform_direction, vmf_cos_from_uniform, TabulatedSampler};
use crate::error::{invalid, Result};
use crate::pair::{CondStats, PairModel};
use crate::special::{langevin, langevin_prime, ln_sinhc, solve_increasing, vmf_cos_moments, vmf_signed_square};
use crate::stats::StreamRng;
use crate::targets::TargetLaw;

/// Cells of the radial auxiliary-field table.
pub const RADIAL_CELLS: usize = 8192;

/// Positive root of `ψ(x) = x/β` with `ψ(x) = coth x − 1/x`; requires
/// `β > 3`.
pub fn solve_kappa(beta: f64) -> Result<f64> {
    if !(beta > 3.0 && beta.is_finite()) {
        return Err(invalid(format!("the ordered phase needs beta > 3, got {beta}")));
    }
    // x/β − ψ(x) is negative near 0 and positive at x = β
    let f = |x: f64| (x / beta - langevin(x), 1.0 / beta - langevin_prime(x));
    let mut lo = 1e-3;
    while f(lo).0 >= 0.0 {
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(invalid(format!("no positive root of psi(x) = x/{beta}")));
        }
    }
    Ok(solve_increasing(f, lo, beta, 1e-15))
}

/// `4β²/((1 − βψ'(κ))κ²) · (1/κ² − 1/sinh²κ)`.
pub fn compute_b2(beta: f64, kappa: f64) -> f64 {
    let gap = 1.0 - beta * langevin_prime(kappa);
    let sh = kappa.sinh();
    4.0 * beta * beta / (gap * kappa * kappa) * (1.0 / (kappa * kappa) - 1.0 / (sh * sh))
}

/// Spins as unit vectors.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpinConfig {
    pub sigma: Vec<[f64; 3]>,
}

impl SpinConfig {
    pub fn sum(&self) -> [f64; 3] {
        let mut s = [0.0; 3];
        for v in &self.sigma {
            s[0] += v[0];
            s[1] += v[1];
            s[2] += v[2];
        }
        s
    }

    /// Largest `| |σ_i| − 1 |`.
    pub fn max_norm_error(&self) -> f64 {
        self.sigma
            .iter()
            .map(|v| (dot(v, v).sqrt() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

#[inline]
fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[derive(Clone, Debug)]
pub struct HeisenbergModel {
    beta: f64,
    n: usize,
    kappa: f64,
    b2: f64,
    gap: f64,
    target: TargetLaw,
    radial: TabulatedSampler,
}

impl HeisenbergModel {
    pub fn new(beta: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid("the Heisenberg model needs n >= 2"));
        }
        let kappa = solve_kappa(beta)?;
        let gap = 1.0 - beta * langevin_prime(kappa);
        if !(gap > 0.0) {
            return Err(invalid(format!("1 - beta psi'(kappa) = {gap} is not positive")));
        }
        let b2 = compute_b2(beta, kappa);
        let nf = n as f64;
        let a = (beta / nf).sqrt();
        let radial = TabulatedSampler::new(
            |r| {
                if r <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    2.0 * r.ln() - 0.5 * r * r + nf * ln_sinhc(a * r)
                }
            },
            kappa / a,
            (0.0, f64::INFINITY),
            RADIAL_CELLS,
        )?;
        Ok(Self {
            beta,
            n,
            kappa,
            b2,
            gap,
            target: TargetLaw::normal(1.0)?,
            radial,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn b2(&self) -> f64 {
        self.b2
    }

    /// `1 − βψ'(κ)`
    pub fn spectral_gap(&self) -> f64 {
        self.gap
    }

    /// `ln E_unif exp(β|S|²/(2n))`, from the radial normalizer.
    pub fn log_partition_ratio(&self) -> f64 {
        // χ₃ density √(2/π) r² e^{−r²/2}
        self.radial.log_normalizer() + 0.5 * (2.0 / std::f64::consts::PI).ln()
    }

    /// Unscaled statistic `√n(β²|S|²/(n²κ²) − 1)` from `|S|²`.
    pub fn w_from_norm_sq(&self, s2: f64) -> f64 {
        let nf = self.n as f64;
        nf.sqrt() * (self.beta * self.beta * s2 / (nf * nf * self.kappa * self.kappa) - 1.0)
    }

    /// Reported statistic `V = W/B`.
    pub fn v_from_norm_sq(&self, s2: f64) -> f64 {
        self.w_from_norm_sq(s2) / self.b2.sqrt()
    }

    /// Per-configuration first-moment expansion for the unscaled `W`,
    /// `(2/n)W + 2/√n − (2β/(√n κ²)) m ψ(m)` with `m = β|S|/n`; the
    /// kernel uses the exact conditional instead.
    pub fn linearized_ed(&self, s_norm: f64) -> f64 {
        let nf = self.n as f64;
        let m = self.beta * s_norm / nf;
        let w = self.w_from_norm_sq(s_norm * s_norm);
        2.0 * w / nf + 2.0 / nf.sqrt() - 2.0 * self.beta / (nf.sqrt() * self.kappa * self.kappa) * m * langevin(m)
    }

    // Δ_V = C ρ_i (cos α_i − u)
    fn delta_scale(&self) -> f64 {
        let nf = self.n as f64;
        2.0 * self.beta * self.beta / (nf.powf(1.5) * self.kappa * self.kappa * self.b2.sqrt())
    }

    fn sample_field<R: Rng + ?Sized>(&self, rng: &mut R) -> ([f64; 3], f64) {
        let r = self.radial.sample(rng);
        let c = (self.beta / self.n as f64).sqrt() * r;
        (uniform_direction(rng), c)
    }

    /// `(ρ_i, cos α_i)` for the site with spin `s` when the total is `total`.
    #[inline]
    fn site_geometry(s: &[f64; 3], total: &[f64; 3], total_sq: f64) -> (f64, f64) {
        let d = dot(s, total);
        let rho = (total_sq - 2.0 * d + 1.0).max(0.0).sqrt();
        let cos = if rho > 0.0 {
            ((d - 1.0) / rho).clamp(-1.0, 1.0)
        } else {
            0.0
        };
        (rho, cos)
    }

    /// Replaces `count` uniformly chosen spins by Gibbs draws in turn and
    /// returns `(V, V')`.
    pub fn resample_coordinates(&self, x: &SpinConfig, rng: &mut StreamRng, count: usize) -> (f64, f64) {
        let v = self.statistic(x);
        let mut y = x.clone();
        let mut total = y.sum();
        let nf = self.n as f64;
        for _ in 0..count {
            let i = rng.random_range(0..self.n);
            let s = y.sigma[i];
            let rest = [total[0] - s[0], total[1] - s[1], total[2] - s[2]];
            let rho = dot(&rest, &rest).sqrt();
            let new = if rho > 0.0 {
                sample_vmf([rest[0] / rho, rest[1] / rho, rest[2] / rho], self.beta * rho / nf, rng)
            } else {
                uniform_direction(rng)
            };
            total = [rest[0] + new[0], rest[1] + new[1], rest[2] + new[2]];
            y.sigma[i] = new;
        }
        (v, self.v_from_norm_sq(dot(&total, &total)))
    }
}

impl PairModel for HeisenbergModel {
    type Config = SpinConfig;

    fn name(&self) -> &'static str {
        "heisenberg"
    }

    fn params(&self) -> serde_json::Value {
        serde_json::json!({ "n": self.n, "beta": self.beta, "kappa": self.kappa, "B2": self.b2 })
    }

    fn n(&self) -> usize {
        self.n
    }

    fn lambda(&self) -> f64 {
        self.gap / self.n as f64
    }

    fn target(&self) -> &TargetLaw {
        &self.target
    }

    fn sample_config(&self, rng: &mut StreamRng) -> SpinConfig {
        let (mu, c) = self.sample_field(rng);
        SpinConfig {
            sigma: (0..self.n).map(|_| sample_vmf(mu, c, rng)).collect(),
        }
    }

    fn sample_statistic(&self, rng: &mut StreamRng) -> f64 {
        // |S|² is frame-invariant: accumulate in the field's own frame
        let (_, c) = self.sample_field(rng);
        let (mut t, mut a, mut b) = (0.0, 0.0, 0.0);
        for _ in 0..self.n {
            let u = vmf_cos_from_uniform(c, rng.random());
            let phi = std::f64::consts::TAU * rng.random::<f64>();
            let r = (1.0 - u * u).max(0.0).sqrt();
            let (s, co) = phi.sin_cos();
            t += u;
            a += r * co;
            b += r * s;
        }
        self.v_from_norm_sq(t * t + a * a + b * b)
    }

    fn statistic(&self, x: &SpinConfig) -> f64 {
        let s = x.sum();
        self.v_from_norm_sq(dot(&s, &s))
    }

    fn cond_stats(&self, x: &SpinConfig) -> Result<CondStats> {
        if x.sigma.len() != self.n {
            return Err(invalid("spin configuration length does not match n"));
        }
        let total = x.sum();
        let total_sq = dot(&total, &total);
        let nf = self.n as f64;
        let (mut s1, mut s2, mut sa, mut s3) = (0.0, 0.0, 0.0, 0.0);
        for s in &x.sigma {
            let (rho, cos) = Self::site_geometry(s, &total, total_sq);
            let b = self.beta * rho / nf;
            let [m1, m2, m3] = vmf_cos_moments(b);
            let r2 = rho * rho;
            s1 += rho * (cos - m1);
            s2 += r2 * (cos * cos - 2.0 * cos * m1 + m2);
            sa += r2 * vmf_signed_square(cos, b);
            s3 += r2 * rho * (cos * cos * cos - 3.0 * cos * cos * m1 + 3.0 * cos * m2 - m3);
        }
        let c = self.delta_scale();
        Ok(CondStats {
            w: self.v_from_norm_sq(total_sq),
            ed: c * s1 / nf,
            ed2: c * c * s2 / nf,
            edabs: c * c * sa / nf,
            ed3: c * c * c * s3 / nf,
        })
    }

    fn sample_pair(&self, x: &SpinConfig, rng: &mut StreamRng) -> (f64, f64) {
        self.resample_coordinates(x, rng, 1)
    }
}
