use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Estimate, PairModel};
use crate::error::{invalid, Error, Result};
use crate::exec::{self, Execution};
use crate::stats::stream::{lane, purpose};
use crate::stats::{derive_stream, mean_se, mean_se_by, pairwise_sum};

/// Bootstrap resamples for the standard error of the assembled bound.
pub const RHS_BOOTSTRAP: usize = 200;

/// Which right-hand side a [`BoundTerms`] row assembles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundVariant {
    /// `t1 + t2 + t3` with `Δ* = |Δ|`.
    Theorem,
    /// `t1 + t3 + 3δ` under `|Δ| ≤ δ`.
    BoundedDifference,
    /// `t1 + t3 + 2√(E|E(Δ³|𝒳)|/λ)`, the optimized `Δ* = a/2 + Δ²/(2a)`.
    ThirdMoment,
}

/// Per-replication summands, kept so that several right-hand sides can be
/// assembled from one set of configurations.
#[derive(Clone, Copy, Debug)]
struct Summand {
    t1: f64,
    t2: f64,
    t3: f64,
    abs_ed3: f64,
    ed: f64,
    abs_w: f64,
}

/// The per-replication terms of one Monte Carlo run.
#[derive(Clone, Debug)]
pub struct BoundSample {
    model: String,
    params: serde_json::Value,
    n: usize,
    seed: u64,
    lambda: f64,
    residual_factor: f64,
    delta_max: Option<f64>,
    residual_zero: bool,
    rows: Vec<Summand>,
}

/// Estimated bound terms and the assembled right-hand side.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundTerms {
    pub model: String,
    pub params: serde_json::Value,
    pub n: usize,
    pub replications: u64,
    pub seed: u64,
    pub variant: BoundVariant,
    pub lambda: f64,
    pub residual_factor: f64,
    /// `E|1 − E(Δ²|𝒳)/(2λ)|`
    pub t1: Estimate,
    /// `E|E(Δ|Δ| | 𝒳)|/λ`, or the variant's replacement term
    pub t2: Estimate,
    /// `E|E(Δ|𝒳)/λ − g(W)|`, times `1/c1` for non-normal targets
    pub t3: Estimate,
    pub rhs: Estimate,
    /// Monte Carlo mean of `E(Δ|𝒳)`, zero in expectation
    pub mean_ed: Estimate,
    pub mean_abs_w: f64,
}

impl BoundTerms {
    /// Flat JSON row: model, params, M, seed, t1, t2, t3, rhs, se_*.
    pub fn to_row(&self) -> serde_json::Value {
        serde_json::json!({
            "model": self.model,
            "params": self.params,
            "n": self.n,
            "M": self.replications,
            "seed": self.seed,
            "variant": self.variant,
            "lambda": self.lambda,
            "t1": self.t1.value,
            "t2": self.t2.value,
            "t3": self.t3.value,
            "rhs": self.rhs.value,
            "se_t1": self.t1.se,
            "se_t2": self.t2.se,
            "se_t3": self.t3.se,
            "se_rhs": self.rhs.se,
            "mean_ed": self.mean_ed.value,
            "se_mean_ed": self.mean_ed.se,
            "mean_abs_w": self.mean_abs_w,
        })
    }
}

/// Draws `m` configurations and evaluates the per-replication summands.
///
/// Replication `r` uses the stream `(seed, lane(CONFIG, n), r)`, so the
/// result does not depend on the execution policy or worker count.
pub fn sample_bound<M: PairModel>(model: &M, m: u64, seed: u64, exec: Execution) -> Result<BoundSample> {
    if m < 2 {
        return Err(invalid(format!("need at least 2 replications, got {m}")));
    }
    let lambda = model.lambda();
    let target = model.target();
    let factor = target.residual_factor();
    let residual_zero = model.residual_is_zero();
    let level = lane(purpose::CONFIG, model.n() as u32);
    let rows = exec::try_map_indexed(exec, m, |r| -> Result<Summand> {
        let mut rng = derive_stream(seed, level, r);
        let x = model.sample_config(&mut rng);
        let cs = model.checked_stats(&x)?;
        let t3 = if residual_zero {
            0.0
        } else {
            factor * (cs.ed / lambda - target.g(cs.w)).abs()
        };
        Ok(Summand {
            t1: (1.0 - cs.ed2 / (2.0 * lambda)).abs(),
            t2: cs.edabs.abs() / lambda,
            t3,
            abs_ed3: cs.ed3.abs(),
            ed: cs.ed,
            abs_w: cs.w.abs(),
        })
    })?;
    Ok(BoundSample {
        model: model.name().to_string(),
        params: model.params(),
        n: model.n(),
        seed,
        lambda,
        residual_factor: factor,
        delta_max: model.delta_max(),
        residual_zero,
        rows,
    })
}

impl BoundSample {
    pub fn replications(&self) -> u64 {
        self.rows.len() as u64
    }

    /// Theorem bound with `Δ* = |Δ|`.
    pub fn theorem(&self, exec: Execution) -> BoundTerms {
        self.assemble(BoundVariant::Theorem, exec)
    }

    /// Bound under `|Δ| ≤ δ`; needs the model's `delta_max`.
    pub fn bounded_difference(&self, exec: Execution) -> Result<BoundTerms> {
        self.delta_max
            .ok_or_else(|| Error::Unsupported(format!("model {} has no almost-sure bound on |Δ|", self.model)))?;
        let terms = self.assemble(BoundVariant::BoundedDifference, exec);
        if terms.mean_abs_w > 2.0 {
            log::warn!(
                "E|W| = {} exceeds 2; the bounded-difference bound is not applicable",
                terms.mean_abs_w
            );
        }
        Ok(terms)
    }

    /// Third-moment variant `t1 + t3 + 2√(E|E(Δ³|𝒳)|/λ)`.
    pub fn third_moment(&self, exec: Execution) -> BoundTerms {
        let terms = self.assemble(BoundVariant::ThirdMoment, exec);
        if terms.mean_abs_w > 2.0 {
            log::warn!(
                "E|W| = {} exceeds 2; the third-moment bound is not applicable",
                terms.mean_abs_w
            );
        }
        terms
    }

    /// `2√(E|E(Δ³|𝒳)|/λ)` with a delta-method standard error.
    pub fn third_moment_term(&self) -> Estimate {
        let m = mean_se_by(&self.rows, |s| s.abs_ed3);
        third_moment_from(m.mean, m.se, self.lambda)
    }

    fn variant_t2(&self, variant: BoundVariant) -> Estimate {
        match variant {
            BoundVariant::Theorem => mean_se_by(&self.rows, |s| s.t2).into(),
            BoundVariant::BoundedDifference => Estimate::exact(3.0 * self.delta_max.unwrap_or(f64::NAN)),
            BoundVariant::ThirdMoment => self.third_moment_term(),
        }
    }

    fn assemble(&self, variant: BoundVariant, exec: Execution) -> BoundTerms {
        let t1: Estimate = mean_se_by(&self.rows, |s| s.t1).into();
        let t3: Estimate = if self.residual_zero {
            Estimate::exact(0.0)
        } else {
            mean_se_by(&self.rows, |s| s.t3).into()
        };
        let t2 = self.variant_t2(variant);
        let rhs_value = t1.value + t2.value + t3.value;
        let rhs_se = self.bootstrap_rhs_se(variant, exec);
        let m = self.rows.len();
        BoundTerms {
            model: self.model.clone(),
            params: self.params.clone(),
            n: self.n,
            replications: m as u64,
            seed: self.seed,
            variant,
            lambda: self.lambda,
            residual_factor: self.residual_factor,
            t1,
            t2,
            t3,
            rhs: Estimate::new(rhs_value, rhs_se),
            mean_ed: mean_se_by(&self.rows, |s| s.ed).into(),
            mean_abs_w: pairwise_sum(&self.rows.iter().map(|s| s.abs_w).collect::<Vec<_>>()) / m as f64,
        }
    }

    // Joint resample of the replications (the terms share configurations).
    fn bootstrap_rhs_se(&self, variant: BoundVariant, exec: Execution) -> f64 {
        let m = self.rows.len();
        let level = lane(purpose::BOOTSTRAP, self.n as u32);
        let lambda = self.lambda;
        let delta = self.delta_max.unwrap_or(f64::NAN);
        let rows = &self.rows;
        let stats = exec::map_indexed(exec, RHS_BOOTSTRAP as u64, |b| {
            let mut rng = derive_stream(self.seed, level, b);
            let (mut s1, mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0, 0.0);
            for _ in 0..m {
                let r = &rows[rng.random_range(0..m)];
                s1 += r.t1;
                s2 += r.t2;
                s3 += r.t3;
                s4 += r.abs_ed3;
            }
            let mf = m as f64;
            let (t1, t2, t3) = (s1 / mf, s2 / mf, s3 / mf);
            match variant {
                BoundVariant::Theorem => t1 + t2 + t3,
                BoundVariant::BoundedDifference => t1 + t3 + 3.0 * delta,
                BoundVariant::ThirdMoment => t1 + t3 + 2.0 * (s4 / mf / lambda).sqrt(),
            }
        });
        let sd = mean_se(&stats).se * (RHS_BOOTSTRAP as f64).sqrt();
        if sd.is_finite() {
            sd
        } else {
            0.0
        }
    }
}

fn third_moment_from(mean: f64, se: f64, lambda: f64) -> Estimate {
    if mean <= 0.0 {
        return Estimate::exact(0.0);
    }
    let value = 2.0 * (mean / lambda).sqrt();
    // d/dx 2√(x/λ) = 1/√(λx)
    Estimate::new(value, se / (lambda * mean).sqrt())
}

/// Theorem bound for `m` replications: convenience over [`sample_bound`].
pub fn estimate_bound_terms<M: PairModel>(model: &M, m: u64, seed: u64, exec: Execution) -> Result<BoundTerms> {
    Ok(sample_bound(model, m, seed, exec)?.theorem(exec))
}
