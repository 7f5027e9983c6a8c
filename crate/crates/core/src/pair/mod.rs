//! The exchangeable-pair contract and Monte Carlo estimators of the
//! Kolmogorov-distance bounds.
//!
//! Every quantity is conditioned on the full configuration 𝒳 rather than on
//! `W` alone. By the tower property and Jensen's inequality
//! `E|E(X|W)| ≤ E|E(X|𝒳)|`, so the estimated right-hand sides remain upper
//! bounds for the `W`-conditioned statements.

mod bound;
mod diagnostics;

use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::StreamRng;
use crate::targets::TargetLaw;

pub use bound::{estimate_bound_terms, sample_bound, BoundSample, BoundTerms, BoundVariant, RHS_BOOTSTRAP};
pub use diagnostics::{exchangeability_check, DiagnosticReport, FunctionCheck};

/// Conditional moments of `Δ = W − W'` given the configuration 𝒳.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CondStats {
    pub w: f64,
    /// `E(Δ | 𝒳)`
    pub ed: f64,
    /// `E(Δ² | 𝒳)`
    pub ed2: f64,
    /// `E(Δ|Δ| | 𝒳)`
    pub edabs: f64,
    /// `E(Δ³ | 𝒳)`
    pub ed3: f64,
}

impl CondStats {
    /// Checks `ed2 ≥ 0`, `|edabs| ≤ ed2` and `|ed| ≤ √ed2` up to a relative
    /// rounding allowance.
    pub fn check(&self) -> std::result::Result<(), String> {
        let all = [self.w, self.ed, self.ed2, self.edabs, self.ed3];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(format!("non-finite conditional moment in {self:?}"));
        }
        let tol = 1e-12 * (1.0 + self.ed2);
        if self.ed2 < -tol {
            return Err(format!("negative E(Δ²|X) = {}", self.ed2));
        }
        if self.edabs.abs() > self.ed2 + tol {
            return Err(format!(
                "|E(Δ|Δ||X)| = {} exceeds E(Δ²|X) = {}",
                self.edabs.abs(),
                self.ed2
            ));
        }
        if self.ed * self.ed > self.ed2 * (1.0 + 1e-10) + tol {
            return Err(format!(
                "E(Δ|X)² = {} exceeds E(Δ²|X) = {}",
                self.ed * self.ed,
                self.ed2
            ));
        }
        Ok(())
    }
}

/// A model supplying an exchangeable pair `(W, W')` built by resampling one
/// coordinate of a configuration from its Gibbs conditional.
pub trait PairModel: Sync {
    type Config: Clone + Debug + Send + Serialize;

    fn name(&self) -> &'static str;

    /// Model parameters for output rows.
    fn params(&self) -> serde_json::Value;

    fn n(&self) -> usize;

    /// `λ` of the regression condition `E(Δ | W) = λ(g(W) + R)`.
    fn lambda(&self) -> f64;

    fn target(&self) -> &TargetLaw;

    /// Almost-sure bound on `|Δ|`, when the model has one.
    fn delta_max(&self) -> Option<f64> {
        None
    }

    /// True when `E(Δ | 𝒳) = λ g(W)` holds identically, so the residual
    /// term is exactly zero.
    fn residual_is_zero(&self) -> bool {
        false
    }

    /// Exact draw of a configuration.
    fn sample_config(&self, rng: &mut StreamRng) -> Self::Config;

    /// The statistic `W` of a configuration.
    fn statistic(&self, x: &Self::Config) -> f64;

    /// Exact draw of `W` alone; models may skip materializing the
    /// configuration.
    fn sample_statistic(&self, rng: &mut StreamRng) -> f64 {
        self.statistic(&self.sample_config(rng))
    }

    fn cond_stats(&self, x: &Self::Config) -> Result<CondStats>;

    /// Draws `(W, W')` by resampling a uniformly chosen coordinate.
    fn sample_pair(&self, x: &Self::Config, rng: &mut StreamRng) -> (f64, f64);

    /// Kernel call that wraps failures with the serialized configuration.
    fn checked_stats(&self, x: &Self::Config) -> Result<CondStats> {
        let out = self.cond_stats(x).and_then(|cs| {
            cs.check().map_err(|reason| Error::Kernel {
                reason,
                config: String::new(),
            })?;
            Ok(cs)
        });
        out.map_err(|e| match e {
            Error::Kernel { reason, .. } => Error::Kernel {
                reason,
                config: serde_json::to_string(x).unwrap_or_else(|_| format!("{x:?}")),
            },
            other => Error::Kernel {
                reason: other.to_string(),
                config: serde_json::to_string(x).unwrap_or_else(|_| format!("{x:?}")),
            },
        })
    }
}

/// A Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    pub fn new(value: f64, se: f64) -> Self {
        Self { value, se }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, se: 0.0 }
    }
}

impl From<crate::stats::MeanSe> for Estimate {
    fn from(m: crate::stats::MeanSe) -> Self {
        Self {
            value: m.mean,
            se: m.se,
        }
    }
}
