use serde::Serialize;

use super::PairModel;
use crate::error::{invalid, Result};
use crate::exec::{self, Execution};
use crate::stats::stream::{lane, purpose};
use crate::stats::{derive_stream, mean_se_by};

/// Number of standard errors a test mean may deviate from zero.
const SE_WINDOW: f64 = 4.0;

/// Pilot draws used to place the quartile thresholds.
const PILOT: u64 = 10_000;

#[derive(Clone, Debug, Serialize)]
pub struct FunctionCheck {
    pub name: String,
    pub mean: f64,
    pub se: f64,
    pub passed: bool,
}

impl FunctionCheck {
    fn new(name: impl Into<String>, mean: f64, se: f64) -> Self {
        let passed = mean.abs() <= SE_WINDOW * se || mean == 0.0;
        Self {
            name: name.into(),
            mean,
            se,
            passed,
        }
    }
}

/// Statistical checks of the pair construction.
///
/// `exchangeability` holds the means of `φ(W, W') − φ(W', W)`;
/// `regression` compares the sampled `Δ` with the kernel's `E(Δ|𝒳)`
/// through the means of `(Δ − E(Δ|𝒳))ψ(W)/λ`, and includes `E[E(Δ|𝒳)] = 0`.
#[derive(Clone, Debug, Serialize)]
pub struct DiagnosticReport {
    pub model: String,
    pub params: serde_json::Value,
    pub n: usize,
    pub replications: u64,
    pub seed: u64,
    pub exchangeability: Vec<FunctionCheck>,
    pub regression: Vec<FunctionCheck>,
}

impl DiagnosticReport {
    pub fn exchangeable(&self) -> bool {
        self.exchangeability.iter().all(|c| c.passed)
    }

    pub fn regression_holds(&self) -> bool {
        self.regression.iter().all(|c| c.passed)
    }

    pub fn passed(&self) -> bool {
        self.exchangeable() && self.regression_holds()
    }
}

#[derive(Clone, Copy)]
struct PairDraw {
    w: f64,
    wp: f64,
    ed: f64,
}

pub fn exchangeability_check<M: PairModel>(model: &M, m: u64, seed: u64, exec: Execution) -> Result<DiagnosticReport> {
    if m < 2 {
        return Err(invalid(format!("need at least 2 replications, got {m}")));
    }
    let level_x = lane(purpose::CONFIG, model.n() as u32);
    let level_p = lane(purpose::PAIR, model.n() as u32);
    let draws = exec::try_map_indexed(exec, m, |r| -> Result<PairDraw> {
        let mut rng = derive_stream(seed, level_x, r);
        let x = model.sample_config(&mut rng);
        let cs = model.checked_stats(&x)?;
        let mut prng = derive_stream(seed, level_p, r);
        let (w, wp) = model.sample_pair(&x, &mut prng);
        Ok(PairDraw { w, wp, ed: cs.ed })
    })?;

    // quartiles from an independent pilot sample, so the thresholds do not
    // depend on the draws they are tested on
    let pilot = m.min(PILOT);
    let level_q = lane(purpose::AUXILIARY, model.n() as u32);
    let mut ws = exec::map_indexed(exec, pilot, |r| {
        let mut rng = derive_stream(seed, level_q, r);
        model.sample_statistic(&mut rng)
    });
    ws.sort_by(f64::total_cmp);
    // midway to the next distinct value, so lattice statistics never sit
    // on a threshold
    let quartile = |p: f64| {
        let i = ((p * (ws.len() - 1) as f64).round() as usize).min(ws.len() - 1);
        let q = ws[i];
        ws[i..].iter().find(|&&v| v > q).map_or(q, |&next| 0.5 * (q + next))
    };

    let anti = |name: &str, phi: &dyn Fn(f64, f64) -> f64| {
        let vals: Vec<f64> = draws.iter().map(|d| phi(d.w, d.wp) - phi(d.wp, d.w)).collect();
        let ms = mean_se_by(&vals, |v| *v);
        FunctionCheck::new(name, ms.mean, ms.se)
    };
    let mut exch = vec![
        anti("u", &|u, _| u),
        anti("u^2", &|u, _| u * u),
        anti("u*v^2", &|u, v| u * v * v),
        anti("u+v (symmetric control)", &|u, v| u + v),
    ];
    for (label, p) in [("q1", 0.25), ("q2", 0.5), ("q3", 0.75)] {
        let q = quartile(p);
        exch.push(anti(&format!("1{{u<={label}}}*v"), &|u, v| {
            if u <= q {
                v
            } else {
                0.0
            }
        }));
    }

    let lambda = model.lambda();
    let resid = |name: &str, psi: &dyn Fn(f64) -> f64| {
        let vals: Vec<f64> = draws.iter().map(|d| (d.w - d.wp - d.ed) / lambda * psi(d.w)).collect();
        let ms = mean_se_by(&vals, |v| *v);
        FunctionCheck::new(name, ms.mean, ms.se)
    };
    let ed_mean = mean_se_by(&draws, |d| d.ed);
    let regression = vec![
        resid("(D - ed)/lambda", &|_| 1.0),
        resid("(D - ed)/lambda * w", &|w| w),
        resid("(D - ed)/lambda * w^2", &|w| w * w),
        FunctionCheck::new("E[ed]", ed_mean.mean, ed_mean.se),
    ];

    Ok(DiagnosticReport {
        model: model.name().to_string(),
        params: model.params(),
        n: model.n(),
        replications: m,
        seed,
        exchangeability: exch,
        regression,
    })
}
