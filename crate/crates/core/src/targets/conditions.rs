use serde::Serialize;

use super::drift::{Drift, DriftSpec};
use super::law::TargetLaw;
use crate::error::Result;

/// Threshold for `|g·p|` at the truncation points in the (A3) check.
pub const A3_THRESHOLD: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct ConditionResult {
    pub passed: bool,
    /// Most negative value of the checked quantity (or `|g·p|` for A3).
    pub worst: f64,
    pub worst_at: f64,
    pub detail: String,
}

/// Outcome of checking (A1)–(A3) for a drift.
#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport {
    pub a1: ConditionResult,
    pub a2: ConditionResult,
    pub a3: ConditionResult,
    pub integrable: bool,
    pub points: usize,
}

impl ConditionReport {
    pub fn passed(&self) -> bool {
        self.integrable && self.a1.passed && self.a2.passed && self.a3.passed
    }
}

/// Checks the conditions on the law's tabulated range plus tail probes.
pub fn check_conditions(law: &TargetLaw) -> ConditionReport {
    let (lo, hi) = law.support();
    let grid = probe_grid(law.domain(), lo, hi);
    let a1 = check_a1(law.drift(), law.w0(), &grid);
    let a2 = check_a2(law.drift(), &grid);
    let mut worst = 0.0f64;
    let mut at = f64::NAN;
    for w in [lo, hi] {
        // evaluate just inside a finite endpoint
        let w = nudge_inside(law.domain(), w);
        let v = (law.g(w) * law.pdf(w)).abs();
        if v > worst || at.is_nan() {
            worst = v;
            at = w;
        }
    }
    let a3 = ConditionResult {
        passed: worst <= A3_THRESHOLD,
        worst,
        worst_at: at,
        detail: format!("|g p| at the truncation points, threshold {A3_THRESHOLD:e}"),
    };
    ConditionReport {
        a1,
        a2,
        a3,
        integrable: true,
        points: grid.len(),
    }
}

/// Checks the conditions for a drift before (or without) building its law.
///
/// When `e^{−G}` is not integrable the law cannot be built; (A1) and (A2)
/// are then evaluated on a window around `w0` and (A3) is reported failed.
pub fn check_drift_conditions(spec: DriftSpec, domain: (f64, f64), w0: f64) -> Result<ConditionReport> {
    let drift = Drift::new(spec.clone())?;
    match TargetLaw::build(spec, domain, w0) {
        Ok(law) => Ok(check_conditions(&law)),
        Err(err) => {
            let lo = domain.0.max(w0 - 16.0);
            let hi = domain.1.min(w0 + 16.0);
            let grid = probe_grid(domain, lo, hi);
            Ok(ConditionReport {
                a1: check_a1(&drift, w0, &grid),
                a2: check_a2(&drift, &grid),
                a3: ConditionResult {
                    passed: false,
                    worst: f64::NAN,
                    worst_at: f64::NAN,
                    detail: format!("density not constructible: {err}"),
                },
                integrable: false,
                points: grid.len(),
            })
        }
    }
}

fn nudge_inside(domain: (f64, f64), w: f64) -> f64 {
    let eps = 1e-12 * (1.0 + w.abs());
    if w <= domain.0 {
        domain.0 + eps
    } else if w >= domain.1 {
        domain.1 - eps
    } else {
        w
    }
}

// 4097 points on [lo, hi] plus geometric probes outside, kept in the domain.
fn probe_grid(domain: (f64, f64), lo: f64, hi: f64) -> Vec<f64> {
    let n = 4096;
    let h = (hi - lo) / n as f64;
    let mut grid: Vec<f64> = (0..=n).map(|i| nudge_inside(domain, lo + h * i as f64)).collect();
    let span = (hi - lo).max(1.0);
    let mut left = Vec::new();
    let mut right = Vec::new();
    for k in 0..6 {
        let d = span * 0.5 * f64::powi(2.0, k);
        if lo - d > domain.0 {
            left.push(lo - d);
        }
        if hi + d < domain.1 {
            right.push(hi + d);
        }
    }
    left.reverse();
    left.append(&mut grid);
    left.append(&mut right);
    left
}

fn check_a1(drift: &Drift, w0: f64, grid: &[f64]) -> ConditionResult {
    let mut worst = 0.0f64;
    let mut at = f64::NAN;
    let mut what = "";
    let mut prev: Option<f64> = None;
    for &w in grid {
        let g = drift.eval(w);
        let sign = (w - w0) * g;
        let tol = 1e-12 * (1.0 + g.abs());
        if sign < -tol && sign < worst {
            worst = sign;
            at = w;
            what = "(w - w0) g(w) < 0";
        }
        if let Some(p) = prev {
            let rise = g - p;
            if rise < -tol && rise < worst {
                worst = rise;
                at = w;
                what = "g decreases";
            }
        }
        prev = Some(g);
    }
    ConditionResult {
        passed: at.is_nan(),
        worst,
        worst_at: at,
        detail: if at.is_nan() {
            "g non-decreasing with the sign condition".into()
        } else {
            what.into()
        },
    }
}

fn check_a2(drift: &Drift, grid: &[f64]) -> ConditionResult {
    let tabulated = matches!(drift.spec(), DriftSpec::Tabulated { .. });
    let rel = if tabulated { 1e-6 } else { 1e-12 };
    let mut worst = 0.0f64;
    let mut at = f64::NAN;
    for &w in grid {
        let g = drift.eval(w);
        let d1 = drift.derivative(w);
        let d2 = drift.second_derivative(w);
        let v = 2.0 * d1 * d1 - g * d2;
        let scale = 2.0 * d1 * d1 + (g * d2).abs() + 1e-300;
        if v < -rel * scale && v < worst {
            worst = v;
            at = w;
        }
    }
    ConditionResult {
        passed: at.is_nan(),
        worst,
        worst_at: at,
        detail: if tabulated {
            "2 g'^2 - g g'' >= 0 with finite-difference derivatives".into()
        } else {
            "2 g'^2 - g g'' >= 0".into()
        },
    }
}
