//! Target laws `p(y) = c1 exp(−G(y))` built from a drift `g`, the conditions
//! (A1)–(A3) on the drift, and the Stein solution `f_z`.

mod conditions;
mod drift;
mod law;
mod stein;

pub use conditions::{check_conditions, check_drift_conditions, ConditionReport, ConditionResult, A3_THRESHOLD};
pub use drift::{Drift, DriftSpec};
pub use law::{TableRow, TargetLaw, TAIL_CUT};
pub use stein::{uniform_grid, verify_lemma41, Lemma41Options, PropertyCheck, PropertyReport, SteinSolution};
