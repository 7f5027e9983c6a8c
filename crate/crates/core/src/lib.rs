//! Exchangeable-pair Berry–Esseen laboratory.
//!
//! The crate is organised bottom-up:
//!
//! * [`quadrature`] and [`special`] hold the numerical primitives,
//! * [`targets`] builds target laws `p(y) = c1 exp(-G(y))` from a drift `g`
//!   and evaluates the Stein solution `f_z`,
//! * [`pair`] defines the [`pair::PairModel`] contract and the Monte Carlo
//!   estimators of the three-term Kolmogorov bound,
//! * [`models`] implements the four application models,
//! * [`stats`] provides empirical CDFs, Kolmogorov distances, rate fits and
//!   the deterministic stream-splitting contract,
//! * [`sweep`] ties models and statistics together for replication sweeps.
//!
//! Replication loops run on rayon when the `parallel` feature is enabled;
//! [`exec::Execution::Sequential`] forces the single-threaded path.

pub mod aux;
pub mod error;
pub mod exec;
pub mod models;
pub mod pair;
pub mod quadrature;
pub mod special;
pub mod stats;
pub mod sweep;
pub mod targets;

pub use error::{Error, Result};
pub use exec::Execution;
pub use pair::{BoundTerms, CondStats, Estimate, PairModel};
pub use stats::stream::{derive_stream, StreamRng};
pub use targets::{DriftSpec, SteinSolution, TargetLaw};
