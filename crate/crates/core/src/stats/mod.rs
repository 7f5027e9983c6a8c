//! Empirical distribution functions, Kolmogorov distances, rate fits and
//! the seeding contract.

pub mod ecdf;
pub mod rate;
pub mod stream;
pub mod summation;

pub use ecdf::{ks_distance, Ecdf, KsDistance};
pub use rate::{fit_rate, RateFit};
pub use stream::{derive_stream, StreamRng};
pub use summation::{mean_se, mean_se_by, pairwise_sum, pairwise_sum_by, MeanSe};
