//! Partitions, germs, Riemann sums, the δ operator, interval coarsening
//! and empirical `L_m` convergence-rate estimation.

mod exponents;
mod germ;
mod partition;
mod rate;

pub use exponents::SewingExponents;
pub use germ::{delta_germ, riemann_sum, riemann_sum_indices, FnGerm, Germ, Increment, PowerOfLength, Scaled};
pub use partition::{dyadic_partition, Partition};
pub use rate::{
    estimate_convergence_rate, estimate_convergence_rate_with, EpsilonHat, LevelDistance, RateFitResult,
    RateOptions, RateReference,
};
