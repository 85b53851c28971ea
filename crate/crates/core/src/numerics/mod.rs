//! Special functions, quadrature, seeded random streams and Monte Carlo
//! statistics shared by the rest of the crate.

mod quadrature;
mod rng;
mod special;
mod stats;

pub use quadrature::{
    adaptive_quad, adaptive_quad_detailed, gauss_hermite_expect, gaussian_density_expect,
    GaussHermite, QuadOptions, QuadResult, Singularity, DEFAULT_HERMITE_ORDER,
};
pub use rng::{par_replicas, split_seed, SeedSpec, StreamRng};
pub use special::{abs_normal_moment, beta, log_gamma};
pub use stats::{mc_lm_norm, mc_mean, ols_fit, pearson, LineFit, McEstimate, Moment};
