//! Young differential equations `dX = b(X) dt + σ(X) dB` driven by fBM with
//! `H > 1/2`.

mod coefficients;
mod holder;
mod probe;
mod solver;

pub use coefficients::{
    builtin_holder_sigma, delta_thresholds, mollify_coefficient, preset, CoefficientPair, DeltaThresholds, Field,
    NormBounds,
};
pub use holder::{a_priori_rhs, holder_seminorm, holder_seminorm_dyadic, GridPath};
pub use probe::{uniqueness_probe, PairDistance, ProbeConfig, UniquenessReport, PLATEAU_FACTOR};
pub use solver::{young_euler_solve, young_solve, DriverRef, SolutionPath, SolverTag};
