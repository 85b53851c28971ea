//! Numerical toolkit for fractional stochastic calculus.
//!
//! * [`fbm`]: fractional Brownian motion constants, covariance, the
//!   Mandelbrot–van Ness kernel and exact samplers.
//! * [`sewing`]: partitions, germs, Riemann sums and empirical `L_m`
//!   convergence-rate estimation.
//! * [`integrals`]: Itô (left-point) and Stratonovich (trapezoid) sums,
//!   power variation and their oracles.
//! * [`local_time`]: up-crossing, crossing-count and occupation-density
//!   local-time estimators.
//! * [`fsde`]: Young differential equations driven by fBM.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`, which is what the experiments use.

pub mod error;
pub mod fbm;
pub mod fsde;
pub mod integrals;
pub mod local_time;
pub mod numerics;
pub mod scalar;
pub mod sewing;

pub use error::{Error, Result};
pub use scalar::Real;

pub type FbmPath = fbm::FbmPath<f64>;
pub type FbmConfig = fbm::FbmConfig<f64>;
pub type Partition = sewing::Partition<f64>;
pub type McEstimate = numerics::McEstimate<f64>;
pub type RateFitResult = sewing::RateFitResult<f64>;
pub type LocalTimeCurve = local_time::LocalTimeCurve<f64>;
pub type IntegrandSpec = integrals::IntegrandSpec<f64>;
pub type CoefficientPair = fsde::CoefficientPair<f64>;
pub type SolutionPath = fsde::SolutionPath<f64>;

pub use numerics::SeedSpec;
