//! Fractional Brownian motion: constants, covariance, the Mandelbrot–van
//! Ness kernel, exact samplers and the conditional second-moment structure.

mod constants;
mod moments;
mod path;
mod sampler;

pub use constants::{c_h, fbm_cov, fgn_autocovariance, mvn_kernel};
pub use moments::{
    conditional_increment_moments, conditional_increment_moments_with, kernel_correlation,
    kernel_covariance_truncated, kernel_product_integral, ConditionalMoments, KernelCorrelation,
};
pub use path::{DrivingNoise, FbmPath, PathMethod, Provenance};
pub use sampler::{sample_fbm, sample_fbm_with_noise, FbmConfig, FbmSampler, SampleMethod, DEFAULT_WINDOW};
