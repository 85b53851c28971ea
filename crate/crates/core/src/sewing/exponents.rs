use crate::error::{Error, Result};
use crate::Real;

/// Exponents of the stochastic sewing hypotheses. `lag` is the constant
/// `M` of the lag condition `M (t_3 - t_1) <= t_1 - t_0`; it has no effect
/// on any computation and is kept for reporting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SewingExponents<T> {
    pub alpha: T,
    pub beta1: T,
    pub beta2: T,
    pub m: T,
    pub lag: T,
}

impl<T: Real> SewingExponents<T> {
    pub fn new(alpha: T, beta1: T, beta2: T, m: T, lag: T) -> Result<Self> {
        let e = Self { alpha, beta1, beta2, m, lag };
        e.validate()?;
        Ok(e)
    }

    /// Requires `β₁ > 1`, `β₂ > 1/2` and `β₁ - α > 1/2`, together with
    /// `α >= 0`, `m >= 2` and `M >= 0`.
    pub fn validate(&self) -> Result<()> {
        let half = T::lit(0.5);
        if !(self.alpha >= T::zero() && self.m >= T::lit(2.0) && self.lag >= T::zero()) {
            return Err(Error::Domain(format!(
                "need alpha >= 0, m >= 2, M >= 0, got alpha={}, m={}, M={}",
                self.alpha, self.m, self.lag
            )));
        }
        if !(self.beta1 > T::one()) {
            return Err(Error::Domain(format!("beta1 must exceed 1, got {}", self.beta1)));
        }
        if !(self.beta2 > half) {
            return Err(Error::Domain(format!("beta2 must exceed 1/2, got {}", self.beta2)));
        }
        if !(self.beta1 - self.alpha > half) {
            return Err(Error::Domain(format!(
                "beta1 - alpha must exceed 1/2, got {}",
                self.beta1 - self.alpha
            )));
        }
        Ok(())
    }
}
