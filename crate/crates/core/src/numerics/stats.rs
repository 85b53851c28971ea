use crate::error::{domain, Result};
use crate::Real;

/// Which statistic an estimate reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Moment<T> {
    Mean,
    /// `(E|X|^m)^{1/m}`.
    Lm(T),
}

/// A Monte Carlo statistic with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate<T> {
    pub value: T,
    pub stderr: T,
    pub replicas: usize,
    pub m_exponent: Moment<T>,
}

impl<T: Real> McEstimate<T> {
    /// `|value - target| <= k * stderr`.
    pub fn within(&self, target: T, k: T) -> bool {
        (self.value - target).abs() <= k * self.stderr
    }
}

fn mean_and_sd<T: Real>(xs: &[T]) -> (T, T) {
    let n = T::from_usize_lossy(xs.len());
    let mean = xs.iter().fold(T::zero(), |a, &x| a + x) / n;
    if xs.len() < 2 {
        return (mean, T::zero());
    }
    let ss = xs.iter().fold(T::zero(), |a, &x| a + (x - mean) * (x - mean));
    (mean, (ss / (n - T::one())).sqrt())
}

/// Sample mean with standard error `sd / sqrt(n)`.
pub fn mc_mean<T: Real>(samples: &[T]) -> Result<McEstimate<T>> {
    if samples.is_empty() {
        return domain("mc_mean of an empty sample");
    }
    let (mean, sd) = mean_and_sd(samples);
    Ok(McEstimate {
        value: mean,
        stderr: sd / T::from_usize_lossy(samples.len()).sqrt(),
        replicas: samples.len(),
        m_exponent: Moment::Mean,
    })
}

/// Empirical `L_m` norm `(mean |x|^m)^{1/m}` with a delta-method standard
/// error. `m = 2` takes the root-mean-square route directly.
pub fn mc_lm_norm<T: Real>(samples: &[T], m: T) -> Result<McEstimate<T>> {
    if samples.is_empty() {
        return domain("mc_lm_norm of an empty sample");
    }
    if !(m >= T::one()) {
        return domain(format!("mc_lm_norm requires m >= 1, got {m}"));
    }
    let n = T::from_usize_lossy(samples.len());
    let two = T::lit(2.0);
    let powers: Vec<T> = if m == two {
        samples.iter().map(|&x| x * x).collect()
    } else {
        samples.iter().map(|&x| x.abs().powf(m)).collect()
    };
    let (mean_pow, sd_pow) = mean_and_sd(&powers);
    let value = if m == two { mean_pow.sqrt() } else { mean_pow.powf(m.recip()) };
    // d/dy y^{1/m} = y^{1/m - 1} / m
    let stderr = if mean_pow > T::zero() {
        value / (m * mean_pow) * sd_pow / n.sqrt()
    } else {
        T::zero()
    };
    Ok(McEstimate { value, stderr, replicas: samples.len(), m_exponent: Moment::Lm(m) })
}

/// Ordinary least-squares line `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit<T> {
    pub slope: T,
    pub intercept: T,
    pub r_squared: T,
}

pub fn ols_fit<T: Real>(xs: &[T], ys: &[T]) -> Result<LineFit<T>> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return domain("ols_fit needs two equal-length samples of size >= 2");
    }
    let n = T::from_usize_lossy(xs.len());
    let mx = xs.iter().fold(T::zero(), |a, &x| a + x) / n;
    let my = ys.iter().fold(T::zero(), |a, &y| a + y) / n;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    let mut syy = T::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == T::zero() {
        return domain("ols_fit with constant abscissae");
    }
    let slope = sxy / sxx;
    let r_squared = if syy == T::zero() { T::one() } else { sxy * sxy / (sxx * syy) };
    Ok(LineFit { slope, intercept: my - slope * mx, r_squared })
}

/// Pearson correlation coefficient.
pub fn pearson<T: Real>(xs: &[T], ys: &[T]) -> Result<T> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return domain("pearson needs two equal-length samples of size >= 2");
    }
    let n = T::from_usize_lossy(xs.len());
    let mx = xs.iter().fold(T::zero(), |a, &x| a + x) / n;
    let my = ys.iter().fold(T::zero(), |a, &y| a + y) / n;
    let (mut sxx, mut syy, mut sxy) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if sxx == T::zero() || syy == T::zero() {
        return domain("pearson of a constant sample");
    }
    Ok(sxy / (sxx * syy).sqrt())
}
