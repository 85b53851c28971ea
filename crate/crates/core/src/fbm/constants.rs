use crate::error::{domain, Result};
use crate::numerics::beta;
use crate::Real;

pub(crate) fn check_hurst<T: Real>(hurst: T) -> Result<()> {
    if hurst > T::zero() && hurst < T::one() {
        Ok(())
    } else {
        domain(format!("Hurst parameter must lie in (0, 1), got {hurst}"))
    }
}

/// Increment variance constant: `E[(B_t - B_s)^2] = c_H |t - s|^{2H}` for
/// the Mandelbrot–van Ness normalization,
/// `c_H = (3/2 - H) / (2H) * B(2 - 2H, H + 1/2)`.
pub fn c_h<T: Real>(hurst: T) -> Result<T> {
    check_hurst(hurst)?;
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    Ok((T::lit(1.5) - hurst) / (two * hurst) * beta(two - two * hurst, hurst + half)?)
}

/// `x_+^a`, with the positive part vanishing for `x <= 0` whatever `a` is.
/// For `a = 0` this is the indicator of `x > 0`.
#[inline]
pub(crate) fn pos_pow<T: Real>(x: T, a: T) -> T {
    if x > T::zero() {
        if a == T::zero() {
            T::one()
        } else {
            x.powf(a)
        }
    } else {
        T::zero()
    }
}

/// `K_H(t, s) = (t - s)_+^{H - 1/2} - (-s)_+^{H - 1/2}`.
pub fn mvn_kernel<T: Real>(t: T, s: T, hurst: T) -> T {
    let a = hurst - T::lit(0.5);
    pos_pow(t - s, a) - pos_pow(-s, a)
}

/// `E[(B_s - B(0))(B_t - B(0))] + var0 = var0 + (c_H/2)(t^{2H} + s^{2H} - |t-s|^{2H})`.
pub fn fbm_cov<T: Real>(s: T, t: T, hurst: T, var0: T) -> Result<T> {
    if s < T::zero() || t < T::zero() {
        return domain(format!("fbm_cov requires nonnegative times, got ({s}, {t})"));
    }
    let ch = c_h(hurst)?;
    let two_h = T::lit(2.0) * hurst;
    let pw = |x: T| if x == T::zero() { T::zero() } else { x.powf(two_h) };
    Ok(var0 + ch / T::lit(2.0) * (pw(t) + pw(s) - pw((t - s).abs())))
}

/// Autocovariance at lag `k` of fBM increments over steps of length `step`:
/// `(c_H/2)(|k+1|^{2H} + |k-1|^{2H} - 2|k|^{2H}) step^{2H}`.
pub fn fgn_autocovariance<T: Real>(k: usize, hurst: T, step: T) -> Result<T> {
    let ch = c_h(hurst)?;
    let two_h = T::lit(2.0) * hurst;
    let kf = T::from_usize_lossy(k);
    let pw = |x: T| if x == T::zero() { T::zero() } else { x.powf(two_h) };
    let raw = pw(kf + T::one()) + pw((kf - T::one()).abs()) - T::lit(2.0) * pw(kf);
    Ok(ch / T::lit(2.0) * raw * step.powf(two_h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{adaptive_quad, QuadOptions, Singularity};

    #[test]
    fn c_h_at_one_half_is_one() {
        assert!((c_h(0.5_f64).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn c_h_matches_beta_integral_quadrature() {
        for &h in &[0.25_f64, 0.75, 0.1, 0.9] {
            let (a, b) = (2.0 - 2.0 * h, h + 0.5);
            // Split at 1/2 and reflect the right half so both pieces are
            // singular only at 0.
            let left = |x: f64| x.powf(a - 1.0) * (1.0 - x).powf(b - 1.0);
            let right = |y: f64| y.powf(b - 1.0) * (1.0 - y).powf(a - 1.0);
            let opts = QuadOptions::with_tol(1e-13).singular(Singularity::Lower);
            let b_quad = adaptive_quad(left, 0.0, 0.5, &opts.power(1.0 / a)).unwrap()
                + adaptive_quad(right, 0.0, 0.5, &opts.power(1.0 / b)).unwrap();
            let want = (1.5 - h) / (2.0 * h) * b_quad;
            let got = c_h(h).unwrap();
            assert!((got - want).abs() < 1e-10, "H={h}: {got} vs {want}");
        }
    }

    #[test]
    fn c_h_domain() {
        assert!(c_h(0.0_f64).is_err());
        assert!(c_h(1.0_f64).is_err());
        assert!(c_h(-0.2_f64).is_err());
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(mvn_kernel(1.0, 2.0, 0.7), 0.0);
        assert!((mvn_kernel(1.0_f64, 0.5, 0.7) - 0.5_f64.powf(0.2)).abs() < 1e-15);
        for &(t, s, want) in &[(1.0, 0.5, 1.0), (1.0, -0.5, 0.0), (1.0, 1.5, 0.0), (1.0, 0.0, 1.0)] {
            assert_eq!(mvn_kernel(t, s, 0.5_f64), want, "t={t} s={s}");
        }
    }

    #[test]
    fn covariance_examples() {
        for &(s, t) in &[(0.2_f64, 0.9_f64), (1.5, 0.3), (0.0, 2.0)] {
            assert!((fbm_cov(s, t, 0.5, 0.0).unwrap() - s.min(t)).abs() < 1e-14);
            assert_eq!(fbm_cov(s, t, 0.3, 0.1).unwrap(), fbm_cov(t, s, 0.3, 0.1).unwrap());
        }
        let h = 0.3_f64;
        let t = 1.7_f64;
        let diag = fbm_cov(t, t, h, 0.25).unwrap();
        assert!((diag - (0.25 + c_h(h).unwrap() * t.powf(2.0 * h))).abs() < 1e-14);
        assert!(fbm_cov(-0.1, 1.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn fgn_lag_zero_is_increment_variance() {
        let g0 = fgn_autocovariance(0, 0.7_f64, 0.25).unwrap();
        assert!((g0 - c_h(0.7_f64).unwrap() * 0.25_f64.powf(1.4)).abs() < 1e-15);
        assert!(fgn_autocovariance(3, 0.5_f64, 0.1).unwrap().abs() < 1e-16);
    }
}
