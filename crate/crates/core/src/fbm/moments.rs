use super::constants::{c_h, check_hurst, mvn_kernel, pos_pow};
use crate::error::{domain, Result};
use crate::numerics::{adaptive_quad, QuadOptions, Singularity};
use crate::Real;

/// Second moments of the part of the increment driven by the noise after
/// time `v`:
/// `B̃_s = ∫_v^s K(s,r) dW_r` and `B̃_{s,t} = ∫_v^t K(t,r) dW_r - B̃_s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalMoments<T> {
    /// `E[B̃_s^2] = (s - v)^{2H} / (2H)`.
    pub sigma_s_sq: T,
    /// `E[B̃_{s,t}^2]`.
    pub sigma_st_sq: T,
    /// `E[B̃_s B̃_{s,t}]`.
    pub rho_st: T,
    /// `sigma_st_sq - rho_st^2 / sigma_s_sq`, the conditional variance of
    /// `B̃_{s,t}` given `B̃_s`.
    pub kappa_st_sq: T,
}

pub fn conditional_increment_moments<T: Real>(v: T, s: T, t: T, hurst: T) -> Result<ConditionalMoments<T>> {
    conditional_increment_moments_with(v, s, t, hurst, &QuadOptions::default())
}

pub fn conditional_increment_moments_with<T: Real>(
    v: T,
    s: T,
    t: T,
    hurst: T,
    opts: &QuadOptions,
) -> Result<ConditionalMoments<T>> {
    check_hurst(hurst)?;
    if !(v >= T::zero() && v < s && s < t) {
        return domain(format!("conditional moments need 0 <= v < s < t, got ({v}, {s}, {t})"));
    }
    let two_h = T::lit(2.0) * hurst;
    let len = s - v;
    let gap = t - s;
    let sigma_s_sq = len.powf(two_h) / two_h;
    let rho_st = kernel_product_integral(v, s, t, hurst, opts)? - sigma_s_sq;
    let a = hurst - T::lit(0.5);
    let p = T::one() / two_h.min(hurst + T::lit(0.5));
    let diff_sq = |x: T| {
        let d = (x + gap).powf(a) - pos_pow(x, a);
        d * d
    };
    let spread = adaptive_quad(diff_sq, T::zero(), len, &opts.singular(Singularity::Lower).power(p.as_f64()))?;
    let sigma_st_sq = gap.powf(two_h) / two_h + spread;
    let kappa_st_sq = sigma_st_sq - rho_st * rho_st / sigma_s_sq;
    Ok(ConditionalMoments { sigma_s_sq, sigma_st_sq, rho_st, kappa_st_sq })
}

/// `∫_v^s K(s,r) K(t,r) dr` for `0 <= v < s <= t`.
pub fn kernel_product_integral<T: Real>(v: T, s: T, t: T, hurst: T, opts: &QuadOptions) -> Result<T> {
    check_hurst(hurst)?;
    if !(v >= T::zero() && v < s && s <= t) {
        return domain(format!("kernel product needs 0 <= v < s <= t, got ({v}, {s}, {t})"));
    }
    let a = hurst - T::lit(0.5);
    let gap = t - s;
    // x = s - r; the x^a factor is removed exactly by the power substitution.
    let f = |x: T| pos_pow(x, a) * (x + gap).powf(a);
    let f_diag = |x: T| pos_pow(x, a + a);
    let p = if gap == T::zero() {
        T::one() / (T::lit(2.0) * hurst)
    } else {
        T::one() / (hurst + T::lit(0.5))
    };
    let opts = opts.singular(Singularity::Lower).power(p.as_f64());
    if gap == T::zero() {
        adaptive_quad(f_diag, T::zero(), s - v, &opts)
    } else {
        adaptive_quad(f, T::zero(), s - v, &opts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelCorrelation<T> {
    /// `∫_v^s K(s,r) K(t,r) dr`.
    pub value: T,
    /// `(s-v)^{2H}/(2H) + (s-v)^{2H-1}(t-s)/2 - (c_H/2)(t-s)^{2H}`.
    pub asymptotic: T,
    /// `value - asymptotic`, which is `O((t-s)^2 (s-v)^{2H-2})`.
    pub remainder: T,
}

/// Kernel correlation over `[v, s]` split into its small-gap expansion and
/// remainder. Requires `v < s <= t`, `t - s <= s - v` and `H != 1/2`.
pub fn kernel_correlation<T: Real>(v: T, s: T, t: T, hurst: T) -> Result<KernelCorrelation<T>> {
    check_hurst(hurst)?;
    if hurst == T::lit(0.5) {
        return domain("kernel correlation expansion assumes H != 1/2");
    }
    if !(v >= T::zero() && v < s && s <= t && t - s <= s - v) {
        return domain(format!("kernel correlation needs v < s <= t, t - s <= s - v, got ({v}, {s}, {t})"));
    }
    let two_h = T::lit(2.0) * hurst;
    let len = s - v;
    let gap = t - s;
    if gap == T::zero() {
        let value = len.powf(two_h) / two_h;
        return Ok(KernelCorrelation { value, asymptotic: value, remainder: T::zero() });
    }
    let asymptotic = len.powf(two_h) / two_h + T::lit(0.5) * len.powf(two_h - T::one()) * gap
        - c_h(hurst)? / T::lit(2.0) * gap.powf(two_h);
    let scale = len.powf(two_h);
    let value = kernel_product_integral(v, s, t, hurst, &QuadOptions::with_tol(1e-15 * scale.as_f64()))?;
    Ok(KernelCorrelation { value, asymptotic, remainder: value - asymptotic })
}

/// `∫_{-A}^{s} K(s,r) K(t,r) dr` for `0 <= s <= t`, the kernel representation
/// of `fbm_cov(s, t, H, 0)` with the noise truncated below `-A`. The
/// neglected tail is `H_a^2 s t A^{2H-2} / (2 - 2H) (1 + o(1))` with
/// `H_a = H - 1/2`.
pub fn kernel_covariance_truncated<T: Real>(s: T, t: T, hurst: T, window: T, tol: f64) -> Result<T> {
    check_hurst(hurst)?;
    let (s, t) = if s <= t { (s, t) } else { (t, s) };
    if s < T::zero() || !(window > T::zero()) {
        return domain("truncated kernel covariance needs nonnegative times and a positive window");
    }
    if s == T::zero() {
        return Ok(T::zero());
    }
    let a = hurst - T::lit(0.5);
    let two_h = T::lit(2.0) * hurst;
    // x = -r > 0: ((s+x)^a - x^a)((t+x)^a - x^a), stable for large x.
    let diff = |x: T, u: T| {
        let ratio = u / x;
        if ratio < T::lit(0.5) {
            x.powf(a) * (a * ratio.ln_1p()).exp_m1()
        } else {
            (x + u).powf(a) - x.powf(a)
        }
    };
    let past = |x: T| diff(x, s) * diff(x, t);
    let near_p = T::one() / two_h.min(hurst + T::lit(0.5));
    let mut total = T::zero();
    let mut lo = T::zero();
    let mut hi = s.min(window);
    let mut pieces = 0usize;
    let piece_tol = tol / 128.0;
    while lo < window {
        let opts = if lo == T::zero() {
            QuadOptions::with_tol(piece_tol).singular(Singularity::Lower).power(near_p.as_f64())
        } else {
            QuadOptions::with_tol(piece_tol)
        };
        total += adaptive_quad(past, lo, hi, &opts)?;
        lo = hi;
        hi = (hi * T::lit(2.0)).min(window);
        pieces += 1;
        if pieces > 100_000 {
            return domain("truncation window too large");
        }
    }
    // r in [0, s]: x = s - r, K(s,r) K(t,r) = x^a (x + t - s)^a.
    let gap = t - s;
    let p = if gap == T::zero() { T::one() / two_h } else { T::one() / (hurst + T::lit(0.5)) };
    let present = |x: T| mvn_kernel(s, s - x, hurst) * mvn_kernel(t, s - x, hurst);
    total += adaptive_quad(
        present,
        T::zero(),
        s,
        &QuadOptions::with_tol(tol / 4.0).singular(Singularity::Lower).power(p.as_f64()),
    )?;
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbm::fbm_cov;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn brownian_case_is_explicit() {
        let m = conditional_increment_moments(0.2_f64, 1.0, 1.3, 0.5).unwrap();
        assert!((m.sigma_s_sq - 0.8).abs() < 1e-12);
        assert!(m.rho_st.abs() < 1e-9);
        assert!((m.sigma_st_sq - 0.3).abs() < 1e-9);
    }

    #[test]
    fn sigma_s_is_closed_form() {
        for &h in &[0.2, 0.5, 0.8] {
            let m = conditional_increment_moments(0.25, 1.0, 1.5, h).unwrap();
            assert_eq!(m.sigma_s_sq, 0.75_f64.powf(2.0 * h) / (2.0 * h));
        }
    }

    #[test]
    fn increment_variance_vanishes_as_gap_closes() {
        for &h in &[0.3_f64, 0.7] {
            let mut prev = f64::INFINITY;
            for k in 2..14 {
                let m = conditional_increment_moments(0.0, 1.0, 1.0 + 2f64.powi(-k), h).unwrap();
                assert!(m.sigma_st_sq < prev && m.sigma_st_sq > 0.0);
                prev = m.sigma_st_sq;
            }
            // The innovation part cannot carry more variance than the increment.
            assert!(prev <= c_h(h).unwrap() * 2f64.powf(-13.0 * 2.0 * h));
        }
    }

    #[test]
    fn rho_follows_full_small_gap_expansion() {
        let h = 0.7;
        let gap = 0.01_f64;
        let m = conditional_increment_moments(0.0, 1.0, 1.0 + gap, h).unwrap();
        let leading = 0.5 * gap;
        let expansion = leading - c_h(h).unwrap() / 2.0 * gap.powf(2.0 * h);
        assert!((m.rho_st - leading).abs() / leading < 0.4);
        assert!((m.rho_st - expansion).abs() < gap * gap);
    }

    #[test]
    fn kappa_is_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let h: f64 = rng.random_range(0.05..0.95);
            let v: f64 = rng.random_range(0.0..1.0);
            let s = v + rng.random_range(1e-3..1.0);
            let t = s + rng.random_range(1e-4..1.0);
            let m = conditional_increment_moments(v, s, t, h).unwrap();
            assert!(m.kappa_st_sq >= 0.0, "{h} {v} {s} {t} {m:?}");
            assert!(m.kappa_st_sq <= m.sigma_st_sq);
        }
    }

    #[test]
    fn ordering_is_checked() {
        assert!(conditional_increment_moments(0.5, 0.5, 1.0, 0.3).is_err());
        assert!(conditional_increment_moments(0.0, 1.0, 1.0, 0.3).is_err());
        assert!(kernel_correlation(0.0, 1.0, 1.5, 0.5).is_err());
        assert!(kernel_correlation(0.0, 1.0, 2.5, 0.3).is_err());
    }

    #[test]
    fn diagonal_correlation_is_exact() {
        let k = kernel_correlation(0.0, 2.0, 2.0, 0.3).unwrap();
        assert_eq!(k.value, 2f64.powf(0.6) / 0.6);
        assert_eq!(k.remainder, 0.0);
    }

    fn remainder_ratios(h: f64) -> Vec<f64> {
        (3..=10)
            .map(|k| {
                let gap = 2f64.powi(-k);
                let r = kernel_correlation(0.0, 1.0, 1.0 + gap, h).unwrap();
                r.remainder.abs() / (gap * gap)
            })
            .collect()
    }

    #[test]
    fn remainder_is_quadratic_in_gap() {
        for &h in &[0.3_f64, 0.7] {
            let ratios = remainder_ratios(h);
            let max = ratios.iter().cloned().fold(0.0, f64::max);
            let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(max / min < 3.0, "H={h}: {ratios:?}");
            let a = h - 0.5;
            let limit = (a * (a - 1.0) / (2.0 * (2.0 * h - 2.0))).abs();
            assert!((ratios[7] - limit).abs() < 0.05 * limit, "H={h}: {} vs {limit}", ratios[7]);
        }
    }

    #[test]
    fn remainder_scales_with_interval_length() {
        let h = 0.7;
        let r1 = kernel_correlation(0.0, 1.0, 1.0 + 1.0 / 64.0, h).unwrap().remainder;
        let r2 = kernel_correlation(0.0, 4.0, 4.0 + 4.0 / 64.0, h).unwrap().remainder;
        assert!((r2 / r1 - 4f64.powf(2.0 * h)).abs() < 1e-4);
    }

    #[test]
    fn truncated_kernel_converges_to_covariance() {
        for &h in &[0.3_f64, 0.7] {
            let (s, t) = (0.3_f64, 0.7);
            let exact = fbm_cov(s, t, h, 0.0).unwrap();
            let a = h - 0.5;
            for &window in &[1e2, 1e3, 1e4] {
                let approx = kernel_covariance_truncated(s, t, h, window, 1e-12).unwrap();
                let tail = a * a * s * t * window.powf(2.0 * h - 2.0) / (2.0 - 2.0 * h);
                let err = exact - approx;
                assert!((err - tail).abs() < 0.05 * tail + 1e-10, "H={h} A={window}: {err} vs {tail}");
            }
            let far = kernel_covariance_truncated(s, t, h, 1e7, 1e-12).unwrap();
            assert!((far - exact).abs() < 1e-6);
        }
    }
}
