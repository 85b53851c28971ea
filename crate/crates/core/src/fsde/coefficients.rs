use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{split_seed, GaussHermite, SeedSpec};
use crate::Real;

/// `x -> out` with `out` of length `d` (drift) or `d * d` row-major
/// (diffusion).
pub type Field<T> = Arc<dyn Fn(&[T], &mut [T]) + Send + Sync>;

/// Declared upper bounds. Norms use the largest absolute entry:
/// `‖f‖_{C¹_b} = sup |f| + sup |∇f|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormBounds<T> {
    pub drift_c1b: T,
    pub sigma_c1b: T,
    /// Hölder exponent of `∇σ`, when known.
    pub grad_sigma_holder: Option<T>,
}

/// Coefficients of `dX = b(X) dt + σ(X) dB`.
#[derive(Clone)]
pub struct CoefficientPair<T> {
    name: String,
    dim: usize,
    drift: Field<T>,
    diffusion: Field<T>,
    bounds: NormBounds<T>,
    /// `σ(x)` is symmetric and positive definite everywhere.
    symmetric_pd: bool,
}

impl<T: Real> fmt::Debug for CoefficientPair<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientPair")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("bounds", &self.bounds)
            .field("symmetric_pd", &self.symmetric_pd)
            .finish()
    }
}

impl<T: Real> CoefficientPair<T> {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        drift: Field<T>,
        diffusion: Field<T>,
        bounds: NormBounds<T>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("coefficient dimension must be at least 1".into()));
        }
        Ok(Self { name: name.into(), dim, drift, diffusion, bounds, symmetric_pd: false })
    }

    pub fn with_symmetric_pd(mut self, flag: bool) -> Self {
        self.symmetric_pd = flag;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// `b ≡ 0`, `σ ≡ s` (row-major `d × d`).
    pub fn constant(diffusion: Vec<T>, dim: usize) -> Result<Self> {
        if diffusion.len() != dim * dim {
            return Err(Error::Domain(format!("constant diffusion needs {} entries", dim * dim)));
        }
        let sup = diffusion.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let s = diffusion.clone();
        Self::new(
            "constant",
            dim,
            Arc::new(|_x: &[T], out: &mut [T]| out.fill(T::zero())),
            Arc::new(move |_x: &[T], out: &mut [T]| out.copy_from_slice(&s)),
            NormBounds { drift_c1b: T::zero(), sigma_c1b: sup, grad_sigma_holder: None },
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bounds(&self) -> &NormBounds<T> {
        &self.bounds
    }

    pub fn is_symmetric_pd(&self) -> bool {
        self.symmetric_pd
    }

    pub fn drift_field(&self) -> &Field<T> {
        &self.drift
    }

    pub fn diffusion_field(&self) -> &Field<T> {
        &self.diffusion
    }

    pub fn drift_into(&self, x: &[T], out: &mut [T]) {
        (self.drift)(x, out)
    }

    pub fn diffusion_into(&self, x: &[T], out: &mut [T]) {
        (self.diffusion)(x, out)
    }

    /// Replaces the drift, keeping the diffusion.
    pub fn with_drift(mut self, drift: Field<T>, drift_c1b: T) -> Self {
        self.drift = drift;
        self.bounds.drift_c1b = drift_c1b;
        self
    }

    /// Checks the declared `C¹_b` bounds at `samples` uniform points of
    /// `[-half_width, half_width]^d`, with central differences of step
    /// `1e-6` for the gradients. Returns the largest observed
    /// `(‖b‖_{C¹_b}, ‖σ‖_{C¹_b})`.
    pub fn verify_bounds(&self, half_width: T, samples: usize, seed: SeedSpec) -> Result<(T, T)> {
        let mut rng = split_seed(seed);
        let d = self.dim;
        let h = T::lit(1e-6);
        let observe = |field: &Field<T>, width: usize, rng: &mut crate::numerics::StreamRng| {
            let (mut sup, mut grad) = (T::zero(), T::zero());
            let mut out = vec![T::zero(); width];
            let mut plus = vec![T::zero(); width];
            let mut minus = vec![T::zero(); width];
            for _ in 0..samples {
                let x: Vec<T> = (0..d).map(|_| half_width * T::lit(rng.random_range(-1.0..1.0))).collect();
                field(&x, &mut out);
                sup = out.iter().fold(sup, |m, v| m.max(v.abs()));
                for k in 0..d {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[k] += h;
                    xm[k] -= h;
                    field(&xp, &mut plus);
                    field(&xm, &mut minus);
                    for (p, m) in plus.iter().zip(&minus) {
                        grad = grad.max(((*p - *m) / (h + h)).abs());
                    }
                }
            }
            sup + grad
        };
        let b = observe(&self.drift, d, &mut rng);
        let s = observe(&self.diffusion, d * d, &mut rng);
        let slack = T::one() + T::lit(1e-6);
        if b > self.bounds.drift_c1b * slack || s > self.bounds.sigma_c1b * slack {
            return Err(Error::Precondition(format!(
                "declared bounds ({}, {}) violated by observed ({b}, {s}) for {}",
                self.bounds.drift_c1b, self.bounds.sigma_c1b, self.name
            )));
        }
        Ok((b, s))
    }
}

const HOLDER_KAPPA: f64 = 0.5;

/// Smooth bump `ψ(x) = exp(1 - 1/(1 - |x|²))` on the unit ball, `ψ(0) = 1`.
fn bump<T: Real>(x: &[T]) -> T {
    let r2 = x.iter().fold(T::zero(), |a, &v| a + v * v);
    if r2 >= T::one() {
        T::zero()
    } else {
        (T::one() - (T::one() - r2).recip()).exp()
    }
}

/// `σ_δ(x) = I (1 + κ ψ(x) sign(x₁) |x₁|^{1+δ})` with `κ = 1/2` and the
/// bump `ψ(x) = exp(1 - 1/(1 - |x|²))` supported on the unit ball. The
/// gradient is exactly `δ`-Hölder at the hyperplane `x₁ = 0`, and
/// `σ_δ(x)` is diagonal with entries in `[1/2, 3/2]`. The drift is zero.
pub fn builtin_holder_sigma<T: Real>(delta: T, dim: usize) -> Result<CoefficientPair<T>> {
    if !(delta > T::zero() && delta < T::one()) {
        return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    if dim == 0 {
        return Err(Error::Domain("dimension must be at least 1".into()));
    }
    let kappa = T::lit(HOLDER_KAPPA);
    let e = T::one() + delta;
    let sigma = move |x: &[T], out: &mut [T]| {
        let x1 = x[0];
        let g = if x1 == T::zero() { T::zero() } else { x1.signum() * x1.abs().powf(e) };
        let diag = T::one() + kappa * bump(x) * g;
        out.fill(T::zero());
        for k in 0..dim {
            out[k * dim + k] = diag;
        }
    };
    // sup |σ| <= 1 + κ; |∇σ| <= κ (sup |∇ψ| + (1 + δ)) since |g| <= 1 and
    // |g'| <= 1 + δ on the unit ball.
    let grad_bump = max_bump_gradient();
    let bound = T::one() + kappa + kappa * (T::lit(grad_bump) + e);
    let coeffs = CoefficientPair::new(
        format!("holder_sigma:{delta}"),
        dim,
        Arc::new(|_x: &[T], out: &mut [T]| out.fill(T::zero())),
        Arc::new(sigma),
        NormBounds { drift_c1b: T::zero(), sigma_c1b: bound, grad_sigma_holder: Some(delta) },
    )?;
    Ok(coeffs.with_symmetric_pd(true))
}

// sup_r ψ(r) 2r / (1 - r²)², by a fine scan with a safety margin.
fn max_bump_gradient() -> f64 {
    let mut best: f64 = 0.0;
    for k in 1..100_000 {
        let r = k as f64 / 100_000.0;
        let q = 1.0 - r * r;
        best = best.max((1.0 - 1.0 / q).exp() * 2.0 * r / (q * q));
    }
    best * 1.01
}

/// `σ^ε(x) = E σ(x + ε Z)` for standard normal `Z` in `R^d`, by a
/// tensorized Gauss–Hermite rule of the given order. Supports `d <= 2`.
/// The result is a finite mixture of shifted copies of `σ`: it fixes
/// affine maps exactly and is as smooth as the rule resolves.
pub fn mollify_coefficient<T: Real>(coeffs: &CoefficientPair<T>, scale: T, order: usize) -> Result<CoefficientPair<T>> {
    if !(scale > T::zero()) {
        return Err(Error::Domain(format!("mollification scale must be positive, got {scale}")));
    }
    let d = coeffs.dim;
    if d > 2 {
        return Err(Error::Capability(format!("mollification supports d <= 2, got d = {d}")));
    }
    let rule = GaussHermite::cached(order)?;
    // Standard normal nodes z_i = √2 x_i with weights w_i / √π.
    let nodes: Vec<(T, T)> = rule
        .nodes()
        .iter()
        .zip(rule.weights())
        .map(|(&x, &w)| (T::lit(x * std::f64::consts::SQRT_2), T::lit(w / std::f64::consts::PI.sqrt())))
        .collect();
    let sigma = coeffs.diffusion.clone();
    let width = d * d;
    let field = move |x: &[T], out: &mut [T]| {
        out.fill(T::zero());
        let mut buf = [T::zero(); 4];
        let mut shifted = [T::zero(); 2];
        if d == 1 {
            for &(z, w) in &nodes {
                shifted[0] = x[0] + scale * z;
                sigma(&shifted[..1], &mut buf[..1]);
                out[0] += w * buf[0];
            }
        } else {
            for &(z0, w0) in &nodes {
                for &(z1, w1) in &nodes {
                    shifted[0] = x[0] + scale * z0;
                    shifted[1] = x[1] + scale * z1;
                    sigma(&shifted, &mut buf[..width]);
                    let w = w0 * w1;
                    for k in 0..width {
                        out[k] += w * buf[k];
                    }
                }
            }
        }
    };
    let mut out = coeffs.clone();
    out.diffusion = Arc::new(field);
    out.name = format!("{}~{}", coeffs.name, scale);
    Ok(out)
}

/// Thresholds on the Hölder exponent `δ` of `∇σ`:
/// `strong = (1-H)(2-H)/(H(3-H))`, `weak = (1-H)(2-H)/(1+H-H²)` and the
/// classical Young threshold `young = (1-H)/H`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaThresholds<T> {
    pub strong: T,
    pub weak: T,
    pub young: T,
}

pub fn delta_thresholds<T: Real>(hurst: T) -> Result<DeltaThresholds<T>> {
    if !(hurst > T::lit(0.5) && hurst < T::one()) {
        return Err(Error::Domain(format!("thresholds need H in (1/2, 1), got {hurst}")));
    }
    let (one, two, three) = (T::one(), T::lit(2.0), T::lit(3.0));
    let num = (one - hurst) * (two - hurst);
    Ok(DeltaThresholds {
        strong: num / (hurst * (three - hurst)),
        weak: num / (one + hurst - hurst * hurst),
        young: (one - hurst) / hurst,
    })
}

/// Experiment presets: `a` has zero drift, `b` a bounded smooth drift with
/// symmetric positive-definite `σ`, `c` a general (non-symmetric)
/// two-dimensional `σ`, `constant` a constant diffusion.
pub fn preset<T: Real>(name: &str, delta: T) -> Result<CoefficientPair<T>> {
    match name {
        "a" => Ok(builtin_holder_sigma(delta, 1)?.with_name(format!("a:holder_sigma:{delta}"))),
        "b" => {
            let base = builtin_holder_sigma(delta, 1)?;
            let drift: Field<T> = Arc::new(|x: &[T], out: &mut [T]| out[0] = -(x[0].sin()) / T::lit(2.0));
            Ok(base.with_drift(drift, T::one()).with_name(format!("b:holder_sigma:{delta}")))
        }
        "c" => {
            let base = builtin_holder_sigma(delta, 2)?;
            let inner = base.diffusion.clone();
            let shear = T::lit(0.3);
            let sigma: Field<T> = Arc::new(move |x: &[T], out: &mut [T]| {
                inner(x, out);
                out[1] += shear * x[1].sin();
            });
            let drift: Field<T> = Arc::new(|x: &[T], out: &mut [T]| {
                out[0] = -(x[0].sin()) / T::lit(2.0);
                out[1] = (x[0] - x[1]).cos() / T::lit(4.0);
            });
            let bounds = NormBounds {
                drift_c1b: T::lit(1.25),
                sigma_c1b: base.bounds.sigma_c1b + shear + shear,
                grad_sigma_holder: Some(delta),
            };
            Ok(CoefficientPair {
                name: format!("c:holder_sigma:{delta}"),
                dim: 2,
                drift,
                diffusion: sigma,
                bounds,
                symmetric_pd: false,
            })
        }
        "constant" => Ok(CoefficientPair::constant(vec![T::lit(0.8)], 1)?),
        _ => Err(Error::Config(format!("unknown coefficient preset {name:?}"))),
    }
}
