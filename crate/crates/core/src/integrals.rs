//! Riemann-type stochastic integrals along fBM: left-point (Itô) and
//! trapezoid (Stratonovich) sums, power variation, and the chain-rule,
//! conditional-expectation and Gaussian-smoothing oracles.

use std::fmt;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fbm::{conditional_increment_moments, FbmPath};
use crate::numerics::{gauss_hermite_expect, gaussian_density_expect, DEFAULT_HERMITE_ORDER};
use crate::sewing::{Germ, Partition};
use crate::Real;

type VectorField<T> = Arc<dyn Fn(&[T], &mut [T]) + Send + Sync>;
type Potential<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;

/// What is known about an integrand.
#[derive(Clone)]
pub enum Regularity<T> {
    /// Merely bounded, possibly discontinuous.
    Bounded,
    /// `γ`-Hölder continuous.
    Holder(T),
    /// `f = ∇φ` for the carried potential `φ`.
    Gradient(Potential<T>),
}

impl<T: Real> fmt::Debug for Regularity<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regularity::Bounded => write!(f, "Bounded"),
            Regularity::Holder(g) => write!(f, "Holder({g})"),
            Regularity::Gradient(_) => write!(f, "Gradient"),
        }
    }
}

/// How to evaluate `E[g(m + σZ)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmoothingRule {
    /// Gauss–Hermite with the given order, for smooth `g`.
    Hermite(usize),
    /// Adaptive quadrature against the normal density, for `g` with jumps
    /// or kinks. The value is the absolute tolerance.
    Density(f64),
}

/// A map `f: R^d -> R^d` with its regularity tag.
#[derive(Clone)]
pub struct IntegrandSpec<T> {
    name: String,
    dim: usize,
    f: VectorField<T>,
    regularity: Regularity<T>,
}

impl<T: Real> fmt::Debug for IntegrandSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IntegrandSpec")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("regularity", &self.regularity)
            .finish()
    }
}

impl<T: Real> IntegrandSpec<T> {
    pub fn scalar(name: impl Into<String>, f: impl Fn(T) -> T + Send + Sync + 'static, regularity: Regularity<T>) -> Self {
        Self {
            name: name.into(),
            dim: 1,
            f: Arc::new(move |x: &[T], out: &mut [T]| out[0] = f(x[0])),
            regularity,
        }
    }

    pub fn vector(
        name: impl Into<String>,
        dim: usize,
        f: impl Fn(&[T], &mut [T]) + Send + Sync + 'static,
        regularity: Regularity<T>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("integrand dimension must be at least 1".into()));
        }
        Ok(Self { name: name.into(), dim, f: Arc::new(f), regularity })
    }

    /// Built-in scalar integrands: `identity`, `sign`, `sin_prime` (cos),
    /// `abs_pow:<gamma>` (`|x|^gamma`) and `indicator_pos` (`1{x > 0}`).
    pub fn from_key(key: &str) -> Result<Self> {
        let potential = |phi: fn(T) -> T| -> Regularity<T> { Regularity::Gradient(Arc::new(move |x: &[T]| phi(x[0]))) };
        match key {
            "identity" => Ok(Self::scalar(key, |x| x, potential(|x| x * x / T::lit(2.0)))),
            "sign" => Ok(Self::scalar(
                key,
                |x: T| if x > T::zero() { T::one() } else if x < T::zero() { -T::one() } else { T::zero() },
                Regularity::Bounded,
            )),
            "sin_prime" => Ok(Self::scalar(key, |x: T| x.cos(), potential(|x| x.sin()))),
            "indicator_pos" => Ok(Self::scalar(
                key,
                |x: T| if x > T::zero() { T::one() } else { T::zero() },
                Regularity::Bounded,
            )),
            _ => {
                if let Some(g) = key.strip_prefix("abs_pow:") {
                    let gamma: f64 = g
                        .trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("bad exponent in integrand key {key:?}")))?;
                    if !(gamma > 0.0 && gamma <= 1.0) {
                        return Err(Error::Config(format!("abs_pow exponent must lie in (0, 1], got {gamma}")));
                    }
                    let gt = T::lit(gamma);
                    Ok(Self::scalar(key, move |x: T| x.abs().powf(gt), Regularity::Holder(gt)))
                } else {
                    Err(Error::Config(format!("unknown integrand key {key:?}")))
                }
            }
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn regularity(&self) -> &Regularity<T> {
        &self.regularity
    }

    pub fn is_gradient(&self) -> bool {
        matches!(self.regularity, Regularity::Gradient(_))
    }

    pub fn potential(&self) -> Option<&Potential<T>> {
        match &self.regularity {
            Regularity::Gradient(phi) => Some(phi),
            _ => None,
        }
    }

    pub fn eval_into(&self, x: &[T], out: &mut [T]) {
        (self.f)(x, out)
    }

    /// `f(x)` for a one-dimensional integrand.
    pub fn eval_scalar(&self, x: T) -> T {
        let mut out = [T::zero()];
        (self.f)(&[x], &mut out);
        out[0]
    }

    /// Hermite for gradients and Lipschitz integrands, density quadrature
    /// otherwise.
    pub fn smoothing_rule(&self) -> SmoothingRule {
        match self.regularity {
            Regularity::Gradient(_) => SmoothingRule::Hermite(DEFAULT_HERMITE_ORDER),
            Regularity::Holder(g) if g >= T::one() => SmoothingRule::Hermite(DEFAULT_HERMITE_ORDER),
            _ => SmoothingRule::Density(1e-10),
        }
    }
}

fn check_dim<T: Real>(f: &IntegrandSpec<T>, path: &FbmPath<T>) -> Result<()> {
    if f.dim != path.dim() {
        return Err(Error::Domain(format!(
            "integrand dimension {} does not match path dimension {}",
            f.dim,
            path.dim()
        )));
    }
    Ok(())
}

static ROUGH_ITO_WARNED: AtomicBool = AtomicBool::new(false);

/// `f(B_s) · (B_t - B_s)`, and `(f(B_s) + f(B_t))/2 · (B_t - B_s)` when
/// `trapezoid` is set.
fn integral_term<T: Real>(f: &IntegrandSpec<T>, path: &FbmPath<T>, i: usize, j: usize, trapezoid: bool) -> T {
    let cols = path.columns();
    if f.dim == 1 {
        let c = &cols[0];
        let inc = c[j] - c[i];
        let w = if trapezoid {
            (f.eval_scalar(c[i]) + f.eval_scalar(c[j])) / T::lit(2.0)
        } else {
            f.eval_scalar(c[i])
        };
        return w * inc;
    }
    let d = f.dim;
    let xs: Vec<T> = cols.iter().map(|c| c[i]).collect();
    let mut fs = vec![T::zero(); d];
    f.eval_into(&xs, &mut fs);
    if trapezoid {
        let xt: Vec<T> = cols.iter().map(|c| c[j]).collect();
        let mut ft = vec![T::zero(); d];
        f.eval_into(&xt, &mut ft);
        for (a, b) in fs.iter_mut().zip(&ft) {
            *a = (*a + *b) / T::lit(2.0);
        }
    }
    let mut acc = T::zero();
    for (k, c) in cols.iter().enumerate() {
        acc += fs[k] * (c[j] - c[i]);
    }
    acc
}

/// `Σ_{[s,t] ∈ π} f(B_s) · (B_t - B_s)`. Convergent for `H > 1/2`; for
/// rougher paths the sum is still returned (a warning is logged once).
pub fn ito_left_sum<T: Real>(f: &IntegrandSpec<T>, path: &FbmPath<T>, partition: &Partition<T>) -> Result<T> {
    check_dim(f, path)?;
    if path.hurst() <= T::lit(0.5) && !ROUGH_ITO_WARNED.swap(true, Ordering::Relaxed) {
        log::warn!("left-point sums with H = {} <= 1/2 are not expected to converge", path.hurst());
    }
    let idx = partition.grid_indices(path)?;
    Ok(idx.windows(2).fold(T::zero(), |acc, w| acc + integral_term(f, path, w[0], w[1], false)))
}

fn check_trapezoid<T: Real>(f: &IntegrandSpec<T>, path: &FbmPath<T>) -> Result<()> {
    check_dim(f, path)?;
    if f.dim > 1 && path.hurst() <= T::lit(0.25) && !f.is_gradient() {
        return Err(Error::Precondition(format!(
            "trapezoid sums in dimension {} with H = {} <= 1/4 need a gradient integrand (∂_i f^j = ∂_j f^i)",
            f.dim,
            path.hurst()
        )));
    }
    Ok(())
}

/// `Σ_{[s,t] ∈ π} (f(B_s) + f(B_t))/2 · (B_t - B_s)`.
pub fn stratonovich_trapezoid_sum<T: Real>(
    f: &IntegrandSpec<T>,
    path: &FbmPath<T>,
    partition: &Partition<T>,
) -> Result<T> {
    check_trapezoid(f, path)?;
    let idx = partition.grid_indices(path)?;
    Ok(idx.windows(2).fold(T::zero(), |acc, w| acc + integral_term(f, path, w[0], w[1], true)))
}

fn increment_norm<T: Real>(path: &FbmPath<T>, i: usize, j: usize) -> T {
    let cols = path.columns();
    if cols.len() == 1 {
        (cols[0][j] - cols[0][i]).abs()
    } else {
        cols.iter().map(|c| (c[j] - c[i]) * (c[j] - c[i])).fold(T::zero(), |a, b| a + b).sqrt()
    }
}

/// `Σ_{[s,t] ∈ π} |B_t - B_s|^p` (Euclidean norm for several components).
pub fn variation_sum<T: Real>(path: &FbmPath<T>, partition: &Partition<T>, p: T) -> Result<T> {
    if !(p > T::zero()) {
        return Err(Error::Domain(format!("variation exponent must be positive, got {p}")));
    }
    let idx = partition.grid_indices(path)?;
    Ok(idx.windows(2).fold(T::zero(), |acc, w| acc + increment_norm(path, w[0], w[1]).powf(p)))
}

/// `φ(B_τ) - φ(B_0)`, the limit of trapezoid sums of `∇φ`.
pub fn chain_rule_oracle<T: Real>(phi: impl Fn(&[T]) -> T, path: &FbmPath<T>) -> T {
    let last = path.len() - 1;
    phi(&path.state(last)) - phi(&path.state(0))
}

/// `E[f(m + σZ)]` for standard normal `Z`.
pub fn gaussian_smooth<T: Real>(f: impl Fn(T) -> T, m: T, sigma: T, rule: SmoothingRule) -> Result<T> {
    if !(sigma >= T::zero()) {
        return Err(Error::Domain(format!("smoothing scale must be nonnegative, got {sigma}")));
    }
    match rule {
        SmoothingRule::Hermite(order) => gauss_hermite_expect(f, m, sigma, order),
        SmoothingRule::Density(tol) => gaussian_density_expect(f, m, sigma, tol),
    }
}

/// `E[f(B_s)(B_t - B_s) | F_v]` for a one-dimensional integrand along a
/// path sampled with its driving noise. Writing `B = Y + B̃` with `Y` built
/// from the noise up to `v`,
/// `E[... | F_v] = a_0 Y_{s,t} + a_1 ρ_{s,t}` where `a_0 = E f(Y_s + X)`,
/// `a_1 = σ_s^{-2} E[f(Y_s + X) X]` and `X ~ N(0, σ_s^2)`.
pub fn conditional_ito_oracle<T: Real>(f: &IntegrandSpec<T>, path: &FbmPath<T>, v: T, s: T, t: T) -> Result<T> {
    let parts = conditional_ito_parts(f, path, v, s, t)?;
    Ok(parts.value)
}

/// The ingredients of [`conditional_ito_oracle`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalItoParts<T> {
    pub y_s: T,
    pub y_st: T,
    pub sigma_s_sq: T,
    pub sigma_st_sq: T,
    pub rho_st: T,
    pub a0: T,
    pub a1: T,
    pub value: T,
}

pub fn conditional_ito_parts<T: Real>(
    f: &IntegrandSpec<T>,
    path: &FbmPath<T>,
    v: T,
    s: T,
    t: T,
) -> Result<ConditionalItoParts<T>> {
    if f.dim != 1 || path.dim() != 1 {
        return Err(Error::Domain("conditional oracle is one-dimensional".into()));
    }
    if path.provenance().noise.is_none() {
        return Err(Error::Capability("conditional oracle needs a path sampled with its driving noise".into()));
    }
    if !(v < s && s < t) {
        return Err(Error::Domain(format!("conditional oracle needs v < s < t, got ({v}, {s}, {t})")));
    }
    let find = |x: T| {
        path.index_of_time(x)
            .ok_or_else(|| Error::Alignment(format!("{x} is not a grid time of the path")))
    };
    let (kv, ks, kt) = (find(v)?, find(s)?, find(t)?);
    let y_s = path.past_projection(0, kv, ks)?;
    let y_t = path.past_projection(0, kv, kt)?;
    let y_st = y_t - y_s;
    let mom = conditional_increment_moments(v, s, t, path.hurst())?;
    let sd = mom.sigma_s_sq.sqrt();
    let rule = f.smoothing_rule();
    let a0 = gaussian_smooth(|x| f.eval_scalar(x), y_s, sd, rule)?;
    let a1 = gaussian_smooth(|x| f.eval_scalar(y_s + x) * x, T::zero(), sd, rule)? / mom.sigma_s_sq;
    Ok(ConditionalItoParts {
        y_s,
        y_st,
        sigma_s_sq: mom.sigma_s_sq,
        sigma_st_sq: mom.sigma_st_sq,
        rho_st: mom.rho_st,
        a0,
        a1,
        value: a0 * y_st + a1 * mom.rho_st,
    })
}

/// Germ `f(B_s) · B_{s,t}`.
pub struct ItoGerm<'a, T>(pub &'a IntegrandSpec<T>);

impl<T: Real> Germ<T> for ItoGerm<'_, T> {
    fn name(&self) -> String {
        format!("ito:{}", self.0.name)
    }

    fn eval(&self, path: &FbmPath<T>, i: usize, j: usize) -> T {
        integral_term(self.0, path, i, j, false)
    }
}

/// Germ `(f(B_s) + f(B_t))/2 · B_{s,t}`.
pub struct StratonovichGerm<'a, T>(pub &'a IntegrandSpec<T>);

impl<T: Real> Germ<T> for StratonovichGerm<'_, T> {
    fn name(&self) -> String {
        format!("strat:{}", self.0.name)
    }

    fn eval(&self, path: &FbmPath<T>, i: usize, j: usize) -> T {
        integral_term(self.0, path, i, j, true)
    }
}

/// Germ `|B_{s,t}|^p`.
pub struct VariationGerm<T>(pub T);

impl<T: Real> Germ<T> for VariationGerm<T> {
    fn name(&self) -> String {
        format!("variation:{}", self.0)
    }

    fn eval(&self, path: &FbmPath<T>, i: usize, j: usize) -> T {
        if i == j {
            T::zero()
        } else {
            increment_norm(path, i, j).powf(self.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbm::{sample_fbm, sample_fbm_with_noise, FbmConfig, SampleMethod};
    use crate::numerics::SeedSpec;
    use crate::sewing::dyadic_partition;
    use proptest::prelude::*;

    fn path(h: f64, n: usize, dim: usize, seed: u64) -> FbmPath<f64> {
        let cfg = FbmConfig::new(h, 1.0, n).unwrap().with_dim(dim).with_var0(0.3).with_seed(SeedSpec::new(seed, 1));
        sample_fbm(&cfg, SampleMethod::Circulant).unwrap()
    }

    #[test]
    fn constant_integrand_telescopes() {
        let p = path(0.7, 128, 3, 1);
        let ones = IntegrandSpec::vector("ones", 3, |_x: &[f64], out: &mut [f64]| out.fill(1.0), Regularity::Bounded).unwrap();
        let part = dyadic_partition(1.0, 5).unwrap();
        let s = ito_left_sum(&ones, &p, &part).unwrap();
        let want: f64 = p.columns().iter().map(|c| c[128] - c[0]).sum();
        assert!((s - want).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let p = path(0.7, 16, 2, 1);
        let f = IntegrandSpec::from_key("identity").unwrap();
        assert!(matches!(ito_left_sum(&f, &p, &dyadic_partition(1.0, 2).unwrap()), Err(Error::Domain(_))));
    }

    #[test]
    fn gradient_condition_enforced_for_rough_vector_sums() {
        let p = path(0.2, 16, 2, 2);
        let part = dyadic_partition(1.0, 3).unwrap();
        let rot = |x: &[f64], out: &mut [f64]| {
            out[0] = -x[1];
            out[1] = x[0];
        };
        let f = IntegrandSpec::vector("rotation", 2, rot, Regularity::Holder(1.0)).unwrap();
        assert!(matches!(stratonovich_trapezoid_sum(&f, &p, &part), Err(Error::Precondition(_))));
        let grad = |x: &[f64], out: &mut [f64]| out.copy_from_slice(x);
        let phi: Potential<f64> = Arc::new(|x: &[f64]| 0.5 * (x[0] * x[0] + x[1] * x[1]));
        let g = IntegrandSpec::vector("radial", 2, grad, Regularity::Gradient(phi.clone())).unwrap();
        let s = stratonovich_trapezoid_sum(&g, &p, &part).unwrap();
        assert!((s - chain_rule_oracle(|x| phi(x), &p)).abs() < 1e-12);
        let smooth = path(0.3, 16, 2, 2);
        assert!(stratonovich_trapezoid_sum(&f, &smooth, &part).is_ok());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn trapezoid_identity_is_exact(mask in prop::collection::vec(any::<bool>(), 255), seed in 0u64..1000) {
            let p = path(0.3, 256, 1, seed);
            let times = p.times();
            let pts: Vec<f64> = std::iter::once(0.0)
                .chain((1..256).filter(|&k| mask[k - 1]).map(|k| times[k]))
                .chain(std::iter::once(1.0))
                .collect();
            let part = Partition::new(pts).unwrap();
            let f = IntegrandSpec::from_key("identity").unwrap();
            let s = stratonovich_trapezoid_sum(&f, &p, &part).unwrap();
            let v = p.values();
            let want = 0.5 * (v[256] * v[256] - v[0] * v[0]);
            prop_assert!((s - want).abs() < 1e-12);
        }
    }

    #[test]
    fn variation_examples() {
        let flat = FbmPath::synthetic(0.3, vec![0.0, 0.5, 1.0], vec![2.0, 2.0, 2.0]).unwrap();
        let part = Partition::new(vec![0.0, 0.5, 1.0]).unwrap();
        assert_eq!(variation_sum(&flat, &part, 3.0).unwrap(), 0.0);
        assert!(variation_sum(&flat, &part, 0.0).is_err());
        let line = FbmPath::synthetic(0.3, vec![0.0, 0.5, 1.0], vec![0.0, 1.0, 3.0]).unwrap();
        assert_eq!(variation_sum(&line, &part, 2.0).unwrap(), 5.0);
    }

    #[test]
    fn chain_rule_examples() {
        let p = path(0.4, 32, 1, 3);
        let v = p.values();
        assert_eq!(chain_rule_oracle(|x| x[0], &p), v[32] - v[0]);
        assert_eq!(chain_rule_oracle(|x| x[0] * x[0] / 2.0, &p), v[32] * v[32] / 2.0 - v[0] * v[0] / 2.0);
        assert_eq!(chain_rule_oracle(|_| 7.0, &p), 0.0);
    }

    #[test]
    fn smoothing_examples() {
        let h = SmoothingRule::Hermite(DEFAULT_HERMITE_ORDER);
        let d = SmoothingRule::Density(1e-12);
        assert!((gaussian_smooth(|x: f64| 3.0 * x - 1.0, 0.4, 2.0, h).unwrap() - 0.2).abs() < 1e-12);
        assert!((gaussian_smooth(|x: f64| x * x, 0.4, 2.0, h).unwrap() - 4.16).abs() < 1e-12);
        let ind = IntegrandSpec::from_key("indicator_pos").unwrap();
        assert_eq!(ind.smoothing_rule(), SmoothingRule::Density(1e-10));
        assert!((gaussian_smooth(|x: f64| ind.eval_scalar(x), 0.0, 1.3, d).unwrap() - 0.5).abs() < 1e-11);
    }

    #[test]
    fn registry() {
        for key in ["identity", "sign", "sin_prime", "abs_pow:0.9", "indicator_pos"] {
            let f = IntegrandSpec::<f64>::from_key(key).unwrap();
            assert_eq!(f.name(), key);
            assert_eq!(f.dim(), 1);
        }
        assert!(IntegrandSpec::<f64>::from_key("abs_pow:x").is_err());
        assert!(IntegrandSpec::<f64>::from_key("tanh").is_err());
        let f = IntegrandSpec::<f64>::from_key("abs_pow:0.5").unwrap();
        assert_eq!(f.eval_scalar(-4.0), 2.0);
        let s = IntegrandSpec::<f64>::from_key("sign").unwrap();
        assert_eq!((s.eval_scalar(-0.1), s.eval_scalar(0.0), s.eval_scalar(2.0)), (-1.0, 0.0, 1.0));
    }

    fn noisy_path(h: f64) -> FbmPath<f64> {
        let cfg = FbmConfig::new(h, 1.0, 64).unwrap().with_var0(0.2).with_seed(SeedSpec::new(17, 0));
        sample_fbm_with_noise(&cfg, 5.0).unwrap()
    }

    #[test]
    fn conditional_oracle_closed_forms() {
        let p = noisy_path(0.75);
        let (v, s, t) = (0.25, 0.5, 0.625);
        let one = IntegrandSpec::scalar("one", |_x: f64| 1.0, Regularity::Holder(1.0));
        let parts = conditional_ito_parts(&one, &p, v, s, t).unwrap();
        assert!((parts.value - parts.y_st).abs() < 1e-12);
        let id = IntegrandSpec::from_key("identity").unwrap();
        let q = conditional_ito_parts(&id, &p, v, s, t).unwrap();
        assert!((q.value - (q.y_s * q.y_st + q.rho_st)).abs() < 1e-11);
    }

    #[test]
    fn conditional_oracle_needs_noise() {
        let p = path(0.75, 64, 1, 4);
        let f = IntegrandSpec::from_key("sign").unwrap();
        assert!(matches!(conditional_ito_oracle(&f, &p, 0.25, 0.5, 0.75), Err(Error::Capability(_))));
    }

    #[test]
    fn germs_match_sums() {
        let p = path(0.6, 64, 1, 5);
        let part = dyadic_partition(1.0, 4).unwrap();
        let f = IntegrandSpec::from_key("sin_prime").unwrap();
        let idx = part.grid_indices(&p).unwrap();
        let ito = crate::sewing::riemann_sum_indices(&ItoGerm(&f), &p, &idx);
        assert_eq!(ito, ito_left_sum(&f, &p, &part).unwrap());
        let st = crate::sewing::riemann_sum_indices(&StratonovichGerm(&f), &p, &idx);
        assert_eq!(st, stratonovich_trapezoid_sum(&f, &p, &part).unwrap());
        let var = crate::sewing::riemann_sum_indices(&VariationGerm(1.5), &p, &idx);
        assert_eq!(var, variation_sum(&p, &part, 1.5).unwrap());
        assert_eq!(VariationGerm(1.5).eval(&p, 3, 3), 0.0);
    }
}
