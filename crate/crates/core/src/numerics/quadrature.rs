use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::Real;

pub const DEFAULT_HERMITE_ORDER: usize = 64;

/// Gauss–Hermite rule for the weight `e^{-x²}` (physicists' convention).
/// Nodes are ascending; they are always computed in `f64`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(order: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::Config(format!(
                "Gauss-Hermite order must be at least 2, got {order}"
            )));
        }
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let pim4 = std::f64::consts::PI.powf(-0.25);
        let mut z = 0.0_f64;
        // Newton iteration on the orthonormal Hermite recurrence, with the
        // classical asymptotic starting guesses for the largest roots.
        for i in 0..n.div_ceil(2) {
            z = match i {
                0 => (2.0 * n as f64 + 1.0).sqrt() - 1.855_75 * (2.0 * n as f64 + 1.0).powf(-0.166_67),
                1 => z - 1.14 * (n as f64).powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[n - 1],
                3 => 1.91 * z - 0.91 * nodes[n - 2],
                _ => 2.0 * z - nodes[n - 1 - (i - 2)],
            };
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
                }
                pp = (2.0 * n as f64).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            nodes[n - 1 - i] = z;
            nodes[i] = -z;
            weights[n - 1 - i] = 2.0 / (pp * pp);
            weights[i] = weights[n - 1 - i];
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(Self { nodes, weights })
    }

    /// Cached rule of the given order.
    pub fn cached(order: usize) -> Result<Arc<Self>> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussHermite>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(rule) = cache.lock().expect("hermite cache poisoned").get(&order) {
            return Ok(Arc::clone(rule));
        }
        let rule = Arc::new(Self::new(order)?);
        cache
            .lock()
            .expect("hermite cache poisoned")
            .insert(order, Arc::clone(&rule));
        Ok(rule)
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `E[g(mu + sigma Z)]` for standard normal `Z`.
    pub fn expect<T: Real, G: Fn(T) -> T>(&self, g: G, mu: T, sigma: T) -> T {
        if sigma == T::zero() {
            return g(mu);
        }
        let scale = sigma * T::SQRT_2();
        let mut acc = T::zero();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += T::lit(w) * g(mu + scale * T::lit(x));
        }
        acc / T::PI().sqrt()
    }
}

/// `E[g(mu + sigma Z)]` with an `order`-point Gauss–Hermite rule. Exact for
/// polynomials of degree below `2 * order`.
pub fn gauss_hermite_expect<T: Real, G: Fn(T) -> T>(
    g: G,
    mu: T,
    sigma: T,
    order: usize,
) -> Result<T> {
    Ok(GaussHermite::cached(order)?.expect(g, mu, sigma))
}

/// Where an integrable endpoint singularity sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Singularity {
    None,
    Lower,
    Upper,
    Both,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    /// Absolute error target.
    pub tol: f64,
    pub max_subdivisions: usize,
    pub singularity: Singularity,
    /// Exponent `p` of the substitution `x = a + (b-a) u^p` applied at a
    /// singular endpoint. `p = 2` is the square-root substitution; choosing
    /// `p = 1/(1+q)` for an `|x-a|^q` singularity removes it exactly.
    pub power: f64,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_subdivisions: 20_000,
            singularity: Singularity::None,
            power: 2.0,
        }
    }
}

impl QuadOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }

    pub fn singular(mut self, singularity: Singularity) -> Self {
        self.singularity = singularity;
        self
    }

    pub fn power(mut self, power: f64) -> Self {
        self.power = power;
        self
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: T,
    pub intervals: usize,
}

// Gauss–Kronrod 7/15 abscissae and weights (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn kronrod15<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let center = half * (a + b);
    let half_len = half * (b - a);
    let fc = f(center);
    let mut kronrod = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = half_len * T::lit(XGK[j]);
        let pair = f(center - dx) + f(center + dx);
        kronrod += T::lit(WGK[j]) * pair;
        if j % 2 == 1 {
            gauss += T::lit(WG[j / 2]) * pair;
        }
    }
    let value = kronrod * half_len;
    let error = ((kronrod - gauss) * half_len).abs();
    (value, error)
}

struct Segment<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

impl<T: Real> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T: Real> Eq for Segment<T> {}
impl<T: Real> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.a.partial_cmp(&self.a).unwrap_or(Ordering::Equal))
    }
}

fn adaptive_plain<T: Real, F: Fn(T) -> T>(
    f: &F,
    a: T,
    b: T,
    tol: T,
    max_subdivisions: usize,
) -> std::result::Result<QuadResult<T>, QuadResult<T>> {
    let (value, error) = kronrod15(f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let mut total_error = error;
    let mut stuck = T::zero();
    while total_error + stuck > tol {
        if heap.len() >= max_subdivisions {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = T::lit(0.5) * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // Interval cannot be split further in this precision.
            stuck += worst.error;
            total_error -= worst.error;
            heap.push(Segment { error: T::zero(), ..worst });
            if heap.iter().all(|s| s.error == T::zero()) {
                break;
            }
            continue;
        }
        let (v1, e1) = kronrod15(f, worst.a, mid);
        let (v2, e2) = kronrod15(f, mid, worst.b);
        total_error = total_error - worst.error + e1 + e2;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
        if heap.len() % 64 == 0 {
            // Refresh the running sum to keep cancellation drift out of it.
            total_error = heap.iter().map(|s| s.error).fold(T::zero(), |x, y| x + y);
        }
    }
    let mut segments = heap.into_vec();
    segments.sort_by(|x, y| x.a.partial_cmp(&y.a).unwrap_or(Ordering::Equal));
    let value = segments.iter().fold(T::zero(), |acc, s| acc + s.value);
    let error = segments.iter().fold(T::zero(), |acc, s| acc + s.error) + stuck;
    let result = QuadResult { value, error, intervals: segments.len() };
    if error <= tol {
        Ok(result)
    } else {
        Err(result)
    }
}

/// Adaptive Gauss–Kronrod quadrature returning value, error bound and the
/// number of subintervals used.
pub fn adaptive_quad_detailed<T: Real, F: Fn(T) -> T>(
    f: F,
    a: T,
    b: T,
    opts: &QuadOptions,
) -> Result<QuadResult<T>> {
    if !(a < b) {
        return Err(Error::Domain(format!("adaptive_quad requires a < b, got [{a}, {b}]")));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::Domain("adaptive_quad requires tol > 0".into()));
    }
    match opts.singularity {
        Singularity::Both => {
            let mid = T::lit(0.5) * (a + b);
            let half_tol = QuadOptions { tol: 0.5 * opts.tol, ..*opts };
            let left = one_sided(&f, a, mid, &half_tol.singular(Singularity::Lower))?;
            let right = one_sided(&f, mid, b, &half_tol.singular(Singularity::Upper))?;
            Ok(QuadResult {
                value: left.value + right.value,
                error: left.error + right.error,
                intervals: left.intervals + right.intervals,
            })
        }
        _ => one_sided(&f, a, b, opts),
    }
}

fn one_sided<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, opts: &QuadOptions) -> Result<QuadResult<T>> {
    let tol = T::lit(opts.tol);
    let p = T::lit(opts.power);
    let one = T::one();
    let len = b - a;
    let res = match opts.singularity {
        Singularity::Lower => {
            let g = |u: T| {
                let x = a + len * u.powf(p);
                // Use the distance actually represented by x, so rounding
                // near the endpoint moves the node instead of the value.
                let d = x - a;
                if d <= T::zero() {
                    return T::zero();
                }
                len * p * (d / len).powf((p - one) / p) * f(x)
            };
            adaptive_plain(&g, T::zero(), one, tol, opts.max_subdivisions)
        }
        Singularity::Upper => {
            let g = |u: T| {
                let x = b - len * u.powf(p);
                let d = b - x;
                if d <= T::zero() {
                    return T::zero();
                }
                len * p * (d / len).powf((p - one) / p) * f(x)
            };
            adaptive_plain(&g, T::zero(), one, tol, opts.max_subdivisions)
        }
        _ => adaptive_plain(f, a, b, tol, opts.max_subdivisions),
    };
    res.map_err(|r| Error::Accuracy { estimate: r.value.as_f64(), error_bound: r.error.as_f64() })
}

/// Adaptive quadrature of `f` over `[a, b]` to absolute error `opts.tol`.
pub fn adaptive_quad<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, opts: &QuadOptions) -> Result<T> {
    adaptive_quad_detailed(f, a, b, opts).map(|r| r.value)
}

/// `E[g(mu + sigma Z)]` by adaptive quadrature against the normal density.
/// Use this for discontinuous `g`, where Hermite rules converge slowly.
pub fn gaussian_density_expect<T: Real, G: Fn(T) -> T>(g: G, mu: T, sigma: T, tol: f64) -> Result<T> {
    if sigma == T::zero() {
        return Ok(g(mu));
    }
    let norm = T::one() / (T::TAU()).sqrt();
    let half = T::lit(0.5);
    let integrand = |z: T| g(mu + sigma * z) * norm * (-half * z * z).exp();
    let width = T::lit(12.0);
    let opts = QuadOptions::with_tol(0.5 * tol);
    let left = adaptive_quad(integrand, -width, T::zero(), &opts)?;
    let right = adaptive_quad(integrand, T::zero(), width, &opts)?;
    Ok(left + right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn hermite_rejects_low_order() {
        assert!(GaussHermite::new(1).is_err());
        assert!(gauss_hermite_expect(|x: f64| x, 0.0, 1.0, 0).is_err());
    }

    #[test]
    fn hermite_trivial_expectations() {
        let one = gauss_hermite_expect(|_x: f64| 1.0, 0.3, 2.0, 64).unwrap();
        assert_relative_eq!(one, 1.0, epsilon = 1e-13);
        let m2 = gauss_hermite_expect(|x: f64| x * x, 0.0, 1.0, 64).unwrap();
        assert_relative_eq!(m2, 1.0, epsilon = 1e-13);
        let abs = gauss_hermite_expect(|x: f64| x.abs(), 0.0, 1.0, 64).unwrap();
        // |x| has a kink, so Hermite only converges algebraically.
        assert!((abs - (2.0 / PI).sqrt()).abs() < 1e-2, "{abs}");
        let exact = gaussian_density_expect(|x: f64| x.abs(), 0.0, 1.0, 1e-12).unwrap();
        assert_relative_eq!(exact, (2.0 / PI).sqrt(), epsilon = 1e-11);
        assert_eq!(gauss_hermite_expect(|x: f64| x.sin(), 0.7, 0.0, 8).unwrap(), 0.7_f64.sin());
    }

    #[test]
    fn hermite_is_exact_up_to_degree_2n_minus_1() {
        // E Z^k = (k-1)!! for even k.
        let order = 6;
        for k in 0..(2 * order) {
            let want = if k % 2 == 1 { 0.0 } else { (1..k).step_by(2).map(|j| j as f64).product() };
            let got = gauss_hermite_expect(|x: f64| x.powi(k as i32), 0.0, 1.0, order).unwrap();
            assert!((got - want).abs() < 1e-10 * want.max(1.0), "k={k}: {got} vs {want}");
        }
        let beyond = gauss_hermite_expect(|x: f64| x.powi(12), 0.0, 1.0, order).unwrap();
        assert!((beyond - 10395.0).abs() > 1.0);
    }

    #[test]
    fn hermite_weights_sum_to_sqrt_pi() {
        for order in [2, 3, 10, 64, 100] {
            let rule = GaussHermite::new(order).unwrap();
            let s: f64 = rule.weights().iter().sum();
            assert_relative_eq!(s, PI.sqrt(), max_relative = 1e-12);
            assert!(rule.nodes().windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn quad_reference_integrals() {
        let opts = QuadOptions::with_tol(1e-12);
        assert_relative_eq!(adaptive_quad(|_x: f64| 1.0, 0.0, 1.0, &opts).unwrap(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(adaptive_quad(f64::sin, 0.0, PI, &opts).unwrap(), 2.0, epsilon = 1e-12);
        let singular = opts.singular(Singularity::Lower);
        assert_relative_eq!(
            adaptive_quad(|x: f64| x.powf(-0.5), 0.0, 1.0, &singular).unwrap(),
            2.0,
            epsilon = 1e-12
        );
        let upper = QuadOptions::with_tol(1e-12).singular(Singularity::Upper);
        assert_relative_eq!(
            adaptive_quad(|x: f64| (1.0 - x).powf(-0.8), 0.0, 1.0, &upper.power(5.0)).unwrap(),
            5.0,
            epsilon = 1e-10
        );
        let both = QuadOptions::with_tol(1e-12).singular(Singularity::Both);
        assert_relative_eq!(
            adaptive_quad(|x: f64| 1.0 / (x * (1.0 - x)).sqrt(), 0.0, 1.0, &both).unwrap(),
            PI,
            epsilon = 1e-10
        );
    }

    #[test]
    fn kronrod_is_exact_for_polynomials() {
        let (v, _) = kronrod15(&|x: f64| x.powi(20), -1.0, 1.0);
        assert_relative_eq!(v, 2.0 / 21.0, max_relative = 1e-14);
    }

    #[test]
    fn quad_reports_nonconvergence() {
        let opts = QuadOptions { tol: 1e-14, max_subdivisions: 4, ..QuadOptions::default() };
        match adaptive_quad(|x: f64| (50.0 * x).sin().abs(), 0.0, 10.0, &opts) {
            Err(Error::Accuracy { estimate, error_bound }) => {
                assert!(estimate.is_finite());
                assert!(error_bound > 1e-14);
            }
            other => panic!("expected accuracy error, got {other:?}"),
        }
        assert!(adaptive_quad(|x: f64| x, 1.0, 0.0, &QuadOptions::default()).is_err());
    }

    #[test]
    fn density_expectation_handles_jumps() {
        let half = gaussian_density_expect(|x: f64| if x > 0.0 { 1.0 } else { 0.0 }, 0.0, 1.0, 1e-10).unwrap();
        assert_relative_eq!(half, 0.5, epsilon = 1e-9);
        let abs = gaussian_density_expect(|x: f64| x.abs(), 0.0, 1.0, 1e-11).unwrap();
        assert_relative_eq!(abs, (2.0 / PI).sqrt(), epsilon = 1e-10);
    }
}
