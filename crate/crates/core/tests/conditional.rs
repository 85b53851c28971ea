use fracstoch::fbm::{sample_fbm_with_noise, FbmConfig};
use fracstoch::integrals::{conditional_ito_parts, IntegrandSpec};
use fracstoch::numerics::{split_seed, SeedSpec};
use rand::Rng;
use rand_distr::StandardNormal;

// ∫_0^L g(x) dx by the midpoint rule on the graded mesh x_k = L (k/N)^4,
// which resolves integrable power singularities at 0.
fn graded(g: impl Fn(f64) -> f64, len: f64) -> f64 {
    let n = 20_000;
    let x = |k: usize| len * (k as f64 / n as f64).powi(4);
    (0..n).map(|k| (x(k + 1) - x(k)) * g(0.5 * (x(k) + x(k + 1)))).sum()
}

// Covariance of (∫_v^s K(s,r)dW, ∫_v^t K(t,r)dW − ∫_v^s K(s,r)dW).
fn fresh_covariance(v: f64, s: f64, t: f64, h: f64) -> [f64; 3] {
    let a = h - 0.5;
    let (len, gap) = (s - v, t - s);
    let var_s = graded(|x| x.powf(2.0 * a), len);
    let cross = graded(|x| x.powf(a) * (x + gap).powf(a), len);
    let tail = graded(|x| x.powf(2.0 * a), gap);
    let spread = graded(|x| ((x + gap).powf(a) - x.powf(a)).powi(2), len);
    [var_s, cross - var_s, tail + spread]
}

fn mc_conditional(f: &IntegrandSpec<f64>, y_s: f64, y_st: f64, cov: [f64; 3], samples: usize, seed: u64) -> (f64, f64) {
    let [vs, c, vst] = cov;
    let l11 = vs.sqrt();
    let l21 = c / l11;
    let l22 = (vst - l21 * l21).max(0.0).sqrt();
    let mut rng = split_seed(SeedSpec::new(seed, 99));
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..samples {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        let xs = l11 * z1;
        let xst = l21 * z1 + l22 * z2;
        let v = f.eval_scalar(y_s + xs) * (y_st + xst);
        sum += v;
        sq += v * v;
    }
    let m = samples as f64;
    let mean = sum / m;
    (mean, ((sq / m - mean * mean) / m).sqrt())
}

#[test]
fn oracle_matches_brute_force_monte_carlo() {
    let keys = ["identity", "sign", "sin_prime", "abs_pow:0.5", "indicator_pos"];
    let mut rng = split_seed(SeedSpec::new(2024, 0));
    for case in 0..6u64 {
        let h = if case % 2 == 0 { 0.3 } else { 0.75 };
        let n = 64;
        let mut idx = [rng.random_range(0..n), rng.random_range(1..n), rng.random_range(1..=n)];
        idx.sort();
        if idx[0] == idx[1] || idx[1] == idx[2] {
            idx = [idx[0].min(n - 2), idx[0].min(n - 2) + 1, n];
        }
        let f = IntegrandSpec::from_key(keys[case as usize % keys.len()]).unwrap();
        let cfg = FbmConfig::new(h, 1.0, n).unwrap().with_seed(SeedSpec::new(7, case));
        let path = sample_fbm_with_noise(&cfg, 8.0).unwrap();
        let step = 1.0 / n as f64;
        let (v, s, t) = (idx[0] as f64 * step, idx[1] as f64 * step, idx[2] as f64 * step);
        let parts = conditional_ito_parts(&f, &path, v, s, t).unwrap();
        let cov = fresh_covariance(v, s, t, h);
        assert!((cov[0] - parts.sigma_s_sq).abs() < 1e-4 * cov[0]);
        let (mc, se) = mc_conditional(&f, parts.y_s, parts.y_st, cov, 40_000, case);
        assert!((mc - parts.value).abs() < 4.0 * se, "case {case} {} H={h}: oracle {} mc {mc} ± {se}", f.name(), parts.value);
    }
}
