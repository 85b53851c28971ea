use std::sync::Arc;

use rayon::prelude::*;

use fracstoch::fbm::{sample_fbm, FbmConfig, FbmSampler, SampleMethod};
use fracstoch::fsde::{
    a_priori_rhs, builtin_holder_sigma, holder_seminorm, holder_seminorm_dyadic, mollify_coefficient, preset,
    uniqueness_probe, young_euler_solve, CoefficientPair, NormBounds, ProbeConfig,
};
use fracstoch::numerics::{ols_fit, SeedSpec};
use fracstoch::sewing::dyadic_partition;

fn sigma11(c: &CoefficientPair<f64>, x: f64) -> f64 {
    let mut out = [0.0];
    c.diffusion_into(&[x], &mut out);
    out[0]
}

#[test]
fn mollification_error_scales_like_one_plus_delta() {
    for delta in [0.25, 0.5] {
        let c = builtin_holder_sigma(delta, 1).unwrap();
        // below 2^-5 the kink dominates the smooth O(scale²) part on this box
        let scales: Vec<f64> = (5..=9).map(|k| 2f64.powi(-k)).collect();
        let errs: Vec<f64> = scales
            .iter()
            .map(|&eps| {
                let m = mollify_coefficient(&c, eps, 64).unwrap();
                // a uniform box grid plus a fine scan around the kink
                let pts = (0..=2000).map(|k| -0.5 + k as f64 / 2000.0).chain((-400..=400).map(|k| k as f64 * eps / 100.0));
                pts.fold(0.0_f64, |a, x| a.max((sigma11(&m, x) - sigma11(&c, x)).abs()))
            })
            .collect();
        let xs: Vec<f64> = scales.iter().map(|s| s.ln()).collect();
        let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
        let slope = ols_fit(&xs, &ys).unwrap().slope;
        assert!((slope - (1.0 + delta)).abs() < 0.2, "delta={delta} slope={slope} errs={errs:?}");
    }
}

#[test]
fn geometric_equation_converges_at_the_young_rate() {
    let h = 0.75;
    let linear = CoefficientPair::new(
        "linear",
        1,
        Arc::new(|_x: &[f64], out: &mut [f64]| out[0] = 0.0),
        Arc::new(|x: &[f64], out: &mut [f64]| out[0] = x[0]),
        NormBounds { drift_c1b: 0.0, sigma_c1b: f64::INFINITY, grad_sigma_holder: None },
    )
    .unwrap();
    let levels: Vec<u32> = (6..=12).collect();
    let finest = 14;
    let cfg = FbmConfig::new(h, 1.0, 1 << finest).unwrap().with_seed(SeedSpec::new(31, 0));
    let sampler = FbmSampler::new(&cfg, SampleMethod::Circulant).unwrap();
    let paths = 20;
    let mut mean_err = vec![0.0; levels.len()];
    for r in 0..paths {
        let b = sampler.sample(cfg.seed.child(r));
        for (e, &l) in mean_err.iter_mut().zip(&levels) {
            let x = young_euler_solve(&linear, &[1.0], &b, &dyadic_partition(1.0, l).unwrap()).unwrap();
            let stride = 1 << (finest - l);
            let err = (0..x.len()).fold(0.0_f64, |a, k| {
                a.max((x.column(0)[k] - (b.column(0)[k * stride] - b.column(0)[0]).exp()).abs())
            });
            *e += err / paths as f64;
        }
    }
    let xs: Vec<f64> = levels.iter().map(|&l| -(l as f64) * 2f64.ln()).collect();
    let ys: Vec<f64> = mean_err.iter().map(|e| e.ln()).collect();
    let rate = ols_fit(&xs, &ys).unwrap().slope;
    assert!(rate >= 2.0 * h - 1.0 - 0.15, "rate {rate}, errors {mean_err:?}");
}

#[test]
fn a_priori_constant_is_stable_across_drivers() {
    let (h, alpha) = (0.75, 0.6);
    let c = preset::<f64>("b", 0.4).unwrap();
    let bounds = *c.bounds();
    let cfg = FbmConfig::new(h, 1.0, 1 << 10).unwrap().with_seed(SeedSpec::new(41, 0));
    let sampler = FbmSampler::new(&cfg, SampleMethod::Circulant).unwrap();
    let p = dyadic_partition(1.0, 10).unwrap();
    let ratios: Vec<f64> = (0..100)
        .map(|r| {
            let b = sampler.sample(cfg.seed.child(r));
            let x0 = 0.5;
            let x = young_euler_solve(&c, &[x0], &b, &p).unwrap();
            let rhs = a_priori_rhs(x0, bounds.drift_c1b, bounds.sigma_c1b, holder_seminorm_dyadic(&b, alpha));
            holder_seminorm_dyadic(&x, alpha) / rhs
        })
        .collect();
    let fitted = ratios.iter().cloned().fold(0.0, f64::max);
    let smallest = ratios.iter().cloned().fold(f64::MAX, f64::min);
    assert!(fitted.is_finite() && smallest > 0.0);
    // the fitted constant is of order one and does not blow up on any driver
    assert!(fitted < 1.0, "{fitted}");
    assert!(fitted / smallest < 20.0, "{fitted} / {smallest}");
}

#[test]
fn dyadic_seminorm_matches_exact_on_sampled_paths() {
    let cfg = FbmConfig::new(0.7, 1.0, 512).unwrap().with_seed(SeedSpec::new(5, 5));
    let b = sample_fbm(&cfg, SampleMethod::Circulant).unwrap();
    for alpha in [0.3, 0.5, 0.65] {
        let exact = holder_seminorm(&b, alpha);
        let dy = holder_seminorm_dyadic(&b, alpha);
        assert!(dy <= exact && exact <= dy / (1.0 - 2f64.powf(-alpha)), "{alpha}: {dy} {exact}");
    }
}

#[test]
fn grid_refinement_self_convergence() {
    let coeffs: Vec<CoefficientPair<f64>> = ["a", "b"]
        .iter()
        .map(|n| preset::<f64>(n, 0.4).unwrap())
        .collect();
    // at H = 0.6 the h^{2H-1} bias only dominates the fluctuations on fine meshes
    for (h, finest) in [(0.6, 19), (0.75, 12), (0.9, 12)] {
        let cfg = FbmConfig::new(h, 1.0, 1 << finest).unwrap().with_seed(SeedSpec::new(51, 0));
        let sampler = FbmSampler::new(&cfg, SampleMethod::Circulant).unwrap();
        let parts: Vec<_> = (finest - 4..=finest).map(|l| dyadic_partition(1.0, l).unwrap()).collect();
        let monotone: Vec<[bool; 2]> = (0..100u64)
            .into_par_iter()
            .map(|r| {
                let b = sampler.sample(cfg.seed.child(r));
                let mut out = [false; 2];
                for (o, c) in out.iter_mut().zip(&coeffs) {
                    let sols: Vec<_> = parts.iter().map(|p| young_euler_solve(c, &[0.0], &b, p).unwrap()).collect();
                    let d: Vec<f64> = sols.windows(2).map(|w| w[0].sup_distance(&w[1]).unwrap()).collect();
                    *o = d[d.len() - 3..].windows(2).all(|w| w[1] < w[0]);
                }
                out
            })
            .collect();
        for (k, c) in coeffs.iter().enumerate() {
            let count = monotone.iter().filter(|m| m[k]).count();
            assert!(count >= 90, "H={h} {}: {count}/100", c.name());
        }
    }
}

#[test]
fn probe_converges_above_the_strong_threshold() {
    let c = builtin_holder_sigma(0.4, 1).unwrap();
    let scales: Vec<f64> = (4..=8).map(|k| 2f64.powi(-k)).collect();
    let mut cfg = ProbeConfig::new(0.75, vec![0.0], (8..=12).collect(), scales, 8).with_seed(SeedSpec::new(61, 0));
    cfg.hermite_order = 24;
    let report = uniqueness_probe(&c, &cfg).unwrap();
    assert!(report.passed, "{:?} decay {:?}", report.diagonal_distances, report.fitted_decay);
    assert!(report.fitted_decay.unwrap() > 0.0);
}

#[test]
fn two_dimensional_general_preset_runs() {
    let c = preset::<f64>("c", 0.3).unwrap();
    let m = mollify_coefficient(&c, 0.1, 8).unwrap();
    let cfg = FbmConfig::new(0.75, 1.0, 256).unwrap().with_dim(2).with_seed(SeedSpec::new(71, 0));
    let b = sample_fbm(&cfg, SampleMethod::Circulant).unwrap();
    let x = young_euler_solve(&m, &[0.0, 0.0], &b, &dyadic_partition(1.0, 8).unwrap()).unwrap();
    assert_eq!(x.dim(), 2);
    assert!(x.final_state().iter().all(|v| v.is_finite()));
}
