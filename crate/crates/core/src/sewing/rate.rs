use std::io::Write;

use rayon::prelude::*;

use super::germ::{riemann_sum_indices, Germ};
use crate::error::{Error, Result};
use crate::fbm::{FbmConfig, FbmPath, FbmSampler, SampleMethod};
use crate::numerics::{mc_lm_norm, mc_mean, ols_fit, split_seed, McEstimate};
use crate::Real;

/// Fitted convergence exponent, or `Exact` when every distance is below
/// `1e-12` (additive germs).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonHat<T> {
    Exact,
    Fitted(T),
}

impl<T: Real> EpsilonHat<T> {
    pub fn value(self) -> Option<T> {
        match self {
            EpsilonHat::Exact => None,
            EpsilonHat::Fitted(e) => Some(e),
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, EpsilonHat::Exact)
    }
}

/// `L_m` distance of the sums at one level to the reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelDistance<T> {
    pub level: u32,
    pub mesh: T,
    pub lm_distance: McEstimate<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateFitResult<T> {
    pub germ: String,
    pub epsilon_hat: EpsilonHat<T>,
    /// Mean of the reference sums (finest level, or the exact limit).
    pub limit_estimate: McEstimate<T>,
    /// One entry per compared level, meshes strictly decreasing.
    pub per_level: Vec<LevelDistance<T>>,
    /// Levels that entered the log-log fit.
    pub fitted_levels: Vec<u32>,
    pub r_squared: T,
    pub m: T,
    pub replicas: usize,
}

impl<T: Real> RateFitResult<T> {
    pub fn distances(&self) -> Vec<T> {
        self.per_level.iter().map(|l| l.lm_distance.value).collect()
    }

    /// Whether the distances decrease strictly from coarse to fine.
    pub fn is_monotone_decreasing(&self) -> bool {
        self.per_level.windows(2).all(|w| w[1].lm_distance.value < w[0].lm_distance.value)
    }

    /// `mesh,lm_distance,stderr` rows, preceded by `extra` comment lines and
    /// followed by a summary comment.
    pub fn write_csv<W: Write>(&self, mut w: W, extra: &[String]) -> Result<()> {
        for line in extra {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "mesh,lm_distance,stderr")?;
        for l in &self.per_level {
            writeln!(w, "{:.16e},{:.16e},{:.16e}", l.mesh, l.lm_distance.value, l.lm_distance.stderr)?;
        }
        let eps = match self.epsilon_hat {
            EpsilonHat::Exact => "exact".to_string(),
            EpsilonHat::Fitted(e) => format!("{e}"),
        };
        writeln!(w, "# epsilon_hat={eps}, r2={}, m={}, replicas={}", self.r_squared, self.m, self.replicas)?;
        Ok(())
    }
}

/// What the sums at each level are compared against.
#[derive(Clone, Copy)]
pub enum RateReference<'a, T> {
    /// The finest level's sum proxies the limit; the two finest levels are
    /// left out of the fit.
    FinestLevel,
    /// Each level is compared with the next finer one; the distance is
    /// reported at the coarser mesh.
    Successive,
    /// A known limit computed from the path.
    Exact(&'a (dyn Fn(&FbmPath<T>) -> T + Sync)),
}

#[derive(Clone, Copy)]
pub struct RateOptions<'a, T> {
    pub reference: RateReference<'a, T>,
    pub method: SampleMethod,
}

impl<T> Default for RateOptions<'_, T> {
    fn default() -> Self {
        Self { reference: RateReference::FinestLevel, method: SampleMethod::Circulant }
    }
}

/// Empirical `L_m` convergence rate of the Riemann sums of `germ` along
/// dyadic partitions, all levels evaluated on the same path per replica.
pub fn estimate_convergence_rate<T: Real, G: Germ<T> + ?Sized>(
    germ: &G,
    config: &FbmConfig<T>,
    levels: &[u32],
    m: T,
    replicas: usize,
) -> Result<RateFitResult<T>> {
    estimate_convergence_rate_with(germ, config, levels, m, replicas, &RateOptions::default())
}

pub fn estimate_convergence_rate_with<T: Real, G: Germ<T> + ?Sized>(
    germ: &G,
    config: &FbmConfig<T>,
    levels: &[u32],
    m: T,
    replicas: usize,
    opts: &RateOptions<'_, T>,
) -> Result<RateFitResult<T>> {
    if levels.len() < 4 {
        return Err(Error::Config(format!("rate fit needs at least 4 levels, got {}", levels.len())));
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("levels must increase strictly".into()));
    }
    if replicas < 2 {
        return Err(Error::Config("rate fit needs at least 2 replicas".into()));
    }
    let finest = *levels.last().unwrap();
    let n = config.grid_n;
    if !n.is_power_of_two() || n < (1usize << finest) {
        return Err(Error::Config(format!(
            "grid_n must be a power of two >= 2^{finest}, got {n}"
        )));
    }
    let sampler = FbmSampler::new(config, opts.method)?;
    let per_replica: Vec<(Vec<T>, Option<T>)> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let seed = config.seed.child(r as u64);
            let mut rng = split_seed(seed);
            let path = sampler.sample_with(&mut rng, Some(seed));
            let sums = levels
                .iter()
                .map(|&l| {
                    let stride = n >> l;
                    let idx: Vec<usize> = (0..=(1usize << l)).map(|k| k * stride).collect();
                    riemann_sum_indices(germ, &path, &idx)
                })
                .collect();
            let exact = match opts.reference {
                RateReference::Exact(f) => Some(f(&path)),
                _ => None,
            };
            (sums, exact)
        })
        .collect();
    rate_from_sums(germ.name(), config.horizon, levels, &per_replica, m, &opts.reference)
}

fn rate_from_sums<T: Real>(
    name: String,
    tau: T,
    levels: &[u32],
    per_replica: &[(Vec<T>, Option<T>)],
    m: T,
    reference: &RateReference<'_, T>,
) -> Result<RateFitResult<T>> {
    let nl = levels.len();
    let mesh = |l: u32| tau / T::from_usize_lossy(1usize << l);
    let column = |k: usize| -> Vec<T> { per_replica.iter().map(|(s, _)| s[k]).collect() };
    let mut per_level = Vec::new();
    let (limit_estimate, fit_count) = match reference {
        RateReference::FinestLevel => {
            let finest = column(nl - 1);
            for k in 0..nl - 1 {
                let d: Vec<T> = column(k).iter().zip(&finest).map(|(&a, &b)| a - b).collect();
                per_level.push(LevelDistance { level: levels[k], mesh: mesh(levels[k]), lm_distance: mc_lm_norm(&d, m)? });
            }
            (mc_mean(&finest)?, nl - 2)
        }
        RateReference::Successive => {
            for k in 0..nl - 1 {
                let fine = column(k + 1);
                let d: Vec<T> = column(k).iter().zip(&fine).map(|(&a, &b)| a - b).collect();
                per_level.push(LevelDistance { level: levels[k], mesh: mesh(levels[k]), lm_distance: mc_lm_norm(&d, m)? });
            }
            (mc_mean(&column(nl - 1))?, nl - 1)
        }
        RateReference::Exact(_) => {
            let exact: Vec<T> = per_replica.iter().map(|(_, e)| e.expect("exact reference evaluated")).collect();
            for k in 0..nl {
                let d: Vec<T> = column(k).iter().zip(&exact).map(|(&a, &b)| a - b).collect();
                per_level.push(LevelDistance { level: levels[k], mesh: mesh(levels[k]), lm_distance: mc_lm_norm(&d, m)? });
            }
            (mc_mean(&exact)?, nl)
        }
    };
    let fitted = &per_level[..fit_count];
    let fitted_levels = fitted.iter().map(|l| l.level).collect();
    let tiny = T::lit(1e-12);
    if per_level.iter().all(|l| l.lm_distance.value < tiny) {
        return Ok(RateFitResult {
            germ: name,
            epsilon_hat: EpsilonHat::Exact,
            limit_estimate,
            per_level,
            fitted_levels,
            r_squared: T::one(),
            m,
            replicas: per_replica.len(),
        });
    }
    if let Some(l) = fitted.iter().find(|l| !(l.lm_distance.value > T::zero())) {
        return Err(Error::Numerical {
            step: l.level as usize,
            message: "zero distance at a fitted level; log-log fit undefined".into(),
        });
    }
    let xs: Vec<T> = fitted.iter().map(|l| l.mesh.ln()).collect();
    let ys: Vec<T> = fitted.iter().map(|l| l.lm_distance.value.ln()).collect();
    let fit = ols_fit(&xs, &ys)?;
    Ok(RateFitResult {
        germ: name,
        epsilon_hat: EpsilonHat::Fitted(fit.slope),
        limit_estimate,
        per_level,
        fitted_levels,
        r_squared: fit.r_squared,
        m,
        replicas: per_replica.len(),
    })
}
