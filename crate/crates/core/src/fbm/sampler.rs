use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::constants::{check_hurst, fgn_autocovariance};
use super::path::{DrivingNoise, FbmPath, PathMethod, Provenance};
use crate::error::{Error, Result};
use crate::numerics::{split_seed, SeedSpec, StreamRng};
use crate::Real;

/// Default lower end of the kernel truncation window, in units of the
/// horizon: the white noise is kept on `[-50 T, T]`.
pub const DEFAULT_WINDOW: f64 = 50.0;

// Dense Toeplitz factor storage is quadratic in the step count.
const MAX_CHOLESKY_STEPS: usize = 8192;

/// Parameters of a sampled path on the uniform grid `t_k = k T / n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FbmConfig<T> {
    pub hurst: T,
    pub horizon: T,
    pub grid_n: usize,
    /// Variance of the Gaussian initial value `B(0)`.
    pub var0: T,
    pub seed: SeedSpec,
    /// Number of independent components.
    pub dim: usize,
}

impl<T: Real> FbmConfig<T> {
    pub fn new(hurst: T, horizon: T, grid_n: usize) -> Result<Self> {
        let cfg = Self { hurst, horizon, grid_n, var0: T::zero(), seed: SeedSpec::default(), dim: 1 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_var0(mut self, var0: T) -> Self {
        self.var0 = var0;
        self
    }

    pub fn with_seed(mut self, seed: SeedSpec) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = dim;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_hurst(self.hurst)?;
        if !(self.horizon > T::zero()) {
            return Err(Error::Domain(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.grid_n == 0 {
            return Err(Error::Domain("grid_n must be at least 1".into()));
        }
        if !(self.var0 >= T::zero()) {
            return Err(Error::Domain(format!("var0 must be nonnegative, got {}", self.var0)));
        }
        if self.dim == 0 {
            return Err(Error::Domain("dimension must be at least 1".into()));
        }
        Ok(())
    }

    pub fn step(&self) -> T {
        self.horizon / T::from_usize_lossy(self.grid_n)
    }

    pub fn times(&self) -> Vec<T> {
        let n = T::from_usize_lossy(self.grid_n);
        (0..=self.grid_n)
            .map(|k| self.horizon * T::from_usize_lossy(k) / n)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMethod {
    /// Exact Toeplitz Cholesky factorization of the increment covariance,
    /// computed with the Durbin–Levinson recursion (`O(n^2)` per path).
    Cholesky,
    /// Circulant embedding of size `2(n-1)` (`O(n log n)` per path).
    Circulant,
}

impl SampleMethod {
    pub fn path_method(self) -> PathMethod {
        match self {
            SampleMethod::Cholesky => PathMethod::Cholesky,
            SampleMethod::Circulant => PathMethod::Circulant,
        }
    }
}

enum Engine<T: Real> {
    Single {
        sd: T,
    },
    Levinson {
        /// Row `k` holds `φ_{k,1..k}` for `k = 1..n-1` (row 0 is empty).
        phi: Vec<Vec<T>>,
        innovation_sd: Vec<T>,
    },
    Circulant {
        /// `sqrt(λ_k / m)` for the embedding eigenvalues `λ_k`.
        scale: Vec<T>,
        fft: Arc<dyn Fft<T>>,
    },
}

/// Precomputed exact sampler for one configuration; reuse it across
/// replicas.
pub struct FbmSampler<T: Real> {
    config: FbmConfig<T>,
    method: SampleMethod,
    engine: Engine<T>,
}

impl<T: Real> FbmSampler<T> {
    pub fn new(config: &FbmConfig<T>, method: SampleMethod) -> Result<Self> {
        config.validate()?;
        let n = config.grid_n;
        let step = config.step();
        let gamma: Vec<T> = (0..n)
            .map(|k| fgn_autocovariance(k, config.hurst, step))
            .collect::<Result<_>>()?;
        let engine = if n == 1 {
            Engine::Single { sd: gamma[0].sqrt() }
        } else {
            match method {
                SampleMethod::Cholesky => levinson(&gamma)?,
                SampleMethod::Circulant => circulant(&gamma)?,
            }
        };
        Ok(Self { config: *config, method, engine })
    }

    pub fn config(&self) -> &FbmConfig<T> {
        &self.config
    }

    pub fn method(&self) -> SampleMethod {
        self.method
    }

    /// Draws the `n` increments of one component.
    fn increments(&self, rng: &mut StreamRng) -> Vec<T> {
        let n = self.config.grid_n;
        match &self.engine {
            Engine::Single { sd } => vec![*sd * T::standard_normal(rng)],
            Engine::Levinson { phi, innovation_sd } => {
                let mut x: Vec<T> = Vec::with_capacity(n);
                for k in 0..n {
                    let mut pred = T::zero();
                    for (j, &p) in phi[k].iter().enumerate() {
                        pred += p * x[k - 1 - j];
                    }
                    x.push(pred + innovation_sd[k] * T::standard_normal(rng));
                }
                x
            }
            Engine::Circulant { scale, fft } => {
                let mut buf: Vec<Complex<T>> = scale
                    .iter()
                    .map(|&s| {
                        let re = T::standard_normal(rng);
                        let im = T::standard_normal(rng);
                        Complex::new(s * re, s * im)
                    })
                    .collect();
                fft.process(&mut buf);
                buf.iter().take(n).map(|c| c.re).collect()
            }
        }
    }

    /// Samples one path from `seed`. For each component in order, `B(0)` is
    /// drawn first, then the increments.
    pub fn sample(&self, seed: SeedSpec) -> FbmPath<T> {
        let mut rng = split_seed(seed);
        self.sample_with(&mut rng, Some(seed))
    }

    pub fn sample_with(&self, rng: &mut StreamRng, seed: Option<SeedSpec>) -> FbmPath<T> {
        let cfg = &self.config;
        let sd0 = cfg.var0.sqrt();
        let columns = (0..cfg.dim)
            .map(|_| {
                let b0 = sd0 * T::standard_normal(rng);
                let inc = self.increments(rng);
                let mut col = Vec::with_capacity(cfg.grid_n + 1);
                let mut acc = b0;
                col.push(acc);
                for d in inc {
                    acc += d;
                    col.push(acc);
                }
                col
            })
            .collect();
        let provenance = Provenance { method: self.method.path_method(), seed, noise: None };
        FbmPath::new(cfg.hurst, cfg.times(), columns, cfg.var0, provenance)
            .expect("sampler grid is valid by construction")
    }
}

fn levinson<T: Real>(gamma: &[T]) -> Result<Engine<T>> {
    let n = gamma.len();
    if n > MAX_CHOLESKY_STEPS {
        return Err(Error::Config(format!(
            "cholesky sampler supports at most {MAX_CHOLESKY_STEPS} steps, got {n}; use circulant"
        )));
    }
    let mut phi: Vec<Vec<T>> = Vec::with_capacity(n);
    let mut sd = Vec::with_capacity(n);
    let mut v = gamma[0];
    phi.push(Vec::new());
    sd.push(v.sqrt());
    for k in 1..n {
        let prev = &phi[k - 1];
        let mut num = gamma[k];
        for (j, &p) in prev.iter().enumerate() {
            num -= p * gamma[k - 1 - j];
        }
        let kk = num / v;
        let mut row = Vec::with_capacity(k);
        for j in 0..k - 1 {
            row.push(prev[j] - kk * prev[k - 2 - j]);
        }
        row.push(kk);
        v *= T::one() - kk * kk;
        if !(v > T::zero()) {
            return Err(Error::Domain(format!(
                "increment covariance is not positive definite at lag {k}"
            )));
        }
        phi.push(row);
        sd.push(v.sqrt());
    }
    Ok(Engine::Levinson { phi, innovation_sd: sd })
}

fn circulant<T: Real>(gamma: &[T]) -> Result<Engine<T>> {
    let n = gamma.len();
    let m = 2 * (n - 1);
    let mut row: Vec<Complex<T>> = (0..m)
        .map(|j| {
            let lag = if j < n { j } else { m - j };
            Complex::new(gamma[lag], T::zero())
        })
        .collect();
    let mut planner = FftPlanner::<T>::new();
    let fft = planner.plan_fft_forward(m);
    fft.process(&mut row);
    let max = row.iter().map(|c| c.re).fold(T::zero(), T::max);
    let floor = -T::lit(1e-9) * max;
    let mf = T::from_usize_lossy(m);
    let mut scale = Vec::with_capacity(m);
    for (k, c) in row.iter().enumerate() {
        if c.re < floor {
            return Err(Error::EmbeddingFailure { index: k, eigenvalue: c.re.as_f64(), max: max.as_f64() });
        }
        // Eigenvalues in [floor, 0) are FFT rounding of zero.
        scale.push((c.re.max(T::zero()) / mf).sqrt());
    }
    Ok(Engine::Circulant { scale, fft })
}

/// Exact sample using the configuration's seed.
pub fn sample_fbm<T: Real>(config: &FbmConfig<T>, method: SampleMethod) -> Result<FbmPath<T>> {
    Ok(FbmSampler::new(config, method)?.sample(config.seed))
}

/// Samples by discretizing `B_t = B(0) + ∫ K_H(t, r) dW_r` over cells of
/// width `T/n` on `[-window T, T]`, keeping the white noise in the path's
/// provenance. Each cell contributes its exact kernel average, so
/// `B_{t_k} - B(0) = Δ^H Σ_j (q(k - j) - q(-j)) ξ_j` with
/// `q(x) = (x_+^{H+1/2} - (x-1)_+^{H+1/2}) / (H + 1/2)`.
///
/// This is an approximation of fBM (truncation tail `O(window^{2H-2})`
/// plus cell averaging), intended for conditional oracles rather than
/// statistics. Cost is `O(n (window + 1) n)`.
pub fn sample_fbm_with_noise<T: Real>(config: &FbmConfig<T>, window: T) -> Result<FbmPath<T>> {
    config.validate()?;
    if !(window > T::zero()) {
        return Err(Error::Domain("kernel window must be positive".into()));
    }
    let n = config.grid_n;
    let past = (window * T::from_usize_lossy(n)).ceil().to_usize().unwrap_or(0).max(1);
    let h = config.hurst;
    let step = config.step();
    let q = kernel_cell_weights(h, past + n + 1);
    let scale = step.powf(h);
    let mut rng = split_seed(config.seed);
    let sd0 = config.var0.sqrt();
    let mut columns = Vec::with_capacity(config.dim);
    let mut increments = Vec::with_capacity(config.dim);
    let mut initial = Vec::with_capacity(config.dim);
    for _ in 0..config.dim {
        let b0 = sd0 * T::standard_normal(&mut rng);
        let xi: Vec<T> = (0..past + n).map(|_| T::standard_normal(&mut rng)).collect();
        let mut col = Vec::with_capacity(n + 1);
        for k in 0..=n {
            col.push(b0 + scale * kernel_sum(&q, &xi, past, k, k));
        }
        columns.push(col);
        increments.push(xi);
        initial.push(b0);
    }
    let noise = DrivingNoise { cell_width: step, past_cells: past, increments, initial };
    let provenance = Provenance { method: PathMethod::Kernel, seed: Some(config.seed), noise: Some(noise) };
    FbmPath::new(h, config.times(), columns, config.var0, provenance)
}

/// `q(m)` for `m = 0..len`, with `q(x) = P(x) - P(x-1)`, `P(x) = x_+^{H+1/2}/(H+1/2)`.
pub(crate) fn kernel_cell_weights<T: Real>(hurst: T, len: usize) -> Vec<T> {
    let e = hurst + T::lit(0.5);
    let p = |x: T| if x > T::zero() { x.powf(e) / e } else { T::zero() };
    (0..len)
        .map(|m| {
            let x = T::from_usize_lossy(m);
            p(x) - p(x - T::one())
        })
        .collect()
}

/// `Σ_{j=-past}^{upto-1} (q(k - j) - q(-j)) ξ_j`, i.e. the kernel integral
/// for time index `k` restricted to noise cells before index `upto`.
pub(crate) fn kernel_sum<T: Real>(q: &[T], xi: &[T], past: usize, k: usize, upto: usize) -> T {
    let mut acc = T::zero();
    for idx in 0..past + upto {
        // cell j = idx - past
        let (wk, w0) = if idx < past {
            let neg_j = past - idx; // -j > 0
            (q[k + neg_j], q[neg_j])
        } else {
            let j = idx - past;
            (q[k - j], T::zero())
        };
        acc += (wk - w0) * xi[idx];
    }
    acc
}

impl<T: Real> FbmPath<T> {
    /// `Y_t = B(0) + ∫_{-A}^{v} K(t, r) dW_r` for grid indices `k_v <= k_t`,
    /// computed from the stored white noise of component `c`.
    pub fn past_projection(&self, c: usize, k_v: usize, k_t: usize) -> Result<T> {
        let noise = self.provenance().noise.as_ref().ok_or_else(|| {
            Error::Capability("path carries no driving-noise provenance (sample with the kernel method)".into())
        })?;
        if k_v > k_t || k_t >= self.len() {
            return Err(Error::Domain(format!("past projection needs k_v <= k_t < len, got ({k_v}, {k_t})")));
        }
        let q = kernel_cell_weights(self.hurst(), noise.past_cells + k_t + 1);
        let scale = noise.cell_width.powf(self.hurst());
        Ok(noise.initial[c] + scale * kernel_sum(&q, &noise.increments[c], noise.past_cells, k_t, k_v))
    }
}
