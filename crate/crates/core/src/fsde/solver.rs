use std::io::Write;
use std::sync::atomic::{AtomicBool, Ordering};

use crate::error::{Error, Result};
use crate::fbm::{FbmPath, PathMethod};
use crate::numerics::SeedSpec;
use crate::sewing::Partition;
use crate::Real;

use super::coefficients::CoefficientPair;

static ROUGH_DRIVER_WARNED: AtomicBool = AtomicBool::new(false);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverTag {
    /// Left-point explicit Euler.
    Euler,
    /// Euler plus `½ Σ_{j,l} (∂σ_{·j} σ_{·l}) ΔB^j ΔB^l`, with the Jacobian
    /// taken by central differences. For rate studies only.
    Milstein,
}

impl SolverTag {
    pub fn tag(self) -> &'static str {
        match self {
            SolverTag::Euler => "euler",
            SolverTag::Milstein => "milstein",
        }
    }
}

/// Which driving path a solution came from.
#[derive(Debug, Clone, PartialEq)]
pub struct DriverRef<T> {
    pub hurst: T,
    pub method: PathMethod,
    pub seed: Option<SeedSpec>,
    pub grid_len: usize,
}

/// A numerical solution on the partition it was computed on.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionPath<T> {
    times: Vec<T>,
    columns: Vec<Vec<T>>,
    solver: SolverTag,
    coefficients: String,
    driver: DriverRef<T>,
}

impl<T: Real> SolutionPath<T> {
    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn columns(&self) -> &[Vec<T>] {
        &self.columns
    }

    pub fn column(&self, c: usize) -> &[T] {
        &self.columns[c]
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn solver(&self) -> SolverTag {
        self.solver
    }

    pub fn coefficients(&self) -> &str {
        &self.coefficients
    }

    pub fn driver(&self) -> &DriverRef<T> {
        &self.driver
    }

    pub fn state(&self, k: usize) -> Vec<T> {
        self.columns.iter().map(|c| c[k]).collect()
    }

    pub fn final_state(&self) -> Vec<T> {
        self.state(self.len() - 1)
    }

    /// `max_k |X_k - Y_k|` (Euclidean in space) over the times of the
    /// coarser solution. The finer grid must contain the coarser one with
    /// a constant stride, as dyadic grids do.
    pub fn sup_distance(&self, other: &SolutionPath<T>) -> Result<T> {
        if self.dim() != other.dim() {
            return Err(Error::Domain("solutions have different dimensions".into()));
        }
        let (coarse, fine) = if self.steps() <= other.steps() { (self, other) } else { (other, self) };
        if fine.steps() % coarse.steps() != 0 {
            return Err(Error::Alignment(format!(
                "{} steps do not refine {} steps",
                fine.steps(),
                coarse.steps()
            )));
        }
        let stride = fine.steps() / coarse.steps();
        let tol = T::lit(1e-12) * coarse.times[coarse.steps()].abs().max(T::one());
        let mut sup = T::zero();
        for k in 0..coarse.len() {
            let kf = k * stride;
            if (coarse.times[k] - fine.times[kf]).abs() > tol {
                return Err(Error::Alignment(format!("grid time {} has no counterpart", coarse.times[k])));
            }
            let sq = coarse
                .columns
                .iter()
                .zip(&fine.columns)
                .fold(T::zero(), |a, (c, f)| a + (c[k] - f[kf]) * (c[k] - f[kf]));
            sup = sup.max(sq.sqrt());
        }
        Ok(sup)
    }

    /// Header comments, then `t,x_0,...,x_{d-1}`.
    pub fn write_csv<W: Write>(&self, mut w: W, extra: &[String]) -> Result<()> {
        for line in extra {
            writeln!(w, "# {line}")?;
        }
        writeln!(
            w,
            "# solver={}, coefficients={}, hurst={}, steps={}",
            self.solver.tag(),
            self.coefficients,
            self.driver.hurst,
            self.steps()
        )?;
        let head: Vec<String> = (0..self.dim()).map(|c| format!("x_{c}")).collect();
        writeln!(w, "t,{}", head.join(","))?;
        for k in 0..self.len() {
            let row: Vec<String> = self.columns.iter().map(|c| format!("{:e}", c[k])).collect();
            writeln!(w, "{:e},{}", self.times[k], row.join(","))?;
        }
        Ok(())
    }
}

/// Left-point Euler for `dX = b(X) dt + σ(X) dB`, `X_0 = x0`:
/// `X_{k+1} = X_k + b(X_k) Δt + σ(X_k) ΔB` on the partition, whose points
/// must be grid times of the driver.
pub fn young_euler_solve<T: Real>(
    coeffs: &CoefficientPair<T>,
    x0: &[T],
    driver: &FbmPath<T>,
    partition: &Partition<T>,
) -> Result<SolutionPath<T>> {
    young_solve(coeffs, x0, driver, partition, SolverTag::Euler)
}

pub fn young_solve<T: Real>(
    coeffs: &CoefficientPair<T>,
    x0: &[T],
    driver: &FbmPath<T>,
    partition: &Partition<T>,
    solver: SolverTag,
) -> Result<SolutionPath<T>> {
    let d = coeffs.dim();
    if x0.len() != d || driver.dim() != d {
        return Err(Error::Domain(format!(
            "dimension mismatch: coefficients {d}, x0 {}, driver {}",
            x0.len(),
            driver.dim()
        )));
    }
    if driver.hurst() <= T::lit(0.5) && !ROUGH_DRIVER_WARNED.swap(true, Ordering::Relaxed) {
        log::warn!("Young stepping with H = {} <= 1/2 is not expected to converge", driver.hurst());
    }
    let idx = partition.grid_indices(driver)?;
    let n = idx.len();
    let mut columns: Vec<Vec<T>> = x0.iter().map(|&v| {
        let mut c = Vec::with_capacity(n);
        c.push(v);
        c
    }).collect();
    let mut x = x0.to_vec();
    let mut b = vec![T::zero(); d];
    let mut s = vec![T::zero(); d * d];
    let mut db = vec![T::zero(); d];
    let mut next = vec![T::zero(); d];
    let mut jac = Jacobian::new(d);
    for (step, w) in idx.windows(2).enumerate() {
        let (i, j) = (w[0], w[1]);
        let dt = driver.times()[j] - driver.times()[i];
        for (q, c) in driver.columns().iter().enumerate() {
            db[q] = c[j] - c[i];
        }
        coeffs.drift_into(&x, &mut b);
        coeffs.diffusion_into(&x, &mut s);
        for r in 0..d {
            let mut acc = x[r] + b[r] * dt;
            for q in 0..d {
                acc += s[r * d + q] * db[q];
            }
            next[r] = acc;
        }
        if solver == SolverTag::Milstein {
            jac.correct(coeffs, &x, &s, &db, &mut next);
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical {
                step,
                message: format!("non-finite state after step {step} (t = {})", driver.times()[j]),
            });
        }
        x.copy_from_slice(&next);
        for (c, &v) in columns.iter_mut().zip(&x) {
            c.push(v);
        }
    }
    Ok(SolutionPath {
        times: partition.points().to_vec(),
        columns,
        solver,
        coefficients: coeffs.name().to_string(),
        driver: DriverRef {
            hurst: driver.hurst(),
            method: driver.provenance().method,
            seed: driver.provenance().seed,
            grid_len: driver.len(),
        },
    })
}

// Scratch space for the Milstein correction.
struct Jacobian<T> {
    d: usize,
    plus: Vec<T>,
    minus: Vec<T>,
    // ds[k][r*d + q] = ∂σ_{rq}/∂x_k
    ds: Vec<Vec<T>>,
}

impl<T: Real> Jacobian<T> {
    fn new(d: usize) -> Self {
        Self { d, plus: vec![T::zero(); d * d], minus: vec![T::zero(); d * d], ds: vec![vec![T::zero(); d * d]; d] }
    }

    fn correct(&mut self, coeffs: &CoefficientPair<T>, x: &[T], s: &[T], db: &[T], next: &mut [T]) {
        let d = self.d;
        let mut y = x.to_vec();
        for k in 0..d {
            let h = T::epsilon().cbrt() * x[k].abs().max(T::one());
            y[k] = x[k] + h;
            coeffs.diffusion_into(&y, &mut self.plus);
            y[k] = x[k] - h;
            coeffs.diffusion_into(&y, &mut self.minus);
            y[k] = x[k];
            for e in 0..d * d {
                self.ds[k][e] = (self.plus[e] - self.minus[e]) / (h + h);
            }
        }
        // r-th component: ½ Σ_{q,l} Σ_k ∂_k σ_{rq} σ_{kl} ΔB^q ΔB^l
        let half = T::lit(0.5);
        for r in 0..d {
            let mut acc = T::zero();
            for q in 0..d {
                for l in 0..d {
                    let mut g = T::zero();
                    for k in 0..d {
                        g += self.ds[k][r * d + q] * s[k * d + l];
                    }
                    acc += g * db[q] * db[l];
                }
            }
            next[r] += half * acc;
        }
    }
}
