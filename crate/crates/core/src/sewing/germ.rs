use super::partition::Partition;
use crate::error::{Error, Result};
use crate::fbm::FbmPath;
use crate::Real;

/// A two-parameter functional `A_{s,t}` of a discrete path, evaluated at
/// grid indices `i <= j` (so `s = times[i]`, `t = times[j]`). Germs must
/// vanish on the diagonal.
pub trait Germ<T: Real>: Sync {
    fn name(&self) -> String;

    fn eval(&self, path: &FbmPath<T>, i: usize, j: usize) -> T;
}

impl<T: Real, G: Germ<T> + ?Sized> Germ<T> for &G {
    fn name(&self) -> String {
        (**self).name()
    }

    fn eval(&self, path: &FbmPath<T>, i: usize, j: usize) -> T {
        (**self).eval(path, i, j)
    }
}

impl<T: Real, G: Germ<T> + ?Sized + Send> Germ<T> for Box<G> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn eval(&self, path: &FbmPath<T>, i: usize, j: usize) -> T {
        (**self).eval(path, i, j)
    }
}

/// Germ from a closure `(path, i, j) -> A`.
pub struct FnGerm<F> {
    name: String,
    f: F,
}

impl<F> FnGerm<F> {
    pub fn new(name: impl Into<String>, f: F) -> Self {
        Self { name: name.into(), f }
    }
}

impl<T: Real, F> Germ<T> for FnGerm<F>
where
    F: Fn(&FbmPath<T>, usize, usize) -> T + Sync,
{
    fn name(&self) -> String {
        self.name.clone()
    }

    fn eval(&self, path: &FbmPath<T>, i: usize, j: usize) -> T {
        (self.f)(path, i, j)
    }
}

/// `λ A_{s,t}`.
pub struct Scaled<G, T> {
    pub germ: G,
    pub factor: T,
}

impl<T: Real, G: Germ<T>> Germ<T> for Scaled<G, T> {
    fn name(&self) -> String {
        format!("{}*{}", self.factor, self.germ.name())
    }

    fn eval(&self, path: &FbmPath<T>, i: usize, j: usize) -> T {
        self.factor * self.germ.eval(path, i, j)
    }
}

/// Deterministic germ `(t - s)^p`.
pub struct PowerOfLength<T>(pub T);

impl<T: Real> Germ<T> for PowerOfLength<T> {
    fn name(&self) -> String {
        format!("length_pow:{}", self.0)
    }

    fn eval(&self, path: &FbmPath<T>, i: usize, j: usize) -> T {
        let t = path.times();
        if i == j {
            T::zero()
        } else {
            (t[j] - t[i]).powf(self.0)
        }
    }
}

/// Additive germ `B_t - B_s` (first component).
pub struct Increment;

impl<T: Real> Germ<T> for Increment {
    fn name(&self) -> String {
        "increment".into()
    }

    fn eval(&self, path: &FbmPath<T>, i: usize, j: usize) -> T {
        let v = path.values();
        v[j] - v[i]
    }
}

/// `Σ_{[s,t] ∈ π} A_{s,t}`, accumulated in breakpoint order.
pub fn riemann_sum<T: Real, G: Germ<T> + ?Sized>(germ: &G, path: &FbmPath<T>, partition: &Partition<T>) -> Result<T> {
    let idx = partition.grid_indices(path)?;
    Ok(riemann_sum_indices(germ, path, &idx))
}

/// Riemann sum over a partition given directly by increasing grid indices.
pub fn riemann_sum_indices<T: Real, G: Germ<T> + ?Sized>(germ: &G, path: &FbmPath<T>, idx: &[usize]) -> T {
    let mut acc = T::zero();
    for w in idx.windows(2) {
        acc += germ.eval(path, w[0], w[1]);
    }
    acc
}

/// `δA_{s,u,t} = A_{s,t} - A_{s,u} - A_{u,t}`.
pub fn delta_germ<T: Real, G: Germ<T> + ?Sized>(germ: &G, path: &FbmPath<T>, s: T, u: T, t: T) -> Result<T> {
    if !(s < u && u < t) {
        return Err(Error::Domain(format!("delta needs s < u < t, got ({s}, {u}, {t})")));
    }
    let find = |x: T| {
        path.index_of_time(x)
            .ok_or_else(|| Error::Alignment(format!("{x} is not a grid time of the path")))
    };
    let (i, k, j) = (find(s)?, find(u)?, find(t)?);
    Ok(germ.eval(path, i, j) - germ.eval(path, i, k) - germ.eval(path, k, j))
}
