use crate::fbm::FbmPath;
use crate::Real;

use super::solver::SolutionPath;

/// Anything with a time grid and one value column per dimension.
pub trait GridPath<T> {
    fn grid_times(&self) -> &[T];
    fn grid_columns(&self) -> &[Vec<T>];
}

impl<T: Real> GridPath<T> for FbmPath<T> {
    fn grid_times(&self) -> &[T] {
        self.times()
    }
    fn grid_columns(&self) -> &[Vec<T>] {
        self.columns()
    }
}

impl<T: Real> GridPath<T> for SolutionPath<T> {
    fn grid_times(&self) -> &[T] {
        self.times()
    }
    fn grid_columns(&self) -> &[Vec<T>] {
        self.columns()
    }
}

fn distance<T: Real>(cols: &[Vec<T>], i: usize, j: usize) -> T {
    if cols.len() == 1 {
        return (cols[0][j] - cols[0][i]).abs();
    }
    cols.iter().fold(T::zero(), |a, c| a + (c[j] - c[i]) * (c[j] - c[i])).sqrt()
}

/// `max_{s<t} |X_t - X_s| / (t - s)^α` over all grid pairs, Euclidean in
/// space. Quadratic in the grid length.
pub fn holder_seminorm<T: Real, P: GridPath<T> + ?Sized>(path: &P, alpha: T) -> T {
    let times = path.grid_times();
    let cols = path.grid_columns();
    let n = times.len();
    let mut best = T::zero();
    for i in 0..n {
        for j in i + 1..n {
            best = best.max(distance(cols, i, j) / (times[j] - times[i]).powf(alpha));
        }
    }
    best
}

/// The same maximum restricted to pairs `(i, i + 2^k)`. `O(n log n)` and a
/// lower bound for [`holder_seminorm`]; on a uniform grid it is within the
/// factor `2 / (1 - 2^{-α})` of the exact value, by the dyadic chaining
/// argument.
pub fn holder_seminorm_dyadic<T: Real, P: GridPath<T> + ?Sized>(path: &P, alpha: T) -> T {
    let times = path.grid_times();
    let cols = path.grid_columns();
    let n = times.len();
    let mut best = T::zero();
    let mut gap = 1;
    while gap < n {
        for i in 0..n - gap {
            let j = i + gap;
            best = best.max(distance(cols, i, j) / (times[j] - times[i]).powf(alpha));
        }
        gap *= 2;
    }
    // the full interval is always included
    best.max(distance(cols, 0, n - 1) / (times[n - 1] - times[0]).powf(alpha))
}

/// `|x| + (‖b‖ + ‖σ‖ ‖B‖_α)(1 + ‖b‖ + ‖σ‖ ‖B‖_α)`: the shape of the a priori
/// bound on `‖X‖_α`, up to a constant depending on `T` and `α`.
pub fn a_priori_rhs<T: Real>(x0_norm: T, drift_c1b: T, sigma_c1b: T, driver_holder: T) -> T {
    let k = drift_c1b + sigma_c1b * driver_holder;
    x0_norm + k * (T::one() + k)
}
