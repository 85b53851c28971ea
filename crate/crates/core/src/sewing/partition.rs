use crate::error::{Error, Result};
use crate::fbm::FbmPath;
use crate::Real;

/// Strictly increasing breakpoints `0 = t_0 < t_1 < ... < t_N = tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition<T> {
    points: Vec<T>,
}

impl<T: Real> Partition<T> {
    pub fn new(points: Vec<T>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Domain("a partition needs at least two points".into()));
        }
        if points[0] != T::zero() {
            return Err(Error::Domain(format!("partition must start at 0, got {}", points[0])));
        }
        if let Some(w) = points.windows(2).find(|w| !(w[0] < w[1])) {
            return Err(Error::Domain(format!(
                "partition points must increase strictly, got {} then {}",
                w[0], w[1]
            )));
        }
        Ok(Self { points })
    }

    /// `n` equal intervals of `[0, tau]`.
    pub fn uniform(tau: T, n: usize) -> Result<Self> {
        if n == 0 || !(tau > T::zero()) {
            return Err(Error::Domain("uniform partition needs tau > 0 and n >= 1".into()));
        }
        let nf = T::from_usize_lossy(n);
        let mut points: Vec<T> = (0..=n).map(|k| tau * T::from_usize_lossy(k) / nf).collect();
        points[n] = tau;
        Self::new(points)
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn intervals(&self) -> usize {
        self.points.len() - 1
    }

    pub fn tau(&self) -> T {
        self.points[self.points.len() - 1]
    }

    /// Largest interval length.
    pub fn mesh(&self) -> T {
        self.points.windows(2).map(|w| w[1] - w[0]).fold(T::zero(), T::max)
    }

    /// Smallest interval length.
    pub fn min_gap(&self) -> T {
        self.points.windows(2).map(|w| w[1] - w[0]).fold(T::infinity(), T::min)
    }

    /// Whether every point of `coarser` is a point of `self` (the same end
    /// point included).
    pub fn refines(&self, coarser: &Partition<T>) -> bool {
        if self.tau() != coarser.tau() {
            return false;
        }
        let mut it = self.points.iter();
        coarser.points.iter().all(|p| it.any(|q| q == p))
    }

    pub fn with_point(&self, t: T) -> Result<Self> {
        let pos = self.points.partition_point(|&p| p < t);
        if pos == 0 || pos == self.points.len() || self.points[pos] == t {
            return Err(Error::Domain(format!("{t} is not strictly inside a partition interval")));
        }
        let mut points = self.points.clone();
        points.insert(pos, t);
        Ok(Self { points })
    }

    pub fn without_point(&self, t: T) -> Result<Self> {
        let n = self.points.len();
        match self.points.iter().position(|&p| p == t) {
            Some(i) if i > 0 && i + 1 < n => {
                let mut points = self.points.clone();
                points.remove(i);
                Ok(Self { points })
            }
            _ => Err(Error::Domain(format!("{t} is not an interior point of the partition"))),
        }
    }

    /// Merges intervals so that the result `π'` satisfies: `self` refines
    /// `π'`, `|π'| <= 3|π|` and every interval of `π'` has length at least
    /// `|π'| / 3` (in fact at least `|π|`).
    ///
    /// With `π = {t_0, ..., t_N}`, `k_0 = -1` and
    /// `k_l = inf{j > k_{l-1} : t_{j+1} - t_{k_{l-1}+1} >= |π|}` (`inf ∅ = N`),
    /// `L = sup{l : k_l < N}`, the output keeps `t_{k_l + 1}` for `l < L`
    /// and ends at `t_N`.
    pub fn coarsen(&self) -> Partition<T> {
        let n = self.points.len() - 1;
        if n == 1 {
            return self.clone();
        }
        let mesh = self.mesh();
        let t = &self.points;
        let mut kept = vec![t[0]];
        let mut anchor = 0usize; // k_{l-1} + 1
        let mut j = 0usize;
        loop {
            // k_l = first j >= anchor with t_{j+1} - t_anchor >= mesh
            while j < n && t[j + 1] - t[anchor] < mesh {
                j += 1;
            }
            if j >= n {
                break;
            }
            anchor = j + 1;
            j = anchor;
            kept.push(t[anchor]);
        }
        // The last kept point is t_{k_L + 1}; it is replaced by t_N.
        let last = kept.len() - 1;
        kept[last] = t[n];
        let out = Partition { points: kept };
        let slack = T::one() + T::lit(16.0) * T::epsilon();
        let coarse_mesh = out.mesh();
        assert!(self.refines(&out), "coarsening must be refined by its input");
        assert!(coarse_mesh <= T::lit(3.0) * mesh * slack, "coarse mesh exceeds 3 |π|");
        assert!(out.min_gap() * T::lit(3.0) * slack >= coarse_mesh, "coarse interval below |π'| / 3");
        out
    }

    /// Grid indices of the breakpoints in `path`.
    pub fn grid_indices(&self, path: &FbmPath<T>) -> Result<Vec<usize>> {
        self.points
            .iter()
            .map(|&p| {
                path.index_of_time(p)
                    .ok_or_else(|| Error::Alignment(format!("partition point {p} is not a grid time of the path")))
            })
            .collect()
    }
}

/// `2^level` equal intervals of `[0, tau]`.
pub fn dyadic_partition<T: Real>(tau: T, level: u32) -> Result<Partition<T>> {
    if level > 40 {
        return Err(Error::Domain(format!("dyadic level {level} is too fine")));
    }
    Partition::uniform(tau, 1usize << level)
}
