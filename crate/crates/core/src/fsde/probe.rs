use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fbm::{FbmConfig, FbmSampler, SampleMethod};
use crate::numerics::{ols_fit, SeedSpec};
use crate::sewing::dyadic_partition;
use crate::Real;

use super::coefficients::{mollify_coefficient, CoefficientPair};
use super::solver::{young_solve, SolutionPath, SolverTag};

/// Distances at or below this are treated as zero.
const EXACT_DISTANCE: f64 = 1e-12;

/// Final diagonal distance may exceed the extrapolated one by this factor.
pub const PLATEAU_FACTOR: f64 = 10.0;

#[derive(Debug, Clone)]
pub struct ProbeConfig<T> {
    pub hurst: T,
    pub horizon: T,
    pub x0: Vec<T>,
    /// Dyadic mesh levels, increasing.
    pub levels: Vec<u32>,
    /// Mollification scales, decreasing.
    pub scales: Vec<T>,
    pub replicas: usize,
    pub seed: SeedSpec,
    pub hermite_order: usize,
    pub solver: SolverTag,
}

impl<T: Real> ProbeConfig<T> {
    pub fn new(hurst: T, x0: Vec<T>, levels: Vec<u32>, scales: Vec<T>, replicas: usize) -> Self {
        Self {
            hurst,
            horizon: T::one(),
            x0,
            levels,
            scales,
            replicas,
            seed: SeedSpec::default(),
            hermite_order: 32,
            solver: SolverTag::Euler,
        }
    }

    pub fn with_seed(mut self, seed: SeedSpec) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.levels.len() < 2 || self.scales.len() < 2 {
            return Err(Error::Config("the probe needs at least 2 mesh levels and 2 mollification scales".into()));
        }
        if self.levels.len().max(self.scales.len()) < 4 {
            return Err(Error::Config("fitting the decay needs at least 4 levels or 4 scales".into()));
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("mesh levels must be strictly increasing".into()));
        }
        if self.scales.windows(2).any(|w| !(w[0] > w[1])) || !(self.scales[self.scales.len() - 1] > T::zero()) {
            return Err(Error::Config("mollification scales must be positive and strictly decreasing".into()));
        }
        if self.replicas == 0 {
            return Err(Error::Config("the probe needs at least one replica".into()));
        }
        Ok(())
    }

    /// Cells `(level index, scale index)` refined jointly: cell `i` of
    /// `J = max(levels, scales)` uses `round(i (L-1)/(J-1))` and
    /// `round(i (S-1)/(J-1))`.
    pub fn diagonal(&self) -> Vec<(usize, usize)> {
        let (l, s) = (self.levels.len(), self.scales.len());
        let j = l.max(s);
        let pick = |i: usize, m: usize| ((i * (m - 1)) as f64 / (j - 1) as f64).round() as usize;
        (0..j).map(|i| (pick(i, l), pick(i, s))).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairDistance<T> {
    pub replica: usize,
    pub level_a: u32,
    pub scale_a: T,
    pub level_b: u32,
    pub scale_b: T,
    pub sup_distance: T,
}

#[derive(Debug, Clone)]
pub struct UniquenessReport<T> {
    pub coefficients: String,
    pub pairs: Vec<PairDistance<T>>,
    /// `(level, scale)` along the joint refinement.
    pub diagonal: Vec<(u32, T)>,
    /// Max over replicas of the distance between consecutive diagonal cells.
    pub diagonal_distances: Vec<T>,
    /// `-slope` of `ln(distance)` per diagonal step, fitted without the
    /// final step. `None` when every distance is below `1e-12`.
    pub fitted_decay: Option<T>,
    pub predicted_final: Option<T>,
    pub max_final_distance: T,
    pub max_pair_distance: T,
    pub passed: bool,
}

impl<T: Real> UniquenessReport<T> {
    pub fn write_csv<W: Write>(&self, mut w: W, extra: &[String]) -> Result<()> {
        for line in extra {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "replica,level_a,scale_a,level_b,scale_b,sup_distance")?;
        for p in &self.pairs {
            writeln!(w, "{},{},{:e},{},{:e},{:e}", p.replica, p.level_a, p.scale_a, p.level_b, p.scale_b, p.sup_distance)?;
        }
        let decay = self.fitted_decay.map_or_else(|| "exact".to_string(), |d| format!("{d:e}"));
        writeln!(w, "# fitted_decay={decay}, max_final_distance={:e}", self.max_final_distance)?;
        Ok(())
    }
}

/// Solves on every `(mesh level, mollification scale)` cell for each
/// driving path and compares all solutions pairwise. Joint convergence is
/// read off the diagonal refinement: the max-over-replicas distance between
/// consecutive diagonal cells should decay geometrically, and the final one
/// should not exceed `PLATEAU_FACTOR` times the value extrapolated from the
/// earlier steps.
pub fn uniqueness_probe<T: Real>(coeffs: &CoefficientPair<T>, config: &ProbeConfig<T>) -> Result<UniquenessReport<T>> {
    config.validate()?;
    let d = coeffs.dim();
    if config.x0.len() != d {
        return Err(Error::Domain(format!("x0 has {} entries, coefficients are {d}-dimensional", config.x0.len())));
    }
    let finest = *config.levels.last().expect("validated");
    let fbm = FbmConfig::new(config.hurst, config.horizon, 1usize << finest)?.with_dim(d).with_seed(config.seed);
    let sampler = FbmSampler::new(&fbm, SampleMethod::Circulant)?;
    let mollified: Vec<CoefficientPair<T>> = config
        .scales
        .iter()
        .map(|&s| mollify_coefficient(coeffs, s, config.hermite_order))
        .collect::<Result<_>>()?;
    let partitions = config
        .levels
        .iter()
        .map(|&l| dyadic_partition(config.horizon, l))
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<(usize, usize)> = (0..config.levels.len())
        .flat_map(|l| (0..config.scales.len()).map(move |s| (l, s)))
        .collect();
    let cell_of = |l: usize, s: usize| l * config.scales.len() + s;

    let per_replica: Vec<Vec<PairDistance<T>>> = (0..config.replicas)
        .into_par_iter()
        .map(|r| -> Result<Vec<PairDistance<T>>> {
            let driver = sampler.sample(config.seed.child(r as u64));
            let sols: Vec<SolutionPath<T>> = cells
                .par_iter()
                .map(|&(l, s)| young_solve(&mollified[s], &config.x0, &driver, &partitions[l], config.solver))
                .collect::<Result<_>>()?;
            let mut out = Vec::with_capacity(cells.len() * (cells.len() - 1) / 2);
            for a in 0..cells.len() {
                for b in a + 1..cells.len() {
                    let (la, sa) = cells[a];
                    let (lb, sb) = cells[b];
                    out.push(PairDistance {
                        replica: r,
                        level_a: config.levels[la],
                        scale_a: config.scales[sa],
                        level_b: config.levels[lb],
                        scale_b: config.scales[sb],
                        sup_distance: sols[a].sup_distance(&sols[b])?,
                    });
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let diag = config.diagonal();
    let ncell = cells.len();
    // index of pair (a, b), a < b, in the per-replica list
    let pair_index = |a: usize, b: usize| a * ncell - a * (a + 1) / 2 + (b - a - 1);
    let diagonal_distances: Vec<T> = diag
        .windows(2)
        .map(|w| {
            let (a, b) = (cell_of(w[0].0, w[0].1), cell_of(w[1].0, w[1].1));
            let (a, b) = (a.min(b), a.max(b));
            per_replica.iter().fold(T::zero(), |m, rows| {
                if a == b { m } else { m.max(rows[pair_index(a, b)].sup_distance) }
            })
        })
        .collect();
    let pairs: Vec<PairDistance<T>> = per_replica.into_iter().flatten().collect();
    let max_pair_distance = pairs.iter().fold(T::zero(), |m, p| m.max(p.sup_distance));
    let max_final_distance = *diagonal_distances.last().expect("at least 3 diagonal steps");

    let (fitted_decay, predicted_final, passed) = if diagonal_distances.iter().all(|&v| v <= T::lit(EXACT_DISTANCE)) {
        (None, None, true)
    } else {
        let fit_n = diagonal_distances.len() - 1;
        let xs: Vec<T> = (0..fit_n).map(T::from_usize_lossy).collect();
        let floor = T::min_positive_value();
        let ys: Vec<T> = diagonal_distances[..fit_n].iter().map(|&v| v.max(floor).ln()).collect();
        let fit = ols_fit(&xs, &ys)?;
        let predicted = (fit.intercept + fit.slope * T::from_usize_lossy(fit_n)).exp();
        let decay = -fit.slope;
        let ok = decay > T::zero() && max_final_distance < T::lit(PLATEAU_FACTOR) * predicted;
        (Some(decay), Some(predicted), ok)
    };

    Ok(UniquenessReport {
        coefficients: coeffs.name().to_string(),
        pairs,
        diagonal: diag.iter().map(|&(l, s)| (config.levels[l], config.scales[s])).collect(),
        diagonal_distances,
        fitted_decay,
        predicted_final,
        max_final_distance,
        max_pair_distance,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(levels: Vec<u32>, scales: Vec<f64>) -> ProbeConfig<f64> {
        let mut c = ProbeConfig::new(0.75, vec![0.0], levels, scales, 3).with_seed(SeedSpec::new(9, 1));
        c.hermite_order = 8;
        c
    }

    #[test]
    fn configuration_errors() {
        let coeffs = CoefficientPair::constant(vec![1.0], 1).unwrap();
        let cases = [
            small(vec![4], vec![0.5, 0.25, 0.125, 0.0625]),
            small(vec![2, 3, 4, 5], vec![0.5]),
            small(vec![2, 3], vec![0.5, 0.25]),
            small(vec![2, 4, 3, 5], vec![0.5, 0.25]),
            small(vec![2, 3, 4, 5], vec![0.25, 0.5]),
        ];
        for c in cases {
            assert!(matches!(uniqueness_probe(&coeffs, &c), Err(Error::Config(_))), "{c:?}");
        }
    }

    #[test]
    fn diagonal_cells() {
        let c = small(vec![8, 9, 10, 11, 12, 13, 14], vec![1.0, 0.5, 0.25, 0.125, 0.0625]);
        assert_eq!(c.diagonal(), vec![(0, 0), (1, 1), (2, 1), (3, 2), (4, 3), (5, 3), (6, 4)]);
    }

    #[test]
    fn constant_sigma_is_exact_everywhere() {
        let coeffs = CoefficientPair::constant(vec![0.7, 0.2, -0.1, 1.1], 2).unwrap();
        let mut c = small(vec![3, 4, 5, 6], vec![0.5, 0.25]);
        c.x0 = vec![0.1, 0.2];
        let report = uniqueness_probe(&coeffs, &c).unwrap();
        assert_eq!(report.pairs.len(), 3 * 8 * 7 / 2);
        assert!(report.max_pair_distance <= 1e-12, "{}", report.max_pair_distance);
        assert!(report.passed && report.fitted_decay.is_none());
    }

    #[test]
    fn report_is_deterministic_and_writes_csv() {
        let coeffs = super::super::coefficients::builtin_holder_sigma(0.4, 1).unwrap();
        let c = small(vec![3, 4, 5, 6], vec![0.5, 0.25]);
        let a = uniqueness_probe(&coeffs, &c).unwrap();
        let b = uniqueness_probe(&coeffs, &c).unwrap();
        assert_eq!(a.pairs, b.pairs);
        let mut buf = Vec::new();
        a.write_csv(&mut buf, &["seed=9".into()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# seed=9");
        assert_eq!(lines[1], "replica,level_a,scale_a,level_b,scale_b,sup_distance");
        assert!(lines.last().unwrap().starts_with("# fitted_decay="));
        assert!(lines.last().unwrap().contains("max_final_distance="));
        assert_eq!(lines.len(), 3 + a.pairs.len());
    }
}
