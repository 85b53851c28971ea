//! Local time of one-dimensional fBM: weighted up-crossing sums, crossing
//! counts, the `L̃` sums and an occupation-density reference, all
//! normalized to estimate `L_T(a)` itself.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fbm::{c_h, FbmPath};
use crate::numerics::log_gamma;
use crate::sewing::Partition;
use crate::Real;

/// `𝔠_{H,γ} = c_H^{(1+γ)/2} ∫_0^∞ x^{γ+1} e^{-x²/2} / √(2π) dx
///          = c_H^{(1+γ)/2} 2^{γ/2} Γ(γ/2 + 1) / √(2π)`.
pub fn frak_c<T: Real>(hurst: T, gamma: T) -> Result<T> {
    if !(gamma >= T::zero()) {
        return Err(Error::Domain(format!("gamma must be nonnegative, got {gamma}")));
    }
    let ch = c_h(hurst)?;
    let half = T::lit(0.5);
    let moment = (half * gamma * T::LN_2() + log_gamma(half * gamma + T::one())?).exp() / T::TAU().sqrt();
    Ok(ch.powf(half * (T::one() + gamma)) * moment)
}

/// Which crossings of level `a` a sum collects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `B_s < a < B_t`.
    Up,
    /// `B_s > a > B_t`.
    Down,
    /// `min(B_s, B_t) < a < max(B_s, B_t)`.
    Both,
}

impl Direction {
    fn crosses<T: Real>(self, x: T, y: T, a: T) -> bool {
        match self {
            Direction::Up => x < a && a < y,
            Direction::Down => x > a && a > y,
            Direction::Both => (x < a && a < y) || (x > a && a > y),
        }
    }
}

fn check_scalar<T: Real>(path: &FbmPath<T>) -> Result<()> {
    if path.dim() != 1 {
        return Err(Error::Domain("local time estimators need a one-dimensional path".into()));
    }
    Ok(())
}

fn crossing_weight<T: Real>(dt: T, inc: T, hurst: T, gamma: T) -> T {
    let w = dt.powf(T::one() - (T::one() + gamma) * hurst);
    if gamma == T::zero() {
        w
    } else {
        w * inc.abs().powf(gamma)
    }
}

/// `Σ_{[s,t] ∈ π crossing a} (t-s)^{1-(1+γ)H} |B_t - B_s|^γ`.
pub fn crossing_sum<T: Real>(path: &FbmPath<T>, partition: &Partition<T>, a: T, gamma: T, dir: Direction) -> Result<T> {
    check_scalar(path)?;
    if !(gamma >= T::zero()) {
        return Err(Error::Domain(format!("gamma must be nonnegative, got {gamma}")));
    }
    let idx = partition.grid_indices(path)?;
    let (t, b, h) = (path.times(), path.values(), path.hurst());
    let mut acc = T::zero();
    for w in idx.windows(2) {
        let (i, j) = (w[0], w[1]);
        if dir.crosses(b[i], b[j], a) {
            acc += crossing_weight(t[j] - t[i], b[j] - b[i], h, gamma);
        }
    }
    Ok(acc)
}

pub fn upcrossing_sum<T: Real>(path: &FbmPath<T>, partition: &Partition<T>, a: T, gamma: T) -> Result<T> {
    crossing_sum(path, partition, a, gamma, Direction::Up)
}

pub fn downcrossing_sum<T: Real>(path: &FbmPath<T>, partition: &Partition<T>, a: T, gamma: T) -> Result<T> {
    crossing_sum(path, partition, a, gamma, Direction::Down)
}

pub fn bidirectional_sum<T: Real>(path: &FbmPath<T>, partition: &Partition<T>, a: T, gamma: T) -> Result<T> {
    crossing_sum(path, partition, a, gamma, Direction::Both)
}

fn uniform_stride<T: Real>(path: &FbmPath<T>, n: usize) -> Result<usize> {
    let steps = path.len() - 1;
    if n == 0 || steps % n != 0 || path.uniform_step().is_none() {
        return Err(Error::Alignment(format!(
            "{n} steps do not divide the uniform grid of {steps} steps"
        )));
    }
    Ok(steps / n)
}

/// `(T/n)^{1-H} #{k : B_{(k-1)T/n} < a < B_{kT/n}}`, not divided by the
/// limiting constant `√(c_H / 2π)`.
pub fn crossing_count_estimator<T: Real>(path: &FbmPath<T>, n: usize, a: T) -> Result<T> {
    check_scalar(path)?;
    let stride = uniform_stride(path, n)?;
    let (t, b, h) = (path.times(), path.values(), path.hurst());
    // Summed interval by interval (rather than as one power times the
    // count) so that it agrees bit for bit with the γ = 0 up-crossing sum.
    let mut acc = T::zero();
    for k in 0..n {
        let (i, j) = (k * stride, (k + 1) * stride);
        if b[i] < a && a < b[j] {
            acc += crossing_weight(t[j] - t[i], b[j] - b[i], h, T::zero());
        }
    }
    Ok(acc)
}

/// `Σ_{[s,t] ∈ π : B_s < a < B_t} |B_t - a|^{1/H - 1}`.
pub fn tilde_l_sum<T: Real>(path: &FbmPath<T>, partition: &Partition<T>, a: T) -> Result<T> {
    check_scalar(path)?;
    let idx = partition.grid_indices(path)?;
    let b = path.values();
    let e = path.hurst().recip() - T::one();
    let mut acc = T::zero();
    for w in idx.windows(2) {
        let (x, y) = (b[w[0]], b[w[1]]);
        if x < a && a < y {
            acc += (y - a).powf(e);
        }
    }
    Ok(acc)
}

/// `(1 / 2 bandwidth) Σ_k Δt_k 1{|B_{t_k} - a| <= bandwidth}` over the grid
/// cells of the path (left-point rule).
pub fn occupation_density_estimator<T: Real>(path: &FbmPath<T>, a: T, bandwidth: T) -> Result<T> {
    check_scalar(path)?;
    if !(bandwidth > T::zero()) {
        return Err(Error::Domain(format!("bandwidth must be positive, got {bandwidth}")));
    }
    let (t, b) = (path.times(), path.values());
    let mut acc = T::zero();
    for k in 0..path.len() - 1 {
        if (b[k] - a).abs() <= bandwidth {
            acc += t[k + 1] - t[k];
        }
    }
    Ok(acc / (T::lit(2.0) * bandwidth))
}

/// `(T / n)^H` for the path's uniform grid, the natural increment scale.
pub fn default_bandwidth<T: Real>(path: &FbmPath<T>) -> T {
    let n = T::from_usize_lossy(path.len() - 1);
    (path.horizon() / n).powf(path.hurst())
}

/// Is `1/m > 1 - 1/(2H)`? Always true for `H <= 1/2`.
pub fn validate_m_condition<T: Real>(hurst: T, m: T) -> bool {
    let half = T::lit(0.5);
    hurst <= half || m.recip() > T::one() - (T::lit(2.0) * hurst).recip()
}

/// Which estimator produced a curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimatorTag<T> {
    Upcross(T),
    Count,
    Tilde,
    /// Bandwidth; `None` means [`default_bandwidth`].
    Occupation(Option<T>),
}

impl<T: Real> fmt::Display for EstimatorTag<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorTag::Upcross(g) => write!(f, "upcross:{g}"),
            EstimatorTag::Count => write!(f, "count"),
            EstimatorTag::Tilde => write!(f, "tilde"),
            EstimatorTag::Occupation(None) => write!(f, "occupation"),
            EstimatorTag::Occupation(Some(b)) => write!(f, "occupation:{b}"),
        }
    }
}

impl<T: Real> FromStr for EstimatorTag<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let num = |a: &str| {
            a.trim()
                .parse::<f64>()
                .map(T::lit)
                .map_err(|_| Error::Config(format!("bad estimator parameter in {s:?}")))
        };
        match (head, arg) {
            ("upcross", None) => Ok(EstimatorTag::Upcross(T::zero())),
            ("upcross", Some(a)) => Ok(EstimatorTag::Upcross(num(a)?)),
            ("count", None) => Ok(EstimatorTag::Count),
            ("tilde", None) => Ok(EstimatorTag::Tilde),
            ("occupation", None) => Ok(EstimatorTag::Occupation(None)),
            ("occupation", Some(a)) => Ok(EstimatorTag::Occupation(Some(num(a)?))),
            _ => Err(Error::Config(format!("unknown local time estimator {s:?}"))),
        }
    }
}

/// Local-time values over increasing spatial levels.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTimeCurve<T> {
    pub levels: Vec<T>,
    pub values: Vec<T>,
    pub estimator: EstimatorTag<T>,
    pub hurst: T,
    pub horizon: T,
    /// `log2` of the number of partition intervals, when a power of two.
    pub partition_level: Option<u32>,
    pub normalized: bool,
}

impl<T: Real> LocalTimeCurve<T> {
    /// Trapezoid rule over the levels.
    pub fn integral(&self) -> T {
        trapezoid(&self.levels, &self.values)
    }

    /// `level,value` rows after `# ` comment lines (`extra` first, then the
    /// estimator metadata).
    pub fn write_csv<W: Write>(&self, mut w: W, extra: &[String]) -> Result<()> {
        for line in extra {
            writeln!(w, "# {line}")?;
        }
        let level = self.partition_level.map_or("none".to_string(), |l| l.to_string());
        writeln!(
            w,
            "# estimator={}, hurst={}, partition_level={}, normalized={}",
            self.estimator, self.hurst, level, self.normalized
        )?;
        writeln!(w, "level,value")?;
        for (a, v) in self.levels.iter().zip(&self.values) {
            writeln!(w, "{a:.16e},{v:.16e}")?;
        }
        Ok(())
    }
}

fn trapezoid<T: Real>(x: &[T], y: &[T]) -> T {
    let mut acc = T::zero();
    for k in 1..x.len() {
        acc += (x[k] - x[k - 1]) * (y[k] + y[k - 1]) / T::lit(2.0);
    }
    acc
}

/// `count` equispaced levels over `[min B - 0.1 r, max B + 0.1 r]` with `r`
/// the range of the path.
pub fn default_level_grid<T: Real>(path: &FbmPath<T>, count: usize) -> Result<Vec<T>> {
    if count < 2 {
        return Err(Error::Config("level grid needs at least two points".into()));
    }
    let b = path.values();
    let lo = b.iter().cloned().fold(T::infinity(), T::min);
    let hi = b.iter().cloned().fold(T::neg_infinity(), T::max);
    let mut r = hi - lo;
    if r == T::zero() {
        r = T::one();
    }
    let (a, z) = (lo - T::lit(0.1) * r, hi + T::lit(0.1) * r);
    let m = T::from_usize_lossy(count - 1);
    Ok((0..count).map(|k| a + (z - a) * T::from_usize_lossy(k) / m).collect())
}

/// Normalizing constant that turns an estimator into an estimate of
/// `L_T(a)`.
pub fn normalizing_constant<T: Real>(tag: EstimatorTag<T>, hurst: T) -> Result<T> {
    match tag {
        EstimatorTag::Upcross(g) => frak_c(hurst, g),
        EstimatorTag::Count => Ok((c_h(hurst)? / T::TAU()).sqrt()),
        EstimatorTag::Tilde => Ok(hurst * frak_c(hurst, hurst.recip() - T::one())?),
        EstimatorTag::Occupation(_) => Ok(T::one()),
    }
}

// Index range of sorted `levels` strictly inside (lo, hi).
fn strict_range<T: Real>(levels: &[T], lo: T, hi: T) -> std::ops::Range<usize> {
    let start = levels.partition_point(|&a| a <= lo);
    let end = levels.partition_point(|&a| a < hi);
    start..end.max(start)
}

/// Applies an estimator at every level and divides by its limiting
/// constant. Crossing estimators use the partition; the occupation
/// estimator always uses the full grid of the path. `count` requires a
/// uniform partition.
pub fn local_time_curve<T: Real>(
    path: &FbmPath<T>,
    partition: &Partition<T>,
    tag: EstimatorTag<T>,
    levels: &[T],
) -> Result<LocalTimeCurve<T>> {
    check_scalar(path)?;
    if levels.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Config("level grid must increase strictly".into()));
    }
    let h = path.hurst();
    let (t, b) = (path.times(), path.values());
    let mut values = vec![T::zero(); levels.len()];
    match tag {
        EstimatorTag::Upcross(_) | EstimatorTag::Count => {
            let gamma = match tag {
                EstimatorTag::Upcross(g) if !(g >= T::zero()) => {
                    return Err(Error::Domain(format!("gamma must be nonnegative, got {g}")));
                }
                EstimatorTag::Upcross(g) => g,
                _ => T::zero(),
            };
            if matches!(tag, EstimatorTag::Count) {
                let n = partition.intervals();
                let uniform = Partition::uniform(path.horizon(), n)?;
                if uniform.points() != partition.points() {
                    return Err(Error::Alignment("count estimator needs a uniform partition".into()));
                }
            }
            let idx = partition.grid_indices(path)?;
            for w in idx.windows(2) {
                let (i, j) = (w[0], w[1]);
                if b[i] < b[j] {
                    let wt = crossing_weight(t[j] - t[i], b[j] - b[i], h, gamma);
                    for k in strict_range(levels, b[i], b[j]) {
                        values[k] += wt;
                    }
                }
            }
        }
        EstimatorTag::Tilde => {
            let e = h.recip() - T::one();
            let idx = partition.grid_indices(path)?;
            for w in idx.windows(2) {
                let (x, y) = (b[w[0]], b[w[1]]);
                if x < y {
                    for k in strict_range(levels, x, y) {
                        values[k] += (y - levels[k]).powf(e);
                    }
                }
            }
        }
        EstimatorTag::Occupation(bw) => {
            let bw = bw.unwrap_or_else(|| default_bandwidth(path));
            if !(bw > T::zero()) {
                return Err(Error::Domain(format!("bandwidth must be positive, got {bw}")));
            }
            for k in 0..path.len() - 1 {
                let lo = levels.partition_point(|&a| a < b[k] - bw);
                let hi = levels.partition_point(|&a| a <= b[k] + bw);
                let dt = t[k + 1] - t[k];
                for l in lo..hi {
                    if (b[k] - levels[l]).abs() <= bw {
                        values[l] += dt;
                    }
                }
            }
            let scale = T::lit(2.0) * bw;
            values.iter_mut().for_each(|v| *v /= scale);
        }
    }
    let c = normalizing_constant(tag, h)?;
    values.iter_mut().for_each(|v| *v /= c);
    let n = partition.intervals();
    let partition_level = n.is_power_of_two().then(|| n.trailing_zeros());
    let estimator = match tag {
        EstimatorTag::Occupation(None) => EstimatorTag::Occupation(Some(default_bandwidth(path))),
        other => other,
    };
    Ok(LocalTimeCurve {
        levels: levels.to_vec(),
        values,
        estimator,
        hurst: h,
        horizon: path.horizon(),
        partition_level,
        normalized: true,
    })
}

/// `(∫ |v_1 - v_2|^m da)^{1/m}` by the trapezoid rule over the shared
/// levels.
pub fn lm_distance_over_levels<T: Real>(c1: &LocalTimeCurve<T>, c2: &LocalTimeCurve<T>, m: T) -> Result<T> {
    if c1.levels != c2.levels {
        return Err(Error::Alignment("curves do not share a level grid".into()));
    }
    if !(m >= T::one()) {
        return Err(Error::Domain(format!("m must be at least 1, got {m}")));
    }
    let d: Vec<T> = c1.values.iter().zip(&c2.values).map(|(&x, &y)| (x - y).abs().powf(m)).collect();
    Ok(trapezoid(&c1.levels, &d).powf(m.recip()))
}

/// Normalized local time at level `a` accumulated over `[0, t_k]` for every
/// grid time `t_k`, using the path's own grid as the partition.
pub fn cumulative_local_time<T: Real>(path: &FbmPath<T>, a: T, tag: EstimatorTag<T>) -> Result<Vec<T>> {
    check_scalar(path)?;
    let h = path.hurst();
    let (t, b) = (path.times(), path.values());
    let bw = match tag {
        EstimatorTag::Occupation(bw) => bw.unwrap_or_else(|| default_bandwidth(path)),
        _ => T::one(),
    };
    let c = normalizing_constant(tag, h)?;
    let mut out = Vec::with_capacity(path.len());
    let mut acc = T::zero();
    out.push(acc);
    for k in 0..path.len() - 1 {
        let (x, y, dt) = (b[k], b[k + 1], t[k + 1] - t[k]);
        let term = match tag {
            EstimatorTag::Upcross(g) => {
                if x < a && a < y {
                    crossing_weight(dt, y - x, h, g)
                } else {
                    T::zero()
                }
            }
            EstimatorTag::Count => {
                if x < a && a < y {
                    dt.powf(T::one() - h)
                } else {
                    T::zero()
                }
            }
            EstimatorTag::Tilde => {
                if x < a && a < y {
                    (y - a).powf(h.recip() - T::one())
                } else {
                    T::zero()
                }
            }
            EstimatorTag::Occupation(_) => {
                if (x - a).abs() <= bw {
                    dt / (T::lit(2.0) * bw)
                } else {
                    T::zero()
                }
            }
        };
        acc += term / c;
        out.push(acc);
    }
    Ok(out)
}
