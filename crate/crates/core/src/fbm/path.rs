use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::numerics::SeedSpec;
use crate::Real;

/// How a path was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathMethod {
    Cholesky,
    Circulant,
    /// Discretized Mandelbrot–van Ness integral; carries its white noise.
    Kernel,
    /// Built by hand (tests, deterministic fixtures, parsed files).
    Synthetic,
}

impl PathMethod {
    pub fn tag(self) -> &'static str {
        match self {
            PathMethod::Cholesky => "cholesky",
            PathMethod::Circulant => "circulant",
            PathMethod::Kernel => "kernel",
            PathMethod::Synthetic => "synthetic",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "cholesky" => Some(PathMethod::Cholesky),
            "circulant" => Some(PathMethod::Circulant),
            "kernel" => Some(PathMethod::Kernel),
            "synthetic" => Some(PathMethod::Synthetic),
            _ => None,
        }
    }
}

/// White noise underlying a kernel-sampled path.
///
/// Cell `j` (for `j = -past_cells .. n-1`) is `[j Δ, (j+1) Δ]` and carries
/// the standard normal `ξ_j = ΔW_j / √Δ`. The truncation window is
/// `[-past_cells Δ, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DrivingNoise<T> {
    pub cell_width: T,
    pub past_cells: usize,
    /// `increments[c][j + past_cells]` is `ξ_j` for component `c`.
    pub increments: Vec<Vec<T>>,
    /// `B(0)` per component.
    pub initial: Vec<T>,
}

impl<T: Real> DrivingNoise<T> {
    pub fn window_start(&self) -> T {
        -self.cell_width * T::from_usize_lossy(self.past_cells)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance<T> {
    pub method: PathMethod,
    pub seed: Option<SeedSpec>,
    pub noise: Option<DrivingNoise<T>>,
}

impl<T> Provenance<T> {
    pub fn synthetic() -> Self {
        Self { method: PathMethod::Synthetic, seed: None, noise: None }
    }
}

/// A sampled path on a strictly increasing time grid starting at 0, with one
/// value column per spatial dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct FbmPath<T> {
    hurst: T,
    times: Vec<T>,
    columns: Vec<Vec<T>>,
    var0: T,
    provenance: Provenance<T>,
}

impl<T: Real> FbmPath<T> {
    pub fn new(
        hurst: T,
        times: Vec<T>,
        columns: Vec<Vec<T>>,
        var0: T,
        provenance: Provenance<T>,
    ) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::Domain("a path needs at least two grid times".into()));
        }
        if times[0] != T::zero() {
            return Err(Error::Domain(format!("path grid must start at 0, got {}", times[0])));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Domain("path grid must be strictly increasing".into()));
        }
        if columns.is_empty() || columns.iter().any(|c| c.len() != times.len()) {
            return Err(Error::Domain("every value column must match the time grid".into()));
        }
        Ok(Self { hurst, times, columns, var0, provenance })
    }

    /// One-dimensional hand-built path.
    pub fn synthetic(hurst: T, times: Vec<T>, values: Vec<T>) -> Result<Self> {
        Self::new(hurst, times, vec![values], T::zero(), Provenance::synthetic())
    }

    pub fn hurst(&self) -> T {
        self.hurst
    }

    pub fn var0(&self) -> T {
        self.var0
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn horizon(&self) -> T {
        *self.times.last().expect("nonempty grid")
    }

    /// First (or only) component.
    pub fn values(&self) -> &[T] {
        &self.columns[0]
    }

    pub fn column(&self, c: usize) -> &[T] {
        &self.columns[c]
    }

    pub fn columns(&self) -> &[Vec<T>] {
        &self.columns
    }

    /// State vector at grid index `k`.
    pub fn state(&self, k: usize) -> Vec<T> {
        self.columns.iter().map(|c| c[k]).collect()
    }

    pub fn provenance(&self) -> &Provenance<T> {
        &self.provenance
    }

    /// Grid index whose time equals `t` up to a relative `1e-9` of the
    /// horizon (or the type's epsilon scale, whichever is larger).
    pub fn index_of_time(&self, t: T) -> Option<usize> {
        let tol = self.horizon() * T::lit(1e-9).max(T::epsilon() * T::lit(16.0));
        let k = self.times.partition_point(|&x| x < t - tol);
        (k < self.times.len() && (self.times[k] - t).abs() <= tol).then_some(k)
    }

    /// Common step if the grid is uniform (to relative `1e-9`).
    pub fn uniform_step(&self) -> Option<T> {
        let n = self.times.len() - 1;
        let step = self.horizon() / T::from_usize_lossy(n);
        let tol = step * T::lit(1e-6);
        self.times
            .windows(2)
            .all(|w| ((w[1] - w[0]) - step).abs() <= tol)
            .then_some(step)
    }

    /// Writes `t,value` (or `t,value0,value1,...`) rows with 17 significant
    /// digits, preceded by metadata comments. `extra` lines are emitted as
    /// additional `# ` comments.
    pub fn write_csv<W: Write>(&self, mut w: W, extra: &[String]) -> Result<()> {
        let seed = self
            .provenance
            .seed
            .map(|s| format!("{}:{}", s.master_seed, s.stream_index))
            .unwrap_or_else(|| "none".into());
        writeln!(
            w,
            "# hurst={}, var0={}, seed={}, method={}",
            fmt17(self.hurst),
            fmt17(self.var0),
            seed,
            self.provenance.method.tag()
        )?;
        for line in extra {
            writeln!(w, "# {line}")?;
        }
        if self.dim() == 1 {
            writeln!(w, "t,value")?;
        } else {
            let cols: Vec<String> = (0..self.dim()).map(|c| format!("value{c}")).collect();
            writeln!(w, "t,{}", cols.join(","))?;
        }
        let mut line = String::new();
        for k in 0..self.len() {
            line.clear();
            line.push_str(&fmt17(self.times[k]));
            for c in &self.columns {
                line.push(',');
                line.push_str(&fmt17(c[k]));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Parses the format written by [`FbmPath::write_csv`]. Driving noise is
    /// not serialized, so parsed paths never carry it.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut hurst = None;
        let mut var0 = T::zero();
        let mut method = PathMethod::Synthetic;
        let mut seed = None;
        let mut header_seen = false;
        let mut times = Vec::new();
        let mut columns: Vec<Vec<T>> = Vec::new();
        for line in r.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                for field in comment.split(',') {
                    let Some((key, value)) = field.trim().split_once('=') else { continue };
                    match key.trim() {
                        "hurst" => hurst = Some(parse_real::<T>(value)?),
                        "var0" => var0 = parse_real(value)?,
                        "method" => method = PathMethod::from_tag(value.trim()).unwrap_or(PathMethod::Synthetic),
                        "seed" => seed = parse_seed(value.trim()),
                        _ => {}
                    }
                }
                continue;
            }
            if !header_seen {
                let cols = line.split(',').count();
                if cols < 2 || !line.starts_with("t,") {
                    return Err(Error::Parse(format!("bad path header `{line}`")));
                }
                columns = vec![Vec::new(); cols - 1];
                header_seen = true;
                continue;
            }
            let mut fields = line.split(',');
            times.push(parse_real(fields.next().unwrap_or(""))?);
            for col in columns.iter_mut() {
                col.push(parse_real(fields.next().ok_or_else(|| Error::Parse(format!("short row `{line}`")))?)?);
            }
        }
        let hurst = hurst.ok_or_else(|| Error::Parse("missing hurst metadata".into()))?;
        Self::new(hurst, times, columns, var0, Provenance { method, seed, noise: None })
    }
}

/// 17 significant digits, scientific notation: round-trips every `f64`.
pub(crate) fn fmt17<T: Real>(x: T) -> String {
    format!("{:.16e}", x.as_f64())
}

fn parse_real<T: Real>(s: &str) -> Result<T> {
    let v: f64 = s.trim().parse().map_err(|_| Error::Parse(format!("bad number `{s}`")))?;
    T::from_f64(v).ok_or_else(|| Error::Parse(format!("number `{s}` out of range")))
}

fn parse_seed(s: &str) -> Option<SeedSpec> {
    let (m, i) = s.split_once(':')?;
    Some(SeedSpec::new(m.parse().ok()?, i.parse().ok()?))
}
