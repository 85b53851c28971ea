//! Flat `key = value` experiment configuration.
//!
//! Lines are `key = value`; `#` starts a comment; blank lines are ignored.
//! Unknown and repeated keys are rejected. See the README for the schema.

use std::fmt::Write as _;
use std::path::Path;

use fracstoch::fbm::SampleMethod;
use fracstoch::local_time::EstimatorTag;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Every tunable of every command. Fields not used by a command are
/// ignored by it but still part of the hash.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub hurst: f64,
    pub horizon: f64,
    pub grid_level: u32,
    pub var0: f64,
    pub seed: u64,
    pub method: String,
    pub estimators: String,
    pub level: f64,
    pub level_count: usize,
    pub partition_level: Option<u32>,
    pub germ: String,
    pub rate_levels: Vec<u32>,
    pub m: f64,
    pub replicas: usize,
    pub reference: String,
    pub min_rate: Option<f64>,
    pub sde_presets: Vec<String>,
    pub delta: f64,
    pub sde_levels: Vec<u32>,
    pub scales: Vec<f64>,
    pub sde_replicas: usize,
    pub hermite_order: usize,
    pub x0: f64,
    pub threshold_grid: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "experiment".into(),
            hurst: 0.5,
            horizon: 1.0,
            grid_level: 12,
            var0: 0.0,
            seed: 1,
            method: "circulant".into(),
            estimators: "all".into(),
            level: 0.0,
            level_count: 201,
            partition_level: None,
            germ: "variation".into(),
            rate_levels: (4..=10).collect(),
            m: 2.0,
            replicas: 200,
            reference: "finest".into(),
            min_rate: None,
            sde_presets: vec!["constant".into(), "a".into(), "b".into(), "c".into()],
            delta: 0.25,
            sde_levels: (8..=12).collect(),
            scales: (4..=6).map(|k| 2f64.powi(-k)).collect(),
            sde_replicas: 10,
            hermite_order: 16,
            x0: 0.0,
            threshold_grid: 49,
        }
    }
}

pub const KEYS: &[&str] = &[
    "name",
    "hurst",
    "horizon",
    "grid_level",
    "var0",
    "seed",
    "method",
    "estimators",
    "level",
    "level_count",
    "partition_level",
    "germ",
    "rate_levels",
    "m",
    "replicas",
    "reference",
    "min_rate",
    "sde_presets",
    "delta",
    "sde_levels",
    "scales",
    "sde_replicas",
    "hermite_order",
    "x0",
    "threshold_grid",
];

fn bad(key: &str, value: &str) -> CliError {
    CliError::Config(format!("invalid value {value:?} for key {key:?}"))
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> CliResult<T> {
    value.parse().map_err(|_| bad(key, value))
}

/// `8..14` (inclusive) or `8,9,12`.
pub fn parse_levels(key: &str, value: &str) -> CliResult<Vec<u32>> {
    if let Some((a, b)) = value.split_once("..") {
        let (a, b): (u32, u32) = (num(key, a.trim())?, num(key, b.trim())?);
        if a > b {
            return Err(bad(key, value));
        }
        return Ok((a..=b).collect());
    }
    value.split(',').map(|v| num(key, v.trim())).collect()
}

/// `2^-4..2^-8` (every power in between) or a comma list of numbers.
pub fn parse_scales(key: &str, value: &str) -> CliResult<Vec<f64>> {
    if let Some((a, b)) = value.split_once("..") {
        let exp = |s: &str| -> CliResult<i32> {
            s.trim().strip_prefix("2^").ok_or_else(|| bad(key, value)).and_then(|e| num(key, e))
        };
        let (a, b) = (exp(a)?, exp(b)?);
        let ks: Vec<i32> = if a >= b { (b..=a).rev().collect() } else { (a..=b).collect() };
        return Ok(ks.into_iter().map(|k| 2f64.powi(k)).collect());
    }
    value.split(',').map(|v| num(key, v.trim())).collect()
}

fn join<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut cfg = Self::default();
        let mut seen = std::collections::HashSet::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", n + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(CliError::Config(format!("line {}: unknown key {key:?}", n + 1)));
            }
            if !seen.insert(key.to_string()) {
                return Err(CliError::Config(format!("line {}: key {key:?} given twice", n + 1)));
            }
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        match key {
            "name" => self.name = value.to_string(),
            "hurst" => self.hurst = num(key, value)?,
            "horizon" => self.horizon = num(key, value)?,
            "grid_level" => self.grid_level = num(key, value)?,
            "var0" => self.var0 = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "method" => self.method = value.to_string(),
            "estimators" => self.estimators = value.to_string(),
            "level" => self.level = num(key, value)?,
            "level_count" => self.level_count = num(key, value)?,
            "partition_level" => self.partition_level = Some(num(key, value)?),
            "germ" => self.germ = value.to_string(),
            "rate_levels" => self.rate_levels = parse_levels(key, value)?,
            "m" => self.m = num(key, value)?,
            "replicas" => self.replicas = num(key, value)?,
            "reference" => self.reference = value.to_string(),
            "min_rate" => self.min_rate = Some(num(key, value)?),
            "sde_presets" => self.sde_presets = value.split(',').map(|s| s.trim().to_string()).collect(),
            "delta" => self.delta = num(key, value)?,
            "sde_levels" => self.sde_levels = parse_levels(key, value)?,
            "scales" => self.scales = parse_scales(key, value)?,
            "sde_replicas" => self.sde_replicas = num(key, value)?,
            "hermite_order" => self.hermite_order = num(key, value)?,
            "x0" => self.x0 = num(key, value)?,
            "threshold_grid" => self.threshold_grid = num(key, value)?,
            _ => unreachable!("key list checked by the caller"),
        }
        Ok(())
    }

    pub fn validate(&self) -> CliResult<()> {
        let fail = |m: String| Err(CliError::Config(m));
        if !(self.hurst > 0.0 && self.hurst < 1.0) {
            return fail(format!("hurst must lie in (0, 1), got {}", self.hurst));
        }
        if !(self.horizon > 0.0) {
            return fail(format!("horizon must be positive, got {}", self.horizon));
        }
        if self.grid_level == 0 || self.grid_level > 24 {
            return fail(format!("grid_level must lie in 1..=24, got {}", self.grid_level));
        }
        if self.partition_level.is_some_and(|p| p > self.grid_level) {
            return fail("partition_level exceeds grid_level".into());
        }
        self.sample_method()?;
        self.estimator_tags()?;
        if self.level_count < 2 {
            return fail("level_count must be at least 2".into());
        }
        if !["finest", "successive", "exact"].contains(&self.reference.as_str()) {
            return fail(format!("reference must be finest, successive or exact, got {:?}", self.reference));
        }
        Ok(())
    }

    pub fn sample_method(&self) -> CliResult<SampleMethod> {
        match self.method.as_str() {
            "circulant" => Ok(SampleMethod::Circulant),
            "cholesky" => Ok(SampleMethod::Cholesky),
            other => Err(CliError::Config(format!("method must be circulant or cholesky, got {other:?}"))),
        }
    }

    /// `all` means upcross with γ = 1, count, tilde and occupation.
    pub fn estimator_tags(&self) -> CliResult<Vec<EstimatorTag<f64>>> {
        if self.estimators.trim() == "all" {
            return Ok(vec![
                EstimatorTag::Upcross(1.0),
                EstimatorTag::Count,
                EstimatorTag::Tilde,
                EstimatorTag::Occupation(None),
            ]);
        }
        self.estimators
            .split(',')
            .map(|s| s.trim().parse::<EstimatorTag<f64>>().map_err(|e| CliError::Config(e.to_string())))
            .collect()
    }

    pub fn grid_n(&self) -> usize {
        1usize << self.grid_level
    }

    pub fn partition_level(&self) -> u32 {
        self.partition_level.unwrap_or(self.grid_level)
    }

    /// Every key in schema order, one `key = value` per line. Parsing this
    /// text gives back the same configuration.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("name", self.name.clone());
        put("hurst", self.hurst.to_string());
        put("horizon", self.horizon.to_string());
        put("grid_level", self.grid_level.to_string());
        put("var0", self.var0.to_string());
        put("seed", self.seed.to_string());
        put("method", self.method.clone());
        put("estimators", self.estimators.clone());
        put("level", self.level.to_string());
        put("level_count", self.level_count.to_string());
        if let Some(p) = self.partition_level {
            put("partition_level", p.to_string());
        }
        put("germ", self.germ.clone());
        put("rate_levels", join(&self.rate_levels));
        put("m", self.m.to_string());
        put("replicas", self.replicas.to_string());
        put("reference", self.reference.clone());
        if let Some(r) = self.min_rate {
            put("min_rate", r.to_string());
        }
        put("sde_presets", self.sde_presets.join(","));
        put("delta", self.delta.to_string());
        put("sde_levels", join(&self.sde_levels));
        put("scales", join(&self.scales));
        put("sde_replicas", self.sde_replicas.to_string());
        put("hermite_order", self.hermite_order.to_string());
        put("x0", self.x0.to_string());
        put("threshold_grid", self.threshold_grid.to_string());
        s
    }

    /// First 16 hex digits of the SHA-256 of [`ExperimentConfig::canonical`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Comment lines every output file starts with.
    pub fn header(&self) -> Vec<String> {
        vec![format!("experiment={}, config_hash={}, seed={}", self.name, self.hash(), self.seed)]
    }
}

pub const FIG1: &str = include_str!("../presets/fig1.conf");
pub const FIG2: &str = include_str!("../presets/fig2.conf");

/// Built-in configuration by name.
pub fn preset(name: &str) -> CliResult<ExperimentConfig> {
    match name {
        "fig1" => ExperimentConfig::parse(FIG1),
        "fig2" => ExperimentConfig::parse(FIG2),
        _ => Err(CliError::Config(format!("unknown preset {name:?} (fig1, fig2)"))),
    }
}
