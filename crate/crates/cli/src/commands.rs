//! The experiment commands. Each writes its files into the output
//! directory and returns the checks it evaluated.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use fracstoch::fbm::{c_h, sample_fbm, FbmConfig, FbmPath};
use fracstoch::fsde::{delta_thresholds, preset as sde_preset, uniqueness_probe, ProbeConfig, UniquenessReport};
use fracstoch::integrals::{chain_rule_oracle, IntegrandSpec, ItoGerm, StratonovichGerm, VariationGerm};
use fracstoch::local_time::{
    cumulative_local_time, default_level_grid, frak_c, local_time_curve, EstimatorTag, LocalTimeCurve,
};
use fracstoch::numerics::{abs_normal_moment, SeedSpec};
use fracstoch::sewing::{
    dyadic_partition, estimate_convergence_rate_with, FnGerm, Germ, RateFitResult, RateOptions, RateReference,
};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::svg::{line_plot, Series};

/// One pass/fail line of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    /// Acceptance criterion number the check feeds, if any.
    pub criterion: Option<u32>,
    pub name: String,
    pub value: f64,
    pub threshold: String,
    pub passed: bool,
}

impl Check {
    fn new(criterion: Option<u32>, name: impl Into<String>, value: f64, threshold: impl Into<String>, passed: bool) -> Self {
        Self { criterion, name: name.into(), value, threshold: threshold.into(), passed }
    }
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn create(path: &Path) -> CliResult<BufWriter<fs::File>> {
    fs::File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn finish(path: &Path, mut w: BufWriter<fs::File>) -> CliResult<()> {
    w.flush().map_err(|e| CliError::io(path, e))
}

fn prepare(out: &Path) -> CliResult<()> {
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn core_io(path: &Path) -> impl Fn(fracstoch::Error) -> CliError + '_ {
    move |e| match e {
        fracstoch::Error::Io(io) => CliError::io(path, io),
        other => CliError::Core(other),
    }
}

fn write_checks(out: &Path, command: &str, cfg: &ExperimentConfig, outcome: &mut Outcome) -> CliResult<()> {
    let path = out.join(format!("{command}_checks.csv"));
    let mut w = create(&path)?;
    let io = |e| CliError::io(&path, e);
    for line in cfg.header() {
        writeln!(w, "# {line}").map_err(io)?;
    }
    writeln!(w, "criterion,check,value,threshold,passed").map_err(io)?;
    for c in &outcome.checks {
        let crit = c.criterion.map(|k| k.to_string()).unwrap_or_default();
        writeln!(w, "{crit},{},{:e},{},{}", c.name, c.value, c.threshold, c.passed).map_err(io)?;
    }
    finish(&path, w)?;
    outcome.files.push(path);
    Ok(())
}

/// The path every path-based command works on: stream 0 of the seed.
pub fn sample_path(cfg: &ExperimentConfig) -> CliResult<FbmPath<f64>> {
    let fbm = FbmConfig::new(cfg.hurst, cfg.horizon, cfg.grid_n())?
        .with_var0(cfg.var0)
        .with_seed(SeedSpec::new(cfg.seed, 0));
    Ok(sample_fbm(&fbm, cfg.sample_method()?)?)
}

/// Writes `path.csv` and `path.svg`.
pub fn cmd_sample(cfg: &ExperimentConfig, out: &Path) -> CliResult<Outcome> {
    prepare(out)?;
    let path = sample_path(cfg)?;
    let mut outcome = Outcome::default();
    let csv = out.join("path.csv");
    let mut w = create(&csv)?;
    path.write_csv(&mut w, &cfg.header()).map_err(core_io(&csv))?;
    finish(&csv, w)?;
    outcome.files.push(csv);

    let svg = out.join("path.svg");
    let title = format!("fractional Brownian motion, H = {}", cfg.hurst);
    write_text(&svg, &line_plot(&title, "t", "B(t)", &[Series::new("path", path.times(), path.values())], &cfg.header()))?;
    outcome.files.push(svg);

    let rows = path.len() as f64;
    outcome.checks.push(Check::new(Some(12), "path_rows", rows, format!("={}", cfg.grid_n() + 1), path.len() == cfg.grid_n() + 1));
    outcome.checks.push(Check::new(
        Some(12),
        "path_finite",
        path.values().iter().filter(|v| !v.is_finite()).count() as f64,
        "=0",
        path.values().iter().all(|v| v.is_finite()),
    ));
    write_checks(out, "sample", cfg, &mut outcome)?;
    Ok(outcome)
}

fn file_tag(tag: &EstimatorTag<f64>) -> String {
    match tag {
        EstimatorTag::Occupation(_) => "occupation".into(),
        other => other.to_string().replace(':', "_"),
    }
}

fn write_curve(out: &Path, cfg: &ExperimentConfig, curve: &LocalTimeCurve<f64>) -> CliResult<PathBuf> {
    let path = out.join(format!("localtime_{}.csv", file_tag(&curve.estimator)));
    let mut w = create(&path)?;
    curve.write_csv(&mut w, &cfg.header()).map_err(core_io(&path))?;
    finish(&path, w)?;
    Ok(path)
}

/// Per estimator: the normalized local-time curve over a level grid and the
/// cumulative local time at `level` over time, plus overlay plots and a
/// summary.
pub fn cmd_localtime(cfg: &ExperimentConfig, out: &Path) -> CliResult<Outcome> {
    prepare(out)?;
    let path = sample_path(cfg)?;
    let partition = dyadic_partition(cfg.horizon, cfg.partition_level())?;
    let levels = default_level_grid(&path, cfg.level_count)?;
    let tags = cfg.estimator_tags()?;
    let mut outcome = Outcome::default();
    let mut curves = Vec::new();
    let mut cumulative = Vec::new();
    for &tag in &tags {
        let curve = local_time_curve(&path, &partition, tag, &levels)?;
        outcome.files.push(write_curve(out, cfg, &curve)?);
        let cum = cumulative_local_time(&path, cfg.level, tag)?;
        let file = out.join(format!("cumulative_{}.csv", file_tag(&tag)));
        let mut w = create(&file)?;
        let io = |e| CliError::io(&file, e);
        for line in cfg.header() {
            writeln!(w, "# {line}").map_err(io)?;
        }
        writeln!(w, "# estimator={tag}, level={}", cfg.level).map_err(io)?;
        writeln!(w, "t,value").map_err(io)?;
        for (t, v) in path.times().iter().zip(&cum) {
            writeln!(w, "{t:e},{v:e}").map_err(io)?;
        }
        finish(&file, w)?;
        outcome.files.push(file);
        let monotone = cum.windows(2).all(|w| w[1] >= w[0]);
        outcome.checks.push(Check::new(
            Some(12),
            format!("cumulative_nondecreasing_{}", file_tag(&tag)),
            *cum.last().expect("nonempty"),
            "nondecreasing",
            monotone,
        ));
        curves.push(curve);
        cumulative.push(cum);
    }

    let summary = out.join("localtime_summary.csv");
    let mut w = create(&summary)?;
    let io = |e| CliError::io(&summary, e);
    for line in cfg.header() {
        writeln!(w, "# {line}").map_err(io)?;
    }
    writeln!(w, "estimator,integral,horizon,final_cumulative").map_err(io)?;
    for (c, cum) in curves.iter().zip(&cumulative) {
        writeln!(w, "{},{:e},{:e},{:e}", c.estimator, c.integral(), cfg.horizon, cum.last().expect("nonempty")).map_err(io)?;
    }
    finish(&summary, w)?;
    outcome.files.push(summary);

    for c in &curves {
        if let EstimatorTag::Occupation(_) = c.estimator {
            let rel = (c.integral() / cfg.horizon - 1.0).abs();
            outcome.checks.push(Check::new(Some(7), "occupation_integral_rel_error", rel, "<0.03", rel < 0.03));
        }
    }

    let names: Vec<String> = curves.iter().map(|c| c.estimator.to_string()).collect();
    let series: Vec<Series<'_>> = curves.iter().zip(&names).map(|(c, n)| Series::new(n.clone(), &c.levels, &c.values)).collect();
    let svg = out.join("localtime.svg");
    let title = format!("local time over levels, H = {}", cfg.hurst);
    write_text(&svg, &line_plot(&title, "level a", "L(a)", &series, &cfg.header()))?;
    outcome.files.push(svg);
    let series: Vec<Series<'_>> = cumulative.iter().zip(&names).map(|(c, n)| Series::new(n.clone(), path.times(), c)).collect();
    let svg = out.join("cumulative.svg");
    let title = format!("local time at {} up to t, H = {}", cfg.level, cfg.hurst);
    write_text(&svg, &line_plot(&title, "t", "L_t", &series, &cfg.header()))?;
    outcome.files.push(svg);

    write_checks(out, "localtime", cfg, &mut outcome)?;
    Ok(outcome)
}

/// Germ registry: `variation[:p]` (default `p = 1/H`), `ito:<f>`,
/// `strat:<f>` with `f` an integrand key, `upcross:<a>,<γ>`.
enum GermChoice {
    Variation(f64),
    Ito(IntegrandSpec<f64>),
    Strat(IntegrandSpec<f64>),
    Upcross(f64, f64),
}

fn parse_germ(key: &str, hurst: f64) -> CliResult<GermChoice> {
    let (head, arg) = match key.split_once(':') {
        Some((h, a)) => (h.trim(), Some(a.trim())),
        None => (key.trim(), None),
    };
    let bad = || CliError::Config(format!("unknown germ {key:?}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    match (head, arg) {
        ("variation", None) => Ok(GermChoice::Variation(1.0 / hurst)),
        ("variation", Some(p)) => Ok(GermChoice::Variation(num(p)?)),
        ("ito", Some(f)) => Ok(GermChoice::Ito(IntegrandSpec::from_key(f).map_err(|e| CliError::Config(e.to_string()))?)),
        ("strat", Some(f)) => Ok(GermChoice::Strat(IntegrandSpec::from_key(f).map_err(|e| CliError::Config(e.to_string()))?)),
        ("upcross", Some(spec)) => {
            let (a, g) = spec.split_once(',').ok_or_else(bad)?;
            Ok(GermChoice::Upcross(num(a)?, num(g)?))
        }
        _ => Err(bad()),
    }
}

/// Sewing rate study for the configured germ. Writes `rate.csv` and a
/// log-log plot `rate.svg`.
pub fn cmd_rate(cfg: &ExperimentConfig, out: &Path) -> CliResult<Outcome> {
    prepare(out)?;
    let fbm = FbmConfig::new(cfg.hurst, cfg.horizon, cfg.grid_n())?
        .with_var0(cfg.var0)
        .with_seed(SeedSpec::new(cfg.seed, 0));
    let choice = parse_germ(&cfg.germ, cfg.hurst)?;
    let h = cfg.hurst;
    let horizon = cfg.horizon;
    let variation_limit = move |p: f64| -> CliResult<Option<f64>> {
        if (p * h - 1.0).abs() > 1e-12 {
            return Ok(None);
        }
        Ok(Some(c_h(h)?.powf(1.0 / (2.0 * h)) * abs_normal_moment(p)? * horizon))
    };
    let exact_fn: Option<Box<dyn Fn(&FbmPath<f64>) -> f64 + Sync>> = match (&choice, cfg.reference.as_str()) {
        (_, "finest") | (_, "successive") => None,
        (GermChoice::Variation(p), _) => match variation_limit(*p)? {
            Some(limit) => Some(Box::new(move |_p: &FbmPath<f64>| limit)),
            None => return Err(CliError::Config("exact reference for variation needs p = 1/H".into())),
        },
        (GermChoice::Strat(f), _) => match f.potential() {
            Some(phi) => {
                let phi = phi.clone();
                Some(Box::new(move |p: &FbmPath<f64>| chain_rule_oracle(|x| phi(x), p)))
            }
            None => return Err(CliError::Config("exact reference for strat needs a gradient integrand".into())),
        },
        _ => return Err(CliError::Config(format!("no exact reference for germ {:?}", cfg.germ))),
    };
    let reference = match (cfg.reference.as_str(), &exact_fn) {
        ("successive", _) => RateReference::Successive,
        (_, Some(f)) => RateReference::Exact(f.as_ref()),
        _ => RateReference::FinestLevel,
    };
    let opts = RateOptions { reference, method: cfg.sample_method()? };
    let result: RateFitResult<f64> = match &choice {
        GermChoice::Variation(p) => run_rate(&VariationGerm(*p), &fbm, cfg, &opts)?,
        GermChoice::Ito(f) => run_rate(&ItoGerm(f), &fbm, cfg, &opts)?,
        GermChoice::Strat(f) => run_rate(&StratonovichGerm(f), &fbm, cfg, &opts)?,
        GermChoice::Upcross(a, g) => {
            let (a, g) = (*a, *g);
            let norm = frak_c(h, g)?;
            let germ = FnGerm::new(format!("upcross:{a},{g}"), move |p: &FbmPath<f64>, i: usize, j: usize| {
                let (x, y) = (p.values()[i], p.values()[j]);
                if x < a && a < y {
                    let dt = p.times()[j] - p.times()[i];
                    dt.powf(1.0 - (1.0 + g) * h) * (y - x).abs().powf(g) / norm
                } else {
                    0.0
                }
            });
            run_rate(&germ, &fbm, cfg, &opts)?
        }
    };
    let mut outcome = Outcome::default();
    let csv = out.join("rate.csv");
    let mut w = create(&csv)?;
    let mut extra = cfg.header();
    extra.push(format!("germ={}, reference={}", result.germ, cfg.reference));
    result.write_csv(&mut w, &extra).map_err(core_io(&csv))?;
    finish(&csv, w)?;
    outcome.files.push(csv);

    let xs: Vec<f64> = result.per_level.iter().map(|l| l.mesh.log2()).collect();
    let ys: Vec<f64> = result.per_level.iter().map(|l| l.lm_distance.value.max(1e-300).log2()).collect();
    let svg = out.join("rate.svg");
    let title = format!("L_m distance of Riemann sums, {} (H = {})", result.germ, cfg.hurst);
    write_text(&svg, &line_plot(&title, "log2 mesh", "log2 distance", &[Series::new(result.germ.clone(), &xs, &ys)], &cfg.header()))?;
    outcome.files.push(svg);

    let eps = result.epsilon_hat.value();
    let exact = result.epsilon_hat.is_exact();
    outcome.checks.push(Check::new(
        None,
        "epsilon_hat_positive",
        eps.unwrap_or(f64::INFINITY),
        ">0 or exact",
        exact || eps.is_some_and(|e| e > 0.0),
    ));
    if let Some(min) = cfg.min_rate {
        outcome.checks.push(Check::new(
            None,
            "epsilon_hat_min",
            eps.unwrap_or(f64::INFINITY),
            format!(">{min}"),
            exact || eps.is_some_and(|e| e > min),
        ));
    }
    write_checks(out, "rate", cfg, &mut outcome)?;
    Ok(outcome)
}

fn run_rate<G: Germ<f64> + ?Sized>(
    germ: &G,
    fbm: &FbmConfig<f64>,
    cfg: &ExperimentConfig,
    opts: &RateOptions<'_, f64>,
) -> CliResult<RateFitResult<f64>> {
    Ok(estimate_convergence_rate_with(germ, fbm, &cfg.rate_levels, cfg.m, cfg.replicas, opts)?)
}

/// Threshold table over an `H` grid and one uniqueness probe per preset.
pub fn cmd_sde(cfg: &ExperimentConfig, out: &Path) -> CliResult<Outcome> {
    prepare(out)?;
    let mut outcome = Outcome::default();

    let table = out.join("thresholds.csv");
    let mut w = create(&table)?;
    let io = |e| CliError::io(&table, e);
    for line in cfg.header() {
        writeln!(w, "# {line}").map_err(io)?;
    }
    writeln!(w, "hurst,strong,weak,young").map_err(io)?;
    let n = cfg.threshold_grid.max(1);
    let mut ordered = true;
    for k in 1..=n {
        let h = 0.5 + 0.5 * k as f64 / (n + 1) as f64;
        let t = delta_thresholds(h)?;
        ordered &= t.strong <= t.weak && t.weak <= t.young;
        writeln!(w, "{h:e},{:e},{:e},{:e}", t.strong, t.weak, t.young).map_err(io)?;
    }
    finish(&table, w)?;
    outcome.files.push(table);
    outcome.checks.push(Check::new(None, "threshold_ordering", n as f64, "strong<=weak<=young", ordered));

    let thresholds = delta_thresholds(cfg.hurst)?;
    let mut reports: Vec<(String, UniquenessReport<f64>)> = Vec::new();
    for (k, name) in cfg.sde_presets.iter().enumerate() {
        let coeffs = sde_preset::<f64>(name, cfg.delta).map_err(|e| CliError::Config(e.to_string()))?;
        let mut probe = ProbeConfig::new(
            cfg.hurst,
            vec![cfg.x0; coeffs.dim()],
            cfg.sde_levels.clone(),
            cfg.scales.clone(),
            cfg.sde_replicas,
        )
        .with_seed(SeedSpec::new(cfg.seed, 1 + k as u64));
        probe.horizon = cfg.horizon;
        probe.hermite_order = cfg.hermite_order;
        let report = uniqueness_probe(&coeffs, &probe)?;
        let file = out.join(format!("sde_{name}.csv"));
        let mut w = create(&file)?;
        let mut extra = cfg.header();
        extra.push(format!(
            "preset={name}, coefficients={}, hurst={}, delta={}, strong={:e}, weak={:e}, young={:e}",
            report.coefficients, cfg.hurst, cfg.delta, thresholds.strong, thresholds.weak, thresholds.young
        ));
        report.write_csv(&mut w, &extra).map_err(core_io(&file))?;
        finish(&file, w)?;
        outcome.files.push(file);
        if name == "constant" {
            outcome.checks.push(Check::new(Some(11), "sde_constant_max_distance", report.max_pair_distance, "<=1e-12", report.max_pair_distance <= 1e-12));
        } else {
            outcome.checks.push(Check::new(
                Some(11),
                format!("sde_{name}_no_plateau"),
                report.max_final_distance,
                format!("<{}*extrapolated, decay>0", fracstoch::fsde::PLATEAU_FACTOR),
                report.passed,
            ));
        }
        reports.push((name.clone(), report));
    }

    let steps: Vec<Vec<f64>> = reports.iter().map(|(_, r)| (0..r.diagonal_distances.len()).map(|k| k as f64).collect()).collect();
    let logs: Vec<Vec<f64>> = reports
        .iter()
        .map(|(_, r)| r.diagonal_distances.iter().map(|d| d.max(1e-300).log10()).collect())
        .collect();
    let series: Vec<Series<'_>> = reports
        .iter()
        .zip(steps.iter().zip(&logs))
        .map(|((n, _), (x, y))| Series::new(n.clone(), x, y))
        .collect();
    let svg = out.join("sde.svg");
    let title = format!("distance between successive refinements, H = {}, delta = {}", cfg.hurst, cfg.delta);
    write_text(&svg, &line_plot(&title, "refinement step", "log10 max sup-distance", &series, &cfg.header()))?;
    outcome.files.push(svg);

    write_checks(out, "sde", cfg, &mut outcome)?;
    Ok(outcome)
}

/// Collects every `*_checks.csv` in `dir` into `summary.csv`.
pub fn cmd_report(dir: &Path) -> CliResult<Outcome> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with("_checks.csv")))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Config(format!("no *_checks.csv files in {}", dir.display())));
    }
    let mut outcome = Outcome::default();
    let mut rows = Vec::new();
    for file in &files {
        let text = fs::read_to_string(file).map_err(|e| CliError::io(file, e))?;
        let source = file.file_name().and_then(|n| n.to_str()).unwrap_or_default().trim_end_matches("_checks.csv").to_string();
        for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 5 {
                return Err(CliError::Config(format!("malformed check line in {}: {line:?}", file.display())));
            }
            let check = Check {
                criterion: cols[0].parse().ok(),
                name: cols[1].to_string(),
                value: cols[2].parse().unwrap_or(f64::NAN),
                threshold: cols[3].to_string(),
                passed: cols[4] == "true",
            };
            rows.push((source.clone(), check));
        }
    }
    let path = dir.join("summary.csv");
    let mut w = create(&path)?;
    let io = |e| CliError::io(&path, e);
    writeln!(w, "source,criterion,check,value,threshold,status").map_err(io)?;
    for (source, c) in &rows {
        let crit = c.criterion.map(|k| k.to_string()).unwrap_or_default();
        let status = if c.passed { "PASS" } else { "FAIL" };
        writeln!(w, "{source},{crit},{},{:e},{},{status}", c.name, c.value, c.threshold).map_err(io)?;
    }
    let failed = rows.iter().filter(|(_, c)| !c.passed).count();
    writeln!(w, "# checks={}, failed={failed}", rows.len()).map_err(io)?;
    finish(&path, w)?;
    outcome.files.push(path);
    outcome.checks = rows.into_iter().map(|(_, c)| c).collect();
    Ok(outcome)
}
