//! Command-line entry points. Each command resolves its settings from flags,
//! then an optional `key = value` file, then defaults, and echoes the resolved
//! settings into every artifact it writes.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::cf::{cf_expand, dv_statistic, PrecisionReal};
use crate::error::Error;
use crate::estimator::{
    estimate_c_area, oracle_siegel_transform, oracle_thin_volume, trimmed_series, EnsembleConfig, EstimateReport,
    OracleEstimate, ThinVolumeEstimate, TrimmedSeries,
};
use crate::excursion::{enumerate_excursions, write_csv, FilterParams, TrajectoryConfig};
use crate::hyperbolic::Units;
use crate::origami::{c_area_cusp, cylinder_decomposition, eps0, genus, orbit, stratum, Origami};
use crate::rng::task_rng;
use crate::sampler::{DiscSampler, Y_MIN};
use crate::stats::{bootstrap_median, median, Interval};

/// Default output directory when `--out` is absent.
pub const OUT_ENV: &str = "TWISTLAW_OUT_DIR";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Run(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_)
            | Error::EpsTooLarge { .. }
            | Error::Parse { .. }
            | Error::Disconnected(_)
            | Error::NotReduced { .. } => CliError::Usage(e.to_string()),
            e => CliError::Run(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Run(format!("i/o: {e}"))
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "twistlaw", version, about = "Cusp excursions, twists and Siegel-Veech constants of square-tiled surfaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// `key = value` file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (default: $TWISTLAW_OUT_DIR, else the working directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Trimmed coefficient sums of random continued fractions.
    CfDv {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Binary digits per sample (default 4n + 256).
        #[arg(long)]
        bits: Option<u64>,
    },
    /// Excursion log and trimmed statistics along random rays.
    Sim {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        ray: RayArgs,
        #[arg(long)]
        rays: Option<usize>,
    },
    /// Monte Carlo values of the area Siegel-Veech constant.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        surface: Option<String>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Radius of the Siegel transform.
        #[arg(long)]
        radius: Option<f64>,
        /// Base thin-part scale (default ε₀).
        #[arg(long)]
        eps: Option<f64>,
        /// Comma-separated divisors R of the base scale.
        #[arg(long)]
        ladder: Option<String>,
    },
    /// Ensemble estimate of the area Siegel-Veech constant.
    Estimate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        ray: RayArgs,
        #[arg(long)]
        rays: Option<usize>,
        #[arg(long)]
        resamples: Option<usize>,
        #[arg(long)]
        level: Option<f64>,
        /// Samples for each oracle (0 skips them).
        #[arg(long)]
        oracle_samples: Option<usize>,
    },
    /// Cylinder tables of a surface.
    Decompose {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        surface: Option<String>,
        /// `p,q`; all primitive directions with |p|, |q| <= bound when absent.
        #[arg(long, allow_hyphen_values = true)]
        direction: Option<String>,
        #[arg(long)]
        bound: Option<i64>,
    },
}

#[derive(Debug, Args)]
pub struct RayArgs {
    #[arg(long)]
    pub surface: Option<String>,
    /// Thin-part scale (default ε₀/2).
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub xi: Option<f64>,
    #[arg(long = "s-xi")]
    pub s_xi: Option<f64>,
    /// Comma-separated horizons; the largest is the run length.
    #[arg(long = "T")]
    pub t: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub bits: Option<u64>,
    /// `teichmuller` or `hyperbolic`.
    #[arg(long)]
    pub units: Option<String>,
}

/// Flag / file / default resolution with a record of the outcome.
struct Settings {
    file: BTreeMap<String, String>,
    resolved: BTreeMap<String, String>,
}

impl Settings {
    fn load(path: Option<&Path>) -> CliResult<Self> {
        let mut file = BTreeMap::new();
        if let Some(p) = path {
            let text = fs::read_to_string(p).map_err(|e| CliError::Usage(format!("config {}: {e}", p.display())))?;
            for (i, line) in text.lines().enumerate() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", i + 1)))?;
                file.insert(k.trim().replace('_', "-"), v.trim().to_string());
            }
        }
        Ok(Self { file, resolved: BTreeMap::new() })
    }

    fn get<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>, default: Option<T>) -> CliResult<Option<T>> {
        let from_file = self.file.remove(key);
        let v = match (flag, from_file) {
            (Some(v), _) => Some(v),
            (None, Some(s)) => Some(s.parse().map_err(|_| CliError::Usage(format!("cannot parse {key} = {s}")))?),
            (None, None) => default,
        };
        if let Some(v) = &v {
            self.resolved.insert(key.to_string(), v.to_string());
        }
        Ok(v)
    }

    fn require<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>, default: Option<T>) -> CliResult<T> {
        self.get(key, flag, default)?.ok_or_else(|| CliError::Usage(format!("--{key} is required")))
    }

    /// Rejects file keys the command does not use.
    fn finish(self) -> CliResult<BTreeMap<String, String>> {
        if let Some(k) = self.file.keys().next() {
            return Err(CliError::Usage(format!("unknown config key `{k}`")));
        }
        Ok(self.resolved)
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_list(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| usage(format!("bad number `{t}` in `{s}`"))))
        .collect()
}

fn parse_units(s: &str) -> CliResult<Units> {
    match s.to_ascii_lowercase().as_str() {
        "teichmuller" => Ok(Units::Teichmuller),
        "hyperbolic" => Ok(Units::Hyperbolic),
        _ => Err(usage(format!("units `{s}`"))),
    }
}

fn parse_surface(s: &str) -> CliResult<Origami> {
    Ok(s.parse::<Origami>()?)
}

fn out_dir(common: &Common) -> CliResult<PathBuf> {
    let dir = common
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Run(e.to_string()))?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

fn provenance(command: &str, config: &BTreeMap<String, String>) -> String {
    let kv: Vec<String> = config.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("twistlaw {} {command} {}", env!("CARGO_PKG_VERSION"), kv.join(" "))
}

/// Runs one parsed invocation; returns the lines to print.
pub fn run(cli: Cli) -> CliResult<Vec<String>> {
    match cli.command {
        Command::CfDv { common, n, samples, seed, bits } => cmd_cf_dv(&common, n, samples, seed, bits),
        Command::Sim { common, ray, rays } => cmd_sim(&common, ray, rays),
        Command::Oracle { common, surface, samples, seed, radius, eps, ladder } => {
            cmd_oracle(&common, surface, samples, seed, radius, eps, ladder)
        }
        Command::Estimate { common, ray, rays, resamples, level, oracle_samples } => {
            cmd_estimate(&common, ray, rays, resamples, level, oracle_samples)
        }
        Command::Decompose { config, surface, direction, bound } => cmd_decompose(config, surface, direction, bound),
    }
}

#[derive(Serialize)]
struct DvCheckpoint {
    n: usize,
    median: f64,
    ci: Interval,
    relative_error: f64,
}

#[derive(Serialize)]
struct DvSummary {
    command: &'static str,
    config: BTreeMap<String, String>,
    target: f64,
    median: f64,
    ci: Interval,
    relative_error: f64,
    checkpoints: Vec<DvCheckpoint>,
    samples_used: usize,
    exhausted: usize,
    version: &'static str,
}

/// `n`, `n/10`, ... down to 100, ascending.
fn dv_checkpoints(n: usize) -> Vec<usize> {
    let mut v = vec![n];
    let mut m = n / 10;
    while m >= 100 {
        v.push(m);
        m /= 10;
    }
    v.reverse();
    v
}

fn cmd_cf_dv(
    common: &Common,
    n: Option<usize>,
    samples: Option<usize>,
    seed: Option<u64>,
    bits: Option<u64>,
) -> CliResult<Vec<String>> {
    let mut st = Settings::load(common.config.as_deref())?;
    let n = st.require("n", n, Some(10_000))?;
    let samples = st.require("samples", samples, Some(200))?;
    let seed: u64 = st.require("seed", seed, None)?;
    if n < 100 {
        return Err(usage(format!("n = {n}, need n >= 100")));
    }
    if samples < 10 {
        return Err(usage(format!("samples = {samples}, need >= 10")));
    }
    let bits = st.require("bits", bits, Some(4 * n as u64 + 256))?;
    if bits < 64 {
        return Err(usage(format!("precision budget of {bits} bits, need >= 64")));
    }
    let config = st.finish()?;
    let dir = out_dir(common)?;
    let checkpoints = dv_checkpoints(n);

    let rows: Vec<Option<Vec<f64>>> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = task_rng(seed, "cf-dv", i);
            let x = PrecisionReal::random(&mut rng, bits).ok()?;
            let e = cf_expand(&x, n);
            checkpoints.iter().map(|&m| dv_statistic(&e, m).ok()).collect()
        })
        .collect();

    let mut trace = format!("# {}\n# sample: index; n: coefficients summed; dv: (sum - max)/(n ln n)\nsample,n,dv\n", provenance("cf-dv", &config));
    for (i, r) in rows.iter().enumerate() {
        if let Some(r) = r {
            for (m, v) in checkpoints.iter().zip(r) {
                trace.push_str(&format!("{i},{m},{v}\n"));
            }
        }
    }
    let used: Vec<&Vec<f64>> = rows.iter().flatten().collect();
    if used.is_empty() {
        return Err(CliError::Run("every sample exhausted its precision".into()));
    }
    let target = 1.0 / std::f64::consts::LN_2;
    let mut boot = task_rng(seed, "cf-dv-bootstrap", 0);
    let mut cps = Vec::new();
    for (j, &m) in checkpoints.iter().enumerate() {
        let col: Vec<f64> = used.iter().map(|r| r[j]).collect();
        let med = median(&col)?;
        cps.push(DvCheckpoint {
            n: m,
            median: med,
            ci: bootstrap_median(&col, 1000, 0.9, &mut boot)?,
            relative_error: (med - target) / target,
        });
    }
    let last = cps.last().expect("at least one checkpoint");
    let summary = DvSummary {
        command: "cf-dv",
        target,
        median: last.median,
        ci: last.ci,
        relative_error: last.relative_error,
        samples_used: used.len(),
        exhausted: samples - used.len(),
        checkpoints: cps,
        config,
        version: env!("CARGO_PKG_VERSION"),
    };
    fs::write(dir.join("cf_dv_trace.csv"), trace)?;
    write_json(&dir.join("cf_dv_summary.json"), &summary)?;
    Ok(vec![serde_json::to_string(&summary).map_err(|e| CliError::Run(e.to_string()))?])
}

struct RayRun {
    surface: Origami,
    traj: TrajectoryConfig,
    grid: Vec<f64>,
    seed: u64,
    bits: Option<u64>,
}

fn resolve_rays(st: &mut Settings, ray: RayArgs, default_grid: &str) -> CliResult<RayRun> {
    let surface = parse_surface(&st.require("surface", ray.surface, None::<String>)?)?;
    let e0 = eps0(&surface);
    let eps = st.require("eps", ray.eps, Some(e0 / 2.0))?;
    let xi = st.require("xi", ray.xi, Some(2.0))?;
    let s_xi = st.require("s-xi", ray.s_xi, Some(2.0))?;
    let grid = parse_list(&st.require("T", ray.t, Some(default_grid.to_string()))?)?;
    let seed = st.require("seed", ray.seed, None)?;
    let bits = st.get("bits", ray.bits, None)?;
    let units = parse_units(&st.require("units", ray.units, Some("teichmuller".to_string()))?)?;
    let horizon = grid.iter().cloned().fold(f64::NAN, f64::max);
    let traj = TrajectoryConfig { eps, xi, s_xi, horizon, units };
    traj.validate(&surface)?;
    if grid.windows(2).any(|w| w[0] >= w[1]) || !(grid[0] >= std::f64::consts::E) {
        return Err(usage(format!("T grid {grid:?} must increase from at least e")));
    }
    Ok(RayRun { surface, traj, grid, seed, bits })
}

#[derive(Serialize)]
struct RaySummary {
    id: u64,
    frames: usize,
    records: usize,
    precision_exhausted: bool,
    truncated_at: Option<f64>,
    overlaps: crate::excursion::Overlaps,
    series: TrimmedSeries,
}

#[derive(Serialize)]
struct SimReport {
    command: &'static str,
    config: BTreeMap<String, String>,
    surface: String,
    stratum: Vec<usize>,
    genus: usize,
    eps0: f64,
    rays: Vec<RaySummary>,
    version: &'static str,
}

fn cmd_sim(common: &Common, ray: RayArgs, rays: Option<usize>) -> CliResult<Vec<String>> {
    let mut st = Settings::load(common.config.as_deref())?;
    let run = resolve_rays(&mut st, ray, "500,1000,2000")?;
    let rays = st.require("rays", rays, Some(1))?;
    if rays == 0 {
        return Err(usage("rays = 0"));
    }
    let config = st.finish()?;
    let dir = out_dir(common)?;
    let sampler = DiscSampler::new(&run.surface);
    let bits = run.bits.unwrap_or_else(|| run.traj.precision_bits(run.surface.n(), Y_MIN));
    let logs: Vec<_> = (0..rays as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = task_rng(run.seed, "ray", i);
            enumerate_excursions(&run.traj, &sampler.trajectory(i, bits, &mut rng)?)
        })
        .collect::<crate::Result<_>>()?;
    let params = FilterParams { xi: run.traj.xi, s_xi: run.traj.s_xi };
    let stratum = stratum(&run.surface);
    let prov = format!("{}\nstratum {:?}", provenance("sim", &config), stratum);
    let mut csv = Vec::new();
    write_csv(&mut csv, &logs, params, run.traj.horizon, &prov)?;
    let summaries = logs
        .iter()
        .map(|l| {
            Ok(RaySummary {
                id: l.id,
                frames: l.frames,
                records: l.records.len(),
                precision_exhausted: l.precision_exhausted,
                truncated_at: l.truncated_at,
                overlaps: l.overlaps.clone(),
                series: trimmed_series(l, params, &run.grid, run.traj.eps)?,
            })
        })
        .collect::<crate::Result<Vec<_>>>()?;
    let report = SimReport {
        command: "sim",
        config,
        surface: run.surface.to_string(),
        genus: genus(&run.surface),
        eps0: eps0(&run.surface),
        stratum,
        rays: summaries,
        version: env!("CARGO_PKG_VERSION"),
    };
    fs::write(dir.join("sim_excursions.csv"), csv)?;
    write_json(&dir.join("sim_series.json"), &report)?;
    let total: usize = logs.iter().map(|l| l.records.len()).sum();
    Ok(vec![format!("sim: {} rays, {total} excursions, written to {}", rays, dir.display())])
}

#[derive(Serialize)]
struct OracleReport {
    command: &'static str,
    config: BTreeMap<String, String>,
    surface: String,
    stratum: Vec<usize>,
    siegel_transform: OracleEstimate,
    thin_volume: ThinVolumeEstimate,
    /// `|a - b| / max(a, b)`.
    relative_gap: f64,
    c_area_cusp: f64,
    version: &'static str,
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

fn cmd_oracle(
    common: &Common,
    surface: Option<String>,
    samples: Option<usize>,
    seed: Option<u64>,
    radius: Option<f64>,
    eps: Option<f64>,
    ladder: Option<String>,
) -> CliResult<Vec<String>> {
    let mut st = Settings::load(common.config.as_deref())?;
    let surface = parse_surface(&st.require("surface", surface, None::<String>)?)?;
    let samples = st.require("samples", samples, Some(100_000))?;
    let seed = st.require("seed", seed, None)?;
    let radius = st.require("radius", radius, Some(1.0))?;
    let eps = st.require("eps", eps, Some(eps0(&surface)))?;
    let ladder = parse_list(&st.require("ladder", ladder, Some("1,2,4".to_string()))?)?;
    if samples < 1000 {
        return Err(usage(format!("samples = {samples}, need >= 1000")));
    }
    let config = st.finish()?;
    let dir = out_dir(common)?;
    let sampler = DiscSampler::new(&surface);
    let siegel = oracle_siegel_transform(&sampler, radius, samples, seed)?;
    let thin = oracle_thin_volume(&sampler, eps, &ladder, samples, seed)?;
    let report = OracleReport {
        command: "oracle",
        config,
        surface: surface.to_string(),
        stratum: stratum(&surface),
        relative_gap: relative_gap(siegel.value, thin.value),
        siegel_transform: siegel,
        thin_volume: thin,
        c_area_cusp: c_area_cusp(&surface),
        version: env!("CARGO_PKG_VERSION"),
    };
    write_json(&dir.join("oracle_report.json"), &report)?;
    Ok(vec![format!(
        "oracle: siegel {:.6} ± {:.6}, thin {:.6} ± {:.6}, gap {:.4}",
        report.siegel_transform.value,
        report.siegel_transform.stderr,
        report.thin_volume.value,
        report.thin_volume.stderr,
        report.relative_gap
    )])
}

#[derive(Serialize)]
struct EstimateOutput {
    command: &'static str,
    config: BTreeMap<String, String>,
    #[serde(flatten)]
    report: EstimateReport,
}

fn cmd_estimate(
    common: &Common,
    ray: RayArgs,
    rays: Option<usize>,
    resamples: Option<usize>,
    level: Option<f64>,
    oracle_samples: Option<usize>,
) -> CliResult<Vec<String>> {
    let mut st = Settings::load(common.config.as_deref())?;
    let run = resolve_rays(&mut st, ray, "500,1000,2000")?;
    let rays = st.require("rays", rays, Some(100))?;
    let resamples = st.require("resamples", resamples, Some(1000))?;
    let level = st.require("level", level, Some(0.9))?;
    let oracle_samples = st.require("oracle-samples", oracle_samples, Some(20_000))?;
    if oracle_samples != 0 && oracle_samples < 1000 {
        return Err(usage(format!("oracle-samples = {oracle_samples}, need 0 or >= 1000")));
    }
    let config = st.finish()?;
    let cfg = EnsembleConfig {
        surface: run.surface.clone(),
        trajectory: run.traj,
        grid: run.grid,
        rays,
        seed: run.seed,
        bits: run.bits,
        resamples,
        level,
    };
    cfg.validate()?;
    let dir = out_dir(common)?;
    let (mut report, _) = estimate_c_area(&cfg)?;
    if oracle_samples > 0 {
        let sampler = DiscSampler::new(&run.surface);
        report.oracle_transform = Some(oracle_siegel_transform(&sampler, 1.0, oracle_samples, run.seed)?);
        let e0 = eps0(&run.surface);
        report.oracle_thin = Some(oracle_thin_volume(&sampler, e0, &[1.0, 2.0, 4.0], oracle_samples, run.seed)?);
    }
    let oracle = report.oracle_transform.map(|o| o.value);
    let mut csv = format!(
        "# {}\n# T: horizon; c_twist: median twist statistic / 4 with bootstrap interval; c_excursion: median excursion statistic / (2 eps) with interval; c_excursion_all: same over all complete excursions; oracle: Siegel transform value\nT,c_twist,c_twist_lo,c_twist_hi,c_excursion,c_excursion_lo,c_excursion_hi,c_excursion_all,median_kept,oracle\n",
        provenance("estimate", &config)
    );
    for p in &report.per_t {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            p.horizon,
            p.c_twist,
            p.ci_twist.lo,
            p.ci_twist.hi,
            p.c_excursion,
            p.ci_excursion.lo,
            p.ci_excursion.hi,
            p.c_excursion_all,
            p.median_kept,
            oracle.map_or(String::from("nan"), |o| o.to_string())
        ));
    }
    let line = format!(
        "estimate: c_area {:.6} [{:.6}, {:.6}], oracle {}, cusp formula {:.6}, {} of {} rays excluded",
        report.estimate,
        report.ci.lo,
        report.ci.hi,
        oracle.map_or("skipped".to_string(), |o| format!("{o:.6}")),
        report.c_area_cusp,
        report.excluded,
        report.rays
    );
    let out = EstimateOutput { command: "estimate", config, report };
    fs::write(dir.join("estimate_convergence.csv"), csv)?;
    write_json(&dir.join("estimate_report.json"), &out)?;
    Ok(vec![line])
}

fn parse_direction(s: &str) -> CliResult<(i64, i64)> {
    let (p, q) = s.split_once(',').ok_or_else(|| usage(format!("direction `{s}`, expected p,q")))?;
    let p = p.trim().parse().map_err(|_| usage(format!("direction `{s}`")))?;
    let q = q.trim().parse().map_err(|_| usage(format!("direction `{s}`")))?;
    Ok((p, q))
}

fn cmd_decompose(
    config: Option<PathBuf>,
    surface: Option<String>,
    direction: Option<String>,
    bound: Option<i64>,
) -> CliResult<Vec<String>> {
    let mut st = Settings::load(config.as_deref())?;
    let surface = parse_surface(&st.require("surface", surface, None::<String>)?)?;
    let direction = st.get("direction", direction, None)?;
    let bound = st.require("bound", bound, Some(3))?;
    st.finish()?;
    let dirs = match direction {
        Some(d) => vec![parse_direction(&d)?],
        None => {
            if bound < 1 {
                return Err(usage(format!("bound = {bound}")));
            }
            let mut v = Vec::new();
            for q in 0..=bound {
                for p in -bound..=bound {
                    if num_integer::gcd(p, q) == 1 && (q > 0 || p == 1) {
                        v.push((p, q));
                    }
                }
            }
            v
        }
    };
    let mut lines = vec![
        format!("# surface {surface}"),
        format!(
            "# stratum {:?}, genus {}, orbit size {}, eps0 {}, cusp c_area {}",
            stratum(&surface),
            genus(&surface),
            orbit(&surface).len(),
            eps0(&surface),
            c_area_cusp(&surface)
        ),
        "p,q,cylinder,circumference,height,area_fraction,core".to_string(),
    ];
    for d in dirs {
        for (i, c) in cylinder_decomposition(&surface, d)?.iter().enumerate() {
            lines.push(format!(
                "{},{},{i},{},{},{},{}",
                d.0, d.1, c.circumference, c.height, c.area_fraction, c.core_label
            ));
        }
    }
    Ok(lines)
}

/// Parses `args`, runs, and prints; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(lines) => {
            let mut out = std::io::stdout().lock();
            for l in lines {
                if writeln!(out, "{l}").is_err() {
                    return 1;
                }
            }
            0
        }
        Err(e) => {
            eprintln!("twistlaw: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkpoints() {
        assert_eq!(dv_checkpoints(10_000), vec![100, 1000, 10_000]);
        assert_eq!(dv_checkpoints(150), vec![150]);
    }

    #[test]
    fn lists_and_units() {
        assert_eq!(parse_list("500, 1000,2000").unwrap(), vec![500.0, 1000.0, 2000.0]);
        assert!(parse_list("1,x").is_err());
        assert_eq!(parse_units("Hyperbolic").unwrap(), Units::Hyperbolic);
        assert!(parse_units("flat").is_err());
        assert_eq!(parse_direction("-2,3").unwrap(), (-2, 3));
    }

    #[test]
    fn flags_beat_file_and_unknown_keys_fail() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.cfg");
        fs::write(&p, "# comment\nn = 500\nsamples=20\n").unwrap();
        let mut st = Settings::load(Some(&p)).unwrap();
        assert_eq!(st.require("n", Some(200usize), None).unwrap(), 200);
        assert_eq!(st.require("samples", None::<usize>, Some(1)).unwrap(), 20);
        assert_eq!(st.require("bits", None::<u64>, Some(9)).unwrap(), 9);
        let r = st.finish().unwrap();
        assert_eq!(r["n"], "200");
        fs::write(&p, "nn = 1\n").unwrap();
        assert!(Settings::load(Some(&p)).unwrap().finish().is_err());
    }
}
