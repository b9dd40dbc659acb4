//! Trimmed-sum statistics over ray ensembles and two Monte Carlo values of
//! the area Siegel-Veech constant.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::excursion::{enumerate_excursions, filter_excursions, DroppedSummary, ExcursionRecord, FilterParams};
use crate::excursion::{TrajectoryConfig, TrajectoryLog};
use crate::hyperbolic::{Boundary, Horoball, UhpPoint};
use crate::origami::{c_area_cusp, eps0, flat_length_sq, stratum, DecompositionCache, Origami};
use crate::rng::task_rng;
use crate::sampler::{DiscSampler, Y_MIN};
use crate::stats::{bootstrap_median, fit_line, median, Interval};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StatValue {
    pub value: f64,
    /// No record contributed.
    pub empty: bool,
}

fn trimmed_rate(values: impl Iterator<Item = f64>, horizon: f64) -> Result<StatValue> {
    if !(horizon >= std::f64::consts::E) {
        return Err(Error::Domain(format!("horizon {horizon} below e")));
    }
    let v: Vec<f64> = values.collect();
    if v.is_empty() {
        return Ok(StatValue { value: 0.0, empty: true });
    }
    let t = crate::cf::trimmed_sum(&v)?;
    Ok(StatValue { value: t / (horizon * horizon.ln()), empty: false })
}

/// `(Σ tw - max tw) / (T log T)` over kept records beginning before `T`.
pub fn twist_statistic(kept: &[ExcursionRecord], horizon: f64) -> Result<StatValue> {
    trimmed_rate(kept.iter().filter(|r| r.t_entry < horizon).map(|r| r.tw), horizon)
}

/// `(Σ E_area - max E_area) / (T log T)` over kept records beginning before `T`.
pub fn excursion_statistic(kept: &[ExcursionRecord], horizon: f64, eps: f64) -> Result<StatValue> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps = {eps}")));
    }
    trimmed_rate(kept.iter().filter(|r| r.t_entry < horizon).map(|r| r.e_area), horizon)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesPoint {
    pub horizon: f64,
    pub n_kept: usize,
    pub n_complete: usize,
    pub trimmed_twist: f64,
    pub trimmed_excursion: f64,
    pub twist_stat: f64,
    pub excursion_stat: f64,
    /// Excursion statistic over every complete record, unfiltered.
    pub excursion_stat_all: f64,
    pub dropped: DroppedSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrimmedSeries {
    pub id: u64,
    pub points: Vec<SeriesPoint>,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Empty("horizon grid"));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) || grid[0] < std::f64::consts::E {
        return Err(Error::Config(format!("horizon grid {grid:?} must increase from at least e")));
    }
    Ok(())
}

pub fn trimmed_series(log: &TrajectoryLog, params: FilterParams, grid: &[f64], eps: f64) -> Result<TrimmedSeries> {
    check_grid(grid)?;
    let mut points = Vec::with_capacity(grid.len());
    for &t in grid {
        let (kept, dropped) = filter_excursions(&log.records, params, t)?;
        let tw = twist_statistic(&kept, t)?;
        let ex = excursion_statistic(&kept, t, eps)?;
        let all: Vec<&ExcursionRecord> =
            log.records.iter().filter(|r| r.t_entry < t && r.complete_at(t)).collect();
        let ex_all = trimmed_rate(all.iter().map(|r| r.e_area), t)?;
        let scale = t * t.ln();
        points.push(SeriesPoint {
            horizon: t,
            n_kept: kept.len(),
            n_complete: all.len(),
            trimmed_twist: tw.value * scale,
            trimmed_excursion: ex.value * scale,
            twist_stat: tw.value,
            excursion_stat: ex.value,
            excursion_stat_all: ex_all.value,
            dropped,
        });
    }
    Ok(TrimmedSeries { id: log.id, points })
}

/// A cylinder core of length at most a bound at a disc point.
#[derive(Debug, Clone, PartialEq)]
pub struct ShortCore {
    pub direction: (i64, i64),
    pub circumference: u64,
    pub weight: f64,
    pub length_sq: f64,
}

/// Directions that can carry a core with `ℓ² <= bound_sq` at `z`.
fn candidate_directions(n: usize, z: &UhpPoint, bound_sq: f64) -> Vec<(i64, i64)> {
    let (x, y) = (z.x(), z.y());
    let reach = bound_sq * n as f64;
    let mut dirs = vec![(1, 0)];
    // circ >= 1 and |qz - p|² >= max(q² y², (qx - p)²)
    let mut q = 1i64;
    while (q as f64).powi(2) * y <= reach {
        let w = (reach * y).sqrt();
        let qx = q as f64 * x;
        for p in (qx - w).ceil() as i64..=(qx + w).floor() as i64 {
            if num_integer::gcd(p, q) == 1 {
                dirs.push((p, q));
            }
        }
        q += 1;
    }
    dirs
}

pub fn short_cores(o: &Origami, z: &UhpPoint, bound_sq: f64, cache: &mut DecompositionCache) -> Result<Vec<ShortCore>> {
    let n = o.n() as f64;
    let mut out = Vec::new();
    for dir in candidate_directions(o.n(), z, bound_sq) {
        for (c, h) in cache.get(o, dir)? {
            let l2 = flat_length_sq(o, dir, c, z)?;
            if l2 <= bound_sq {
                out.push(ShortCore { direction: dir, circumference: c, weight: (c * h) as f64 / n, length_sq: l2 });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
}

const CHUNK: usize = 1000;

/// Per-chunk sums of `k` observables, reduced in chunk order.
fn monte_carlo<F>(samples: usize, seed: u64, tag: &str, k: usize, f: F) -> Result<(Vec<f64>, Vec<f64>)>
where
    F: Fn(&mut rand_chacha::ChaCha8Rng, &mut DecompositionCache, &mut [f64]) -> Result<()> + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<Result<(Vec<f64>, Vec<f64>)>> = (0..chunks)
        .into_par_iter()
        .map(|i| {
            let mut rng = task_rng(seed, tag, i as u64);
            let mut cache = DecompositionCache::default();
            let mut sum = vec![0.0; k];
            let mut sumsq = vec![0.0; k];
            let mut obs = vec![0.0; k];
            let m = CHUNK.min(samples - i * CHUNK);
            for _ in 0..m {
                obs.iter_mut().for_each(|o| *o = 0.0);
                f(&mut rng, &mut cache, &mut obs)?;
                for j in 0..k {
                    sum[j] += obs[j];
                    sumsq[j] += obs[j] * obs[j];
                }
            }
            Ok((sum, sumsq))
        })
        .collect();
    let mut sum = vec![0.0; k];
    let mut sumsq = vec![0.0; k];
    for part in parts {
        let (s, s2) = part?;
        for j in 0..k {
            sum[j] += s[j];
            sumsq[j] += s2[j];
        }
    }
    Ok((sum, sumsq))
}

fn mean_and_se(sum: f64, sumsq: f64, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = sum / nf;
    let var = (sumsq / nf - mean * mean).max(0.0) * nf / (nf - 1.0).max(1.0);
    (mean, (var / nf).sqrt())
}

/// Average over the disc of `Σ weight · 1{ℓ <= R}`, divided by `πR²`.
pub fn oracle_siegel_transform(sampler: &DiscSampler, radius: f64, samples: usize, seed: u64) -> Result<OracleEstimate> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Config(format!("radius {radius}")));
    }
    if samples < 2 {
        return Err(Error::Config(format!("{samples} samples")));
    }
    let r2 = radius * radius;
    let (sum, sumsq) = monte_carlo(samples, seed, "siegel", 1, |rng, cache, obs| {
        let (z, o) = sampler.sample(rng);
        obs[0] = short_cores(o, &z, r2, cache)?.iter().map(|c| c.weight).sum();
        Ok(())
    })?;
    let (m, se) = mean_and_se(sum[0], sumsq[0], samples);
    let area = std::f64::consts::PI * r2;
    Ok(OracleEstimate { value: m / area, stderr: se / area, samples })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LadderRung {
    pub r: f64,
    pub eps: f64,
    pub estimate: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThinVolumeEstimate {
    pub rungs: Vec<LadderRung>,
    /// Linear extrapolation of the rung estimates to scale 0.
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Weighted measure of the thin part at scales `eps/R`, divided by `π eps/R`,
/// extrapolated linearly in `1/R`.
pub fn oracle_thin_volume(sampler: &DiscSampler, eps: f64, ladder: &[f64], samples: usize, seed: u64) -> Result<ThinVolumeEstimate> {
    if ladder.len() < 3 {
        return Err(Error::Config(format!("ladder has {} rungs, need at least 3", ladder.len())));
    }
    if ladder.windows(2).any(|w| w[0] >= w[1]) || ladder[0] <= 0.0 {
        return Err(Error::Config(format!("ladder {ladder:?} must increase from a positive value")));
    }
    if samples < 2 {
        return Err(Error::Config(format!("{samples} samples")));
    }
    let e0 = sampler.orbit().first().map_or(0.0, eps0);
    let scales: Vec<f64> = ladder.iter().map(|r| eps / r).collect();
    if !(scales[0] > 0.0) || scales[0] > e0 {
        return Err(Error::EpsTooLarge { eps: scales[0], eps0: e0 });
    }
    let k = scales.len();
    let (sum, sumsq) = monte_carlo(samples, seed, "thin", k, |rng, _cache, obs| {
        let (z, o) = sampler.sample(rng);
        let n = o.n() as f64;
        let mut cache = DecompositionCache::default();
        for core in short_cores(o, &z, scales[0], &mut cache)? {
            let (p, q) = core.direction;
            let c2 = (core.circumference as f64).powi(2);
            for (j, &s) in scales.iter().enumerate() {
                let h = if q == 0 {
                    Horoball::new(Boundary::Infinity, s * n / c2, core.weight, "")?
                } else {
                    let qf = q as f64;
                    Horoball::new(Boundary::Finite(p as f64 / qf), s * n / (c2 * qf * qf), core.weight, "")?
                };
                if h.contains(&z) {
                    obs[j] += h.weight();
                }
            }
        }
        Ok(())
    })?;
    let mut rungs = Vec::with_capacity(k);
    for j in 0..k {
        let (m, se) = mean_and_se(sum[j], sumsq[j], samples);
        let area = std::f64::consts::PI * scales[j];
        rungs.push(LadderRung { r: ladder[j], eps: scales[j], estimate: m / area, stderr: se / area });
    }
    let x: Vec<f64> = rungs.iter().map(|r| r.eps).collect();
    let y: Vec<f64> = rungs.iter().map(|r| r.estimate).collect();
    let fit = fit_line(&x, &y)?;
    // intercept as a linear combination of the rungs
    let mx = x.iter().sum::<f64>() / k as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let var: f64 = rungs
        .iter()
        .map(|r| (1.0 / k as f64 - mx * (r.eps - mx) / sxx).powi(2) * r.stderr * r.stderr)
        .sum();
    Ok(ThinVolumeEstimate { rungs, value: fit.intercept, stderr: var.sqrt(), samples })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleConfig {
    #[serde(serialize_with = "ser_display")]
    pub surface: Origami,
    pub trajectory: TrajectoryConfig,
    pub grid: Vec<f64>,
    pub rays: usize,
    pub seed: u64,
    /// Fractional bits of each ray's endpoint; derived from the horizon when absent.
    pub bits: Option<u64>,
    pub resamples: usize,
    pub level: f64,
}

fn ser_display<S: serde::Serializer, T: std::fmt::Display>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

pub const MIN_ENSEMBLE: usize = 30;

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rays < MIN_ENSEMBLE {
            return Err(Error::Config(format!("ensemble of {} rays, need at least {MIN_ENSEMBLE}", self.rays)));
        }
        check_grid(&self.grid)?;
        if self.trajectory.horizon < *self.grid.last().unwrap_or(&0.0) {
            return Err(Error::Config("trajectory horizon below the largest grid point".into()));
        }
        self.trajectory.validate(&self.surface)
    }

    pub fn filter(&self) -> FilterParams {
        FilterParams { xi: self.trajectory.xi, s_xi: self.trajectory.s_xi }
    }
}

/// Rays drawn from the disc measure, each run to the trajectory horizon.
pub fn run_ensemble(cfg: &EnsembleConfig) -> Result<Vec<TrajectoryLog>> {
    cfg.trajectory.validate(&cfg.surface)?;
    let sampler = DiscSampler::new(&cfg.surface);
    let bits = cfg.bits.unwrap_or_else(|| cfg.trajectory.precision_bits(cfg.surface.n(), Y_MIN));
    (0..cfg.rays as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = task_rng(cfg.seed, "ray", i);
            let traj = sampler.trajectory(i, bits, &mut rng)?;
            enumerate_excursions(&cfg.trajectory, &traj)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HorizonSummary {
    pub horizon: f64,
    /// Median twist statistic divided by 4.
    pub c_twist: f64,
    pub ci_twist: Interval,
    /// Median excursion statistic divided by `2 eps`.
    pub c_excursion: f64,
    pub ci_excursion: Interval,
    /// As `c_excursion`, over all complete excursions.
    pub c_excursion_all: f64,
    pub median_kept: f64,
    pub median_shallow_e_area: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub surface: String,
    pub stratum: Vec<usize>,
    pub eps: f64,
    pub xi: f64,
    pub s_xi: f64,
    #[serde(rename = "T_grid")]
    pub t_grid: Vec<f64>,
    pub per_t: Vec<HorizonSummary>,
    pub estimate: f64,
    pub ci: Interval,
    pub rays: usize,
    pub excluded: usize,
    pub overlapping_pairs: usize,
    pub seed: u64,
    pub oracle_transform: Option<OracleEstimate>,
    pub oracle_thin: Option<ThinVolumeEstimate>,
    /// Closed-form value from the cusp widths of the orbit.
    pub c_area_cusp: f64,
    pub version: String,
    pub config: EnsembleConfig,
}

/// Summaries of per-ray series; rays flagged precision-exhausted are
/// excluded and counted.
pub fn estimate_from_logs(cfg: &EnsembleConfig, logs: &[TrajectoryLog]) -> Result<EstimateReport> {
    check_grid(&cfg.grid)?;
    let eps = cfg.trajectory.eps;
    let usable: Vec<&TrajectoryLog> = logs.iter().filter(|l| !l.precision_exhausted).collect();
    if usable.is_empty() {
        return Err(Error::Empty("ensemble with no usable rays"));
    }
    let series: Vec<TrimmedSeries> = usable
        .iter()
        .map(|l| trimmed_series(l, cfg.filter(), &cfg.grid, eps))
        .collect::<Result<_>>()?;
    let mut per_t = Vec::with_capacity(cfg.grid.len());
    for (j, &t) in cfg.grid.iter().enumerate() {
        let col = |f: &dyn Fn(&SeriesPoint) -> f64| -> Vec<f64> { series.iter().map(|s| f(&s.points[j])).collect() };
        let tw = col(&|p| p.twist_stat / 4.0);
        let ex = col(&|p| p.excursion_stat / (2.0 * eps));
        let mut rng = task_rng(cfg.seed, "bootstrap", j as u64);
        let ci_twist = bootstrap_median(&tw, cfg.resamples, cfg.level, &mut rng)?;
        let ci_excursion = bootstrap_median(&ex, cfg.resamples, cfg.level, &mut rng)?;
        per_t.push(HorizonSummary {
            horizon: t,
            c_twist: median(&tw)?,
            ci_twist,
            c_excursion: median(&ex)?,
            ci_excursion,
            c_excursion_all: median(&col(&|p| p.excursion_stat_all / (2.0 * eps)))?,
            median_kept: median(&col(&|p| p.n_kept as f64))?,
            median_shallow_e_area: median(&col(&|p| p.dropped.shallow_e_area))?,
        });
    }
    let last = per_t.last().ok_or(Error::Empty("horizon grid"))?;
    Ok(EstimateReport {
        surface: cfg.surface.to_string(),
        stratum: stratum(&cfg.surface),
        eps,
        xi: cfg.trajectory.xi,
        s_xi: cfg.trajectory.s_xi,
        t_grid: cfg.grid.clone(),
        estimate: last.c_twist,
        ci: last.ci_twist,
        per_t,
        rays: logs.len(),
        excluded: logs.len() - usable.len(),
        overlapping_pairs: logs.iter().map(|l| l.overlaps.distinct_tangency).sum(),
        seed: cfg.seed,
        oracle_transform: None,
        oracle_thin: None,
        c_area_cusp: c_area_cusp(&cfg.surface),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
    })
}

pub fn estimate_c_area(cfg: &EnsembleConfig) -> Result<(EstimateReport, Vec<TrajectoryLog>)> {
    cfg.validate()?;
    let logs = run_ensemble(cfg)?;
    Ok((estimate_from_logs(cfg, &logs)?, logs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperbolic::Units;
    use approx::assert_relative_eq;

    fn rec(t: f64, tw: f64, e_area: f64) -> ExcursionRecord {
        ExcursionRecord {
            label: "x".into(),
            tangency: "x".into(),
            t_entry: t,
            t_exit: Some(t + 0.5),
            angles: None,
            e: 10.0,
            e_area,
            tw,
            weight: 1.0,
            circumference: 1,
            height: 1,
            starts_inside: false,
        }
    }

    fn e2() -> f64 {
        std::f64::consts::E.powi(2)
    }

    #[test]
    fn statistic_examples() {
        assert_eq!(twist_statistic(&[rec(1.0, 5.0, 1.0)], e2()).unwrap().value, 0.0);
        let rs = [rec(1.0, 10.0, 1.0), rec(2.0, 30.0, 5.0), rec(3.0, 20.0, 2.0)];
        assert_relative_eq!(twist_statistic(&rs, e2()).unwrap().value, 30.0 / (2.0 * e2()), max_relative = 1e-14);
        assert_relative_eq!(excursion_statistic(&rs, e2(), 0.1).unwrap().value, 3.0 / (2.0 * e2()), max_relative = 1e-14);
        let empty = twist_statistic(&[], e2()).unwrap();
        assert!(empty.empty && empty.value == 0.0);
        assert!(twist_statistic(&rs, 2.0).is_err());
    }

    #[test]
    fn trimmed_term_is_ignored() {
        let mut rs = vec![rec(1.0, 10.0, 1.0), rec(2.0, 30.0, 5.0), rec(3.0, 20.0, 2.0)];
        let before = twist_statistic(&rs, 10.0).unwrap().value;
        rs[1].tw *= 10.0;
        assert_eq!(twist_statistic(&rs, 10.0).unwrap().value, before);
    }

    fn ensemble(surface: &str, rays: usize) -> EnsembleConfig {
        let surface: Origami = surface.parse().unwrap();
        let eps = eps0(&surface) / 2.0;
        EnsembleConfig {
            surface,
            trajectory: TrajectoryConfig { eps, xi: 2.0, s_xi: 2.0, horizon: 60.0, units: Units::Teichmuller },
            grid: vec![15.0, 30.0, 60.0],
            rays,
            seed: 4,
            bits: None,
            resamples: 200,
            level: 0.9,
        }
    }

    #[test]
    fn identical_streams_give_zero_width() {
        let cfg = ensemble("torus", 30);
        let log = TrajectoryLog {
            id: 0,
            records: vec![rec(3.0, 10.0, 4.0), rec(7.0, 40.0, 9.0), rec(20.0, 25.0, 6.0)],
            precision_exhausted: false,
            truncated_at: None,
            frames: 0,
            overlaps: Default::default(),
        };
        let logs = vec![log; 30];
        let rep = estimate_from_logs(&cfg, &logs).unwrap();
        assert_eq!(rep.ci.lo, rep.ci.hi);
        assert_eq!(rep.ci.lo, rep.estimate);
    }

    #[test]
    fn ensemble_is_deterministic_and_excludes_nothing() {
        let cfg = ensemble("3; (1 2); (1 3)", 30);
        let (a, logs) = estimate_c_area(&cfg).unwrap();
        let (b, _) = estimate_c_area(&cfg).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.excluded, 0);
        assert!(a.ci.lo <= a.estimate && a.estimate <= a.ci.hi);
        for l in &logs {
            let s = trimmed_series(l, cfg.filter(), &cfg.grid, cfg.trajectory.eps).unwrap();
            for w in s.points.windows(2) {
                assert!(w[0].n_kept <= w[1].n_kept + w[0].dropped.total());
                assert!(w[0].trimmed_twist >= 0.0);
            }
        }
    }

    #[test]
    fn small_ensembles_are_refused() {
        assert!(matches!(ensemble("torus", 1).validate(), Err(Error::Config(_))));
    }

    #[test]
    fn siegel_transform_matches_reference_at_every_radius() {
        let torus = DiscSampler::new(&Origami::torus());
        let c = 3.0 / std::f64::consts::PI.powi(2);
        for r in [0.5, 1.0] {
            let est = oracle_siegel_transform(&torus, r, 20_000, 1).unwrap();
            assert!((est.value - c).abs() < 4.0 * est.stderr, "{r} {est:?}");
        }
    }

    #[test]
    fn thin_volume_checks_ladder() {
        let torus = DiscSampler::new(&Origami::torus());
        assert!(oracle_thin_volume(&torus, 0.25, &[1.0, 2.0], 100, 0).is_err());
        assert!(oracle_thin_volume(&torus, 0.25, &[1.0, 3.0, 2.0], 100, 0).is_err());
        assert!(matches!(oracle_thin_volume(&torus, 1.0, &[1.0, 2.0, 4.0], 100, 0), Err(Error::EpsTooLarge { .. })));
        let est = oracle_thin_volume(&torus, 0.5, &[1.0, 2.0, 4.0], 20_000, 3).unwrap();
        let c = 3.0 / std::f64::consts::PI.powi(2);
        assert!((est.value - c).abs() < 4.0 * est.stderr, "{est:?}");
    }

    #[test]
    fn oracles_are_seed_deterministic() {
        let l = DiscSampler::new(&"3; (1 2); (1 3)".parse().unwrap());
        let a = oracle_thin_volume(&l, 1.0 / 6.0, &[1.0, 2.0, 4.0], 3000, 9).unwrap();
        let b = oracle_thin_volume(&l, 1.0 / 6.0, &[1.0, 2.0, 4.0], 3000, 9).unwrap();
        assert_eq!(a, b);
    }
}
