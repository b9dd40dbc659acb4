//! Excursions of a geodesic ray through the cylinder horoballs of a surface.
//!
//! The ray's endpoint `θ` is held exactly (or as a certified dyadic
//! interval). Candidate tangencies come from the continued fraction of `θ`:
//! in frame `k`, every `(r p_k + s p_{k-1}) / (r q_k + s q_{k-1})` with
//! `|r|, |s| <= 2`. Each candidate is examined in the coordinate
//! `w = -1/(q(qz - p))`, where its horoballs become `{Im w >= Y}` with
//! `Y = circ²/(eps·n)` independent of `q`, so no step needs numbers outside
//! the `f64` range.

use std::collections::{HashMap, HashSet};
use std::io::Write;

use num_bigint::{BigInt, BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde::Serialize;

use crate::bignum::{ln_bigint_abs, ratio_to_f64};
use crate::cf::{GaussStep, PrecisionReal};
use crate::error::{Error, Result};
use crate::hyperbolic::{busemann, chord, Boundary, Units, UhpPoint, ViewAngles};
use crate::origami::{cylinder_decomposition, eps0, Origami};

/// `½·sqrt(1 - 1/ξ²)`.
pub fn xi_prime(xi: f64) -> Result<f64> {
    if !(xi > 1.0) {
        return Err(Error::Domain(format!("xi = {xi}, need xi > 1")));
    }
    Ok(0.5 * (1.0 - 1.0 / (xi * xi)).sqrt())
}

/// `(2A/eps) · (sin φmax / sin φ) · sqrt(1 - sin²φ / sin²φmax)`.
pub fn twist_count(area: f64, eps: f64, phi: f64, phi_max: f64) -> Result<f64> {
    if phi > phi_max || phi < 0.0 {
        return Err(Error::Domain(format!("phi = {phi}, phi_max = {phi_max}")));
    }
    if phi == 0.0 {
        return Err(Error::UnboundedExcursion);
    }
    twist_from_angles(area, eps, &ViewAngles::from_angles(phi, phi_max)?)
}

/// [`twist_count`] from angles held in log form.
pub fn twist_from_angles(area: f64, eps: f64, angles: &ViewAngles) -> Result<f64> {
    let rho = angles.sin_ratio();
    if rho <= 0.0 {
        return Err(Error::UnboundedExcursion);
    }
    Ok(2.0 * area / eps * (1.0 - rho * rho).max(0.0).sqrt() / rho)
}

/// An ideal endpoint `num/den`, exact or known to lie in `[num, num+1]/den`.
#[derive(Debug, Clone, PartialEq)]
pub struct Endpoint {
    num: BigInt,
    den: BigUint,
    exact: bool,
}

impl Endpoint {
    pub fn rational(num: BigInt, den: BigUint) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::Domain("zero denominator".into()));
        }
        let g = BigInt::from(den.clone()).gcd(&num);
        let g = g.magnitude();
        Ok(Self { num: &num / BigInt::from(g.clone()), den: &den / g, exact: true })
    }

    /// The interval `[m, m+1] / 2^bits`.
    pub fn dyadic(m: BigInt, bits: u64) -> Self {
        Self { num: m, den: BigUint::one() << bits, exact: false }
    }

    /// `x` to `bits` fractional bits, the bits below the `f64` mantissa
    /// drawn uniformly.
    pub fn from_f64<R: Rng + ?Sized>(x: f64, bits: u64, rng: &mut R) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::Domain(format!("endpoint {x}")));
        }
        let (mantissa, exp, sign) = num_traits::float::FloatCore::integer_decode(x);
        let mut m = BigInt::from(mantissa);
        if sign < 0 {
            m = -m;
        }
        let low = exp as i64 + bits as i64;
        let m = if low >= 0 {
            let low = low as u64;
            (m << low) + BigInt::from(rng.gen_biguint(low))
        } else {
            m.div_floor(&(BigInt::one() << (-low) as u64))
        };
        Ok(Self::dyadic(m, bits))
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn to_f64(&self) -> f64 {
        ratio_to_f64(&self.num, &self.den)
    }

    /// Integer part and the fractional part as a Gauss-map input.
    fn split(&self) -> Result<(BigInt, Option<PrecisionReal>)> {
        let den = BigInt::from(self.den.clone());
        let (a0, rem) = self.num.div_mod_floor(&den);
        if rem.is_zero() && self.exact {
            return Ok((a0, None));
        }
        let rem = rem.magnitude().clone();
        let frac = if self.exact {
            PrecisionReal::exact(rem, self.den.clone())?
        } else {
            let hi = &rem + 1u32;
            if rem.is_zero() || hi >= self.den {
                return Err(Error::PrecisionExhausted("endpoint interval straddles an integer".into()));
            }
            PrecisionReal::interval(rem, self.den.clone(), hi, self.den.clone())?
        };
        Ok((a0, Some(frac)))
    }
}

/// The ray from `base` to `theta` on the surface marked at `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub id: u64,
    pub base: UhpPoint,
    pub theta: Endpoint,
    pub backward: Boundary,
    pub surface: Origami,
}

impl Trajectory {
    pub fn new(id: u64, base: UhpPoint, theta: Endpoint, surface: Origami) -> Self {
        let t = theta.to_f64();
        let (x0, y0) = (base.x(), base.y());
        let backward = if t == x0 {
            Boundary::Infinity
        } else {
            let center = (x0 * x0 + y0 * y0 - t * t) / (2.0 * (x0 - t));
            Boundary::Finite(2.0 * center - t)
        };
        Self { id, base, theta, backward, surface }
    }

    /// Ray leaving `base` at Euclidean angle `alpha` from the positive real
    /// direction.
    pub fn from_direction<R: Rng + ?Sized>(
        id: u64,
        base: UhpPoint,
        alpha: f64,
        surface: Origami,
        bits: u64,
        rng: &mut R,
    ) -> Result<Self> {
        let (s, c) = alpha.sin_cos();
        if c == 0.0 {
            return Err(Error::Domain("vertical ray toward infinity".into()));
        }
        let (x0, y0) = (base.x(), base.y());
        // (1 ± sin)/cos written without cancellation
        let (fwd, back) = if s >= 0.0 { ((1.0 + s) / c, -c / (1.0 + s)) } else { (c / (1.0 - s), (s - 1.0) / c) };
        let theta = Endpoint::from_f64(x0 + y0 * fwd, bits, rng)?;
        let mut t = Self::new(id, base, theta, surface);
        t.backward = Boundary::Finite(x0 + y0 * back);
        Ok(t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryConfig {
    pub eps: f64,
    pub xi: f64,
    pub s_xi: f64,
    /// Time horizon `T`.
    pub horizon: f64,
    /// Unit of time and of excursion length.
    pub units: Units,
}

impl TrajectoryConfig {
    pub fn validate(&self, surface: &Origami) -> Result<()> {
        let e0 = eps0(surface);
        if !(self.eps > 0.0) || self.eps > e0 {
            return Err(Error::EpsTooLarge { eps: self.eps, eps0: e0 });
        }
        xi_prime(self.xi)?;
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Config(format!("horizon T = {}", self.horizon)));
        }
        if !(self.s_xi >= 0.0) {
            return Err(Error::Config(format!("s_xi = {}", self.s_xi)));
        }
        Ok(())
    }

    fn horizon_hyp(&self) -> f64 {
        self.horizon / self.units.factor()
    }

    /// Fractional bits needed to resolve every tangency the ray can reach
    /// before the horizon, from a base at height `>= y_min`.
    pub fn precision_bits(&self, n: usize, y_min: f64) -> u64 {
        let ln_qb = 0.5 * ((self.eps * n as f64).ln() + self.horizon_hyp() - y_min.ln());
        (4.0 * ln_qb.max(0.0) / std::f64::consts::LN_2).ceil() as u64 + 256
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExcursionRecord {
    pub label: String,
    pub tangency: String,
    pub t_entry: f64,
    /// `None` when the ray converges to the tangency.
    pub t_exit: Option<f64>,
    /// Absent when the base lies inside the horoball.
    pub angles: Option<ViewAngles>,
    pub e: f64,
    pub e_area: f64,
    pub tw: f64,
    pub weight: f64,
    pub circumference: u64,
    pub height: u64,
    pub starts_inside: bool,
}

impl ExcursionRecord {
    pub fn complete_at(&self, horizon: f64) -> bool {
        !self.starts_inside && self.t_exit.is_some_and(|t| t <= horizon)
    }

    pub fn phi(&self) -> f64 {
        self.angles.map_or(f64::NAN, |a| a.phi())
    }

    pub fn phi_max(&self) -> f64 {
        self.angles.map_or(f64::NAN, |a| a.phi_max())
    }

    /// `φmax/φ`.
    pub fn angle_ratio(&self) -> f64 {
        self.angles.map_or(f64::NAN, |a| (a.ln_phi_max() - a.ln_phi()).exp())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Overlaps {
    /// Pairs of time-overlapping excursions into horoballs with different tangencies.
    pub distinct_tangency: usize,
    /// Pairs sharing a tangency (nested horoballs of parallel cylinders).
    pub shared_tangency: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryLog {
    pub id: u64,
    pub records: Vec<ExcursionRecord>,
    /// The endpoint's precision ran out before the horizon; records after
    /// `truncated_at` were discarded.
    pub precision_exhausted: bool,
    pub truncated_at: Option<f64>,
    pub frames: usize,
    pub overlaps: Overlaps,
}

enum Coeff {
    Next(BigInt),
    End,
    Exhausted,
}

struct Coeffs {
    a0: Option<BigInt>,
    frac: Option<PrecisionReal>,
}

impl Coeffs {
    fn next(&mut self) -> Coeff {
        if let Some(a0) = self.a0.take() {
            return Coeff::Next(a0);
        }
        let Some(x) = self.frac.take() else { return Coeff::End };
        match x.gauss_step() {
            Ok(GaussStep::Digit { a, rest }) => {
                self.frac = rest;
                Coeff::Next(BigInt::from(a))
            }
            _ => Coeff::Exhausted,
        }
    }
}

/// Geodesic and base point in the cusp coordinate of one candidate.
struct Frame {
    u: Boundary,
    v: Boundary,
    ln_im_w0: f64,
    /// Busemann offset between the frame and the original coordinate.
    shift: f64,
}

fn frame(p: &BigInt, q: &BigInt, m: &BigInt, traj: &Trajectory, theta: f64) -> Frame {
    let (x0, y0) = (traj.base.x(), traj.base.y());
    if q.is_zero() {
        return Frame { u: Boundary::Finite(theta), v: traj.backward, ln_im_w0: y0.ln(), shift: 0.0 };
    }
    let qmag = q.magnitude();
    let ln_q = ln_bigint_abs(q);
    let r = ratio_to_f64(p, qmag);
    let d2 = (x0 - r).powi(2) + y0 * y0;
    let ln_im_w0 = y0.ln() - 2.0 * ln_q - d2.ln();
    let v = match traj.backward {
        Boundary::Infinity => Boundary::Finite(0.0),
        Boundary::Finite(b) if b == r => Boundary::Infinity,
        Boundary::Finite(b) => {
            let d = b - r;
            Boundary::Finite(-d.signum() * (-2.0 * ln_q - d.abs().ln()).exp())
        }
    };
    let den = &traj.theta.den;
    if m.is_zero() {
        return Frame { u: Boundary::Infinity, v, ln_im_w0, shift: -2.0 * ln_q };
    }
    let qm = q * m;
    let u = -1.0 / ratio_to_f64(&qm, den);
    let shift = 2.0 * (ln_bigint_abs(m) - crate::bignum::ln_biguint(den));
    Frame { u: Boundary::Finite(u), v, ln_im_w0, shift }
}

/// Relative precision demanded of `qθ - p` for a non-exact endpoint.
const LN_PRECISION_MARGIN: f64 = -40.0 * std::f64::consts::LN_2;

/// `(circumference, height)` per cylinder.
type CylinderTable = Vec<(u64, u64)>;

pub fn enumerate_excursions(cfg: &TrajectoryConfig, traj: &Trajectory) -> Result<TrajectoryLog> {
    cfg.validate(&traj.surface)?;
    let n = traj.surface.n();
    let nf = n as f64;
    let eps = cfg.eps;
    let factor = cfg.units.factor();
    let t_hyp = cfg.horizon_hyp();
    let (x0, y0) = (traj.base.x(), traj.base.y());
    let theta = traj.theta.to_f64();
    let b0 = busemann(Boundary::Finite(theta), x0, y0);
    let ln_dmax = (eps * nf).ln();
    // no horoball with denominator above this is reached before the horizon
    let ln_qb = 0.5 * (ln_dmax + t_hyp - y0.ln());
    // earliest possible entry into a horoball with denominator q
    let entry_bound = |ln_q: f64| factor * (y0.ln() + 2.0 * ln_q - ln_dmax);

    let (a0, frac) = traj.theta.split()?;
    let mut coeffs = Coeffs { a0: Some(a0), frac };
    let (mut pk, mut qk) = (BigInt::one(), BigInt::zero());
    let (mut pk1, mut qk1) = (BigInt::zero(), BigInt::one());
    let mut q_hist: Vec<BigInt> = vec![BigInt::one(), BigInt::zero()];
    let mut o_k = traj.surface.canonical();
    let mut eps_k: i64 = 1;
    let mut seen: HashSet<(BigInt, BigInt)> = HashSet::new();
    let mut decomp: HashMap<(Origami, (i64, i64)), CylinderTable> = HashMap::new();
    let mut records = Vec::new();
    let mut truncated_at: Option<f64> = None;
    let mut frames = 0;

    loop {
        frames += 1;
        for r in -2i64..=2 {
            for s in -2i64..=2 {
                if r.gcd(&s) != 1 {
                    continue;
                }
                let mut p = &pk * r + &pk1 * s;
                let mut q = &qk * r + &qk1 * s;
                let (mut rr, mut ss) = (r, s);
                if q.is_negative() || (q.is_zero() && p.is_negative()) {
                    p = -p;
                    q = -q;
                    rr = -rr;
                    ss = -ss;
                }
                let ln_q = if q.is_zero() { f64::NEG_INFINITY } else { ln_bigint_abs(&q) };
                if ln_q > ln_qb || !seen.insert((p.clone(), q.clone())) {
                    continue;
                }
                let m = &q * &traj.theta.num - &p * BigInt::from(traj.theta.den.clone());
                if !traj.theta.exact && !q.is_zero() && (m.is_zero() || ln_q - ln_bigint_abs(&m) > LN_PRECISION_MARGIN)
                {
                    let t = entry_bound(ln_q);
                    truncated_at = Some(truncated_at.map_or(t, |x: f64| x.min(t)));
                    continue;
                }
                let dir = (rr, eps_k * ss);
                let cyls = match decomp.get(&(o_k.clone(), dir)) {
                    Some(c) => c.clone(),
                    None => {
                        let c: Vec<(u64, u64)> = cylinder_decomposition(&o_k, dir)?
                            .into_iter()
                            .map(|c| (c.circumference, c.height))
                            .collect();
                        decomp.insert((o_k.clone(), dir), c.clone());
                        c
                    }
                };
                let fr = frame(&p, &q, &m, traj, theta);
                let tangency = format!("{p}/{q}");
                for (j, &(c, h)) in cyls.iter().enumerate() {
                    if let Some(rec) = crossing(&fr, b0, c, h, nf, eps, t_hyp, factor) {
                        records.push(ExcursionRecord {
                            label: format!("{tangency}#{j}"),
                            tangency: tangency.clone(),
                            ..rec
                        });
                    }
                }
            }
        }
        if q_hist.len() >= 5 && ln_bigint_abs(&q_hist[q_hist.len() - 5]) > ln_qb {
            break;
        }
        let a = match coeffs.next() {
            Coeff::Next(a) => a,
            Coeff::End => break,
            Coeff::Exhausted => {
                let t = entry_bound(ln_bigint_abs(&qk));
                if t < cfg.horizon {
                    truncated_at = Some(truncated_at.map_or(t, |x: f64| x.min(t)));
                }
                break;
            }
        };
        let p_next = &a * &pk + &pk1;
        let q_next = &a * &qk + &qk1;
        pk1 = std::mem::replace(&mut pk, p_next);
        qk1 = std::mem::replace(&mut qk, q_next);
        q_hist.push(qk.clone());
        if n > 1 {
            let sheared = o_k.shear(&(-&a * eps_k));
            o_k = if eps_k == 1 { sheared.rotate_inv() } else { sheared.rotate() }.canonical();
        }
        eps_k = -eps_k;
    }

    if let Some(t) = truncated_at {
        records.retain(|r| r.t_entry < t);
    }
    records.sort_by(|a, b| a.t_entry.total_cmp(&b.t_entry).then_with(|| a.label.cmp(&b.label)));
    let overlaps = overlap_diagnostics(&records);
    Ok(TrajectoryLog {
        id: traj.id,
        records,
        precision_exhausted: truncated_at.is_some(),
        truncated_at,
        frames,
        overlaps,
    })
}

#[allow(clippy::too_many_arguments)]
fn crossing(
    fr: &Frame,
    b0: f64,
    c: u64,
    h: u64,
    n: f64,
    eps: f64,
    t_hyp: f64,
    factor: f64,
) -> Option<ExcursionRecord> {
    let cf = c as f64;
    let y = cf * cf / (eps * n);
    let weight = (c * h) as f64 / n;
    let ch = chord(fr.u, fr.v, y)?;
    let t_entry = ch.entry.map_or(f64::NEG_INFINITY, |(_, b)| b0 - b - fr.shift);
    let t_exit = ch.exit.map(|(_, b)| b0 - b - fr.shift);
    if matches!(t_exit, Some(t) if t < 0.0) || t_entry >= t_hyp {
        return None;
    }
    let starts_inside = t_entry < 0.0 || fr.ln_im_w0 >= y.ln();
    let rho = if ch.radius.is_finite() { (y / ch.radius).min(1.0) } else { 0.0 };
    let angles = if starts_inside { None } else { ViewAngles::from_log_sine(fr.ln_im_w0 - y.ln(), rho).ok() };
    let e = match (ch.entry, ch.exit) {
        (Some(_), Some(_)) if rho > 0.0 => factor * 2.0 * (1.0 - rho * rho).max(0.0).sqrt() / rho,
        _ => f64::INFINITY,
    };
    let tw = if rho > 0.0 { 2.0 * weight / eps * (1.0 - rho * rho).max(0.0).sqrt() / rho } else { f64::INFINITY };
    Some(ExcursionRecord {
        label: String::new(),
        tangency: String::new(),
        t_entry: factor * t_entry.max(0.0),
        t_exit: t_exit.map(|t| factor * t),
        angles,
        e,
        e_area: weight * e,
        tw,
        weight,
        circumference: c,
        height: h,
        starts_inside,
    })
}

/// Pairs of records whose `[t_entry, t_exit]` intervals overlap.
pub fn overlap_diagnostics(records: &[ExcursionRecord]) -> Overlaps {
    let mut out = Overlaps::default();
    for (i, a) in records.iter().enumerate() {
        let end = a.t_exit.unwrap_or(f64::INFINITY);
        for b in &records[i + 1..] {
            if b.t_entry >= end {
                continue;
            }
            if a.tangency == b.tangency {
                out.shared_tangency += 1;
            } else {
                out.distinct_tangency += 1;
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FilterParams {
    pub xi: f64,
    pub s_xi: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DroppedSummary {
    pub incomplete: usize,
    pub shallow: usize,
    pub shallow_e_area: f64,
    pub early: usize,
    pub early_e_area: f64,
}

impl DroppedSummary {
    pub fn total(&self) -> usize {
        self.incomplete + self.shallow + self.early
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Kept,
    Incomplete,
    Shallow,
    Early,
}

/// Classification of one record at horizon `T`; `None` if it begins at or
/// after `T`.
pub fn classify(rec: &ExcursionRecord, params: FilterParams, horizon: f64) -> Result<Option<Verdict>> {
    if rec.t_entry >= horizon {
        return Ok(None);
    }
    let shallow = 1.0 / xi_prime(params.xi)?;
    Ok(Some(if !rec.complete_at(horizon) {
        Verdict::Incomplete
    } else if rec.e <= shallow {
        Verdict::Shallow
    } else if rec.t_entry < params.s_xi {
        Verdict::Early
    } else {
        Verdict::Kept
    }))
}

/// Records beginning before `T` that are complete, deeper than `1/ξ′` and
/// start after `s_ξ`.
pub fn filter_excursions(
    records: &[ExcursionRecord],
    params: FilterParams,
    horizon: f64,
) -> Result<(Vec<ExcursionRecord>, DroppedSummary)> {
    let mut kept = Vec::new();
    let mut dropped = DroppedSummary::default();
    for rec in records {
        match classify(rec, params, horizon)? {
            None => {}
            Some(Verdict::Kept) => kept.push(rec.clone()),
            Some(Verdict::Incomplete) => dropped.incomplete += 1,
            Some(Verdict::Shallow) => {
                dropped.shallow += 1;
                dropped.shallow_e_area += rec.e_area;
            }
            Some(Verdict::Early) => {
                dropped.early += 1;
                dropped.early_e_area += rec.e_area;
            }
        }
    }
    Ok((kept, dropped))
}

pub const CSV_COLUMNS: &str =
    "trajectory_id,label,t_entry,t_exit,phi,phi_max,E,E_area,tw,complete,kept,ln_phi,ln_phi_max,weight";

/// Excursion log as CSV, with a commented column legend.
pub fn write_csv<W: Write>(
    mut w: W,
    logs: &[TrajectoryLog],
    params: FilterParams,
    horizon: f64,
    provenance: &str,
) -> Result<()> {
    let io = |e: std::io::Error| Error::Config(format!("write failed: {e}"));
    for line in provenance.lines() {
        writeln!(w, "# {line}").map_err(io)?;
    }
    writeln!(w, "# t_entry, t_exit: times along the ray; t_exit = inf for a ray ending at the tangency").map_err(io)?;
    writeln!(w, "# phi, phi_max: view angles at the base (0 below f64 range; see ln_phi, ln_phi_max)").map_err(io)?;
    writeln!(w, "# E: excursion length; E_area = weight * E; tw: twist count").map_err(io)?;
    writeln!(w, "# complete: finished by the horizon; kept: survives the depth and entry-time filters")
        .map_err(io)?;
    writeln!(w, "{CSV_COLUMNS}").map_err(io)?;
    for log in logs {
        for r in &log.records {
            let kept = classify(r, params, horizon)? == Some(Verdict::Kept);
            let (ln_phi, ln_phi_max) = r.angles.map_or((f64::NAN, f64::NAN), |a| (a.ln_phi(), a.ln_phi_max()));
            writeln!(
                w,
                "{},{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{},{},{:?},{:?},{:?}",
                log.id,
                r.label,
                r.t_entry,
                r.t_exit.unwrap_or(f64::INFINITY),
                r.phi(),
                r.phi_max(),
                r.e,
                r.e_area,
                r.tw,
                r.complete_at(horizon),
                kept,
                ln_phi,
                ln_phi_max,
                r.weight
            )
            .map_err(io)?;
        }
    }
    Ok(())
}
