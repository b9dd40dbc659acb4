//! Square-tiled surfaces and the flat torus.
//!
//! An origami is a pair of permutations of the squares: `h(i)` is the square
//! to the right of `i`, `v(i)` the square on top. Squares are 0-based
//! internally and 1-based in the text format.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hyperbolic::{Boundary, Horoball, UhpPoint};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Origami {
    h: Vec<usize>,
    v: Vec<usize>,
}

/// A maximal cylinder in a rational direction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cylinder {
    pub direction: (i64, i64),
    pub circumference: u64,
    pub height: u64,
    pub area_fraction: f64,
    pub core_label: String,
}

fn check_perm(p: &[usize], name: &str) -> Result<()> {
    let mut seen = vec![false; p.len()];
    for &x in p {
        if x >= p.len() || seen[x] {
            return Err(Error::Parse { token: format!("{name}={p:?}"), reason: "not a permutation".into() });
        }
        seen[x] = true;
    }
    Ok(())
}

fn inverse(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; p.len()];
    for (i, &x) in p.iter().enumerate() {
        inv[x] = i;
    }
    inv
}

/// Cycles of `p`, each starting at its smallest element, sorted by that element.
pub fn cycles(p: &[usize]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; p.len()];
    let mut out = Vec::new();
    for s in 0..p.len() {
        if seen[s] {
            continue;
        }
        let mut c = vec![s];
        seen[s] = true;
        let mut x = p[s];
        while x != s {
            seen[x] = true;
            c.push(x);
            x = p[x];
        }
        out.push(c);
    }
    out
}

/// `p^m` for an arbitrary (possibly huge, possibly negative) exponent.
fn perm_pow(p: &[usize], m: &BigInt) -> Vec<usize> {
    let mut out = vec![0; p.len()];
    for c in cycles(p) {
        let len = c.len();
        let shift = m.mod_floor(&BigInt::from(len)).to_usize().unwrap_or(0);
        for (j, &x) in c.iter().enumerate() {
            out[x] = c[(j + shift) % len];
        }
    }
    out
}

fn format_cycles(p: &[usize]) -> String {
    let cs: Vec<String> = cycles(p)
        .into_iter()
        .filter(|c| c.len() > 1)
        .map(|c| format!("({})", c.iter().map(|x| (x + 1).to_string()).collect::<Vec<_>>().join(" ")))
        .collect();
    if cs.is_empty() {
        "()".into()
    } else {
        cs.concat()
    }
}

fn parse_cycles(s: &str, n: usize) -> Result<Vec<usize>> {
    let mut p: Vec<usize> = (0..n).collect();
    let mut used = vec![false; n];
    let mut rest = s.trim();
    while !rest.is_empty() {
        let Some(body) = rest.strip_prefix('(') else {
            return Err(Error::Parse { token: rest.into(), reason: "expected `(`".into() });
        };
        let Some(close) = body.find(')') else {
            return Err(Error::Parse { token: rest.into(), reason: "unclosed cycle".into() });
        };
        let mut cyc = Vec::new();
        for tok in body[..close].split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
            let k: usize = tok
                .parse()
                .map_err(|_| Error::Parse { token: tok.into(), reason: "not a square index".into() })?;
            if k == 0 || k > n {
                return Err(Error::Parse { token: tok.into(), reason: format!("square index outside 1..={n}") });
            }
            if used[k - 1] {
                return Err(Error::Parse { token: tok.into(), reason: "square repeated".into() });
            }
            used[k - 1] = true;
            cyc.push(k - 1);
        }
        for (j, &x) in cyc.iter().enumerate() {
            p[x] = cyc[(j + 1) % cyc.len()];
        }
        rest = body[close + 1..].trim_start();
    }
    Ok(p)
}

impl Origami {
    /// Permutations given 0-based; well-formedness is checked, connectivity
    /// is left to [`validate`].
    pub fn new(h: Vec<usize>, v: Vec<usize>) -> Result<Self> {
        if h.is_empty() || h.len() != v.len() {
            return Err(Error::Parse { token: format!("n={}/{}", h.len(), v.len()), reason: "size mismatch".into() });
        }
        check_perm(&h, "h")?;
        check_perm(&v, "v")?;
        Ok(Self { h, v })
    }

    pub fn torus() -> Self {
        Self { h: vec![0], v: vec![0] }
    }

    pub fn n(&self) -> usize {
        self.h.len()
    }

    pub fn h(&self) -> &[usize] {
        &self.h
    }

    pub fn v(&self) -> &[usize] {
        &self.v
    }

    /// Shear by `T^m`, `T = [[1,1],[0,1]]`.
    pub fn shear(&self, m: &BigInt) -> Self {
        let hm = perm_pow(&self.h, &-m);
        Self { h: self.h.clone(), v: (0..self.n()).map(|i| self.v[hm[i]]).collect() }
    }

    /// Rotation by `S = [[0,-1],[1,0]]`.
    pub fn rotate(&self) -> Self {
        Self { h: inverse(&self.v), v: self.h.clone() }
    }

    pub fn rotate_inv(&self) -> Self {
        Self { h: self.v.clone(), v: inverse(&self.h) }
    }

    pub fn negate(&self) -> Self {
        Self { h: inverse(&self.h), v: inverse(&self.v) }
    }

    /// Re-mark by an integral unimodular matrix `[[a,b],[c,d]]`.
    pub fn act(&self, m: [[i64; 2]; 2]) -> Result<Self> {
        let [[a, b], [c, d]] = m;
        if a * d - b * c != 1 {
            return Err(Error::InvalidMatrix((a * d - b * c) as f64));
        }
        // Reduce m to the identity by left multiplication with T^k and S,
        // recording the word; m is its inverse.
        let mut word: Vec<Option<i64>> = Vec::new(); // Some(k) = T^k, None = S
        let (mut a, mut b, mut c, mut d) = (a, b, c, d);
        while c != 0 {
            let k = -Integer::div_floor(&a, &c);
            // T^k: row1 += k row2
            a += k * c;
            b += k * d;
            word.push(Some(k));
            // S: (r1, r2) -> (-r2, r1)
            (a, b, c, d) = (-c, -d, a, b);
            word.push(None);
        }
        // now [[a,b],[0,d]] with a = d = ±1
        let mut o = self.clone();
        if a == -1 {
            o = o.negate();
            b = -b;
        }
        // remaining T^b; m = W^{-1} T^b (±I)
        o = o.shear(&BigInt::from(b));
        for step in word.iter().rev() {
            o = match step {
                Some(k) => o.shear(&BigInt::from(-k)),
                None => o.rotate_inv(),
            };
        }
        Ok(o)
    }

    /// Relabeling-invariant representative.
    pub fn canonical(&self) -> Self {
        let n = self.n();
        let mut best: Option<Self> = None;
        for s in 0..n {
            let mut label = vec![usize::MAX; n];
            let mut order = Vec::with_capacity(n);
            let mut queue = VecDeque::from([s]);
            label[s] = 0;
            while let Some(x) = queue.pop_front() {
                order.push(x);
                for y in [self.h[x], self.v[x]] {
                    if label[y] == usize::MAX {
                        label[y] = order.len() + queue.len();
                        queue.push_back(y);
                    }
                }
            }
            if order.len() < n {
                return self.clone();
            }
            let mut h = vec![0; n];
            let mut v = vec![0; n];
            for x in 0..n {
                h[label[x]] = label[self.h[x]];
                v[label[x]] = label[self.v[x]];
            }
            let cand = Self { h, v };
            if best.as_ref().is_none_or(|b| cand < *b) {
                best = Some(cand);
            }
        }
        best.unwrap_or_else(|| self.clone())
    }

    /// Horizontal cylinders as `(circumference, height, rows)`.
    fn horizontal(&self) -> Vec<(u64, u64, Vec<usize>)> {
        let rows = cycles(&self.h);
        let mut row_of = vec![0; self.n()];
        for (r, c) in rows.iter().enumerate() {
            for &x in c {
                row_of[x] = r;
            }
        }
        // up[r] = row directly above when the top of r carries no cone point
        let up: Vec<Option<usize>> = rows
            .iter()
            .map(|c| {
                let target = row_of[self.v[c[0]]];
                c.iter()
                    .all(|&x| row_of[self.v[x]] == target && self.v[self.h[x]] == self.h[self.v[x]])
                    .then_some(target)
            })
            .collect();
        let mut has_below = vec![false; rows.len()];
        for u in up.iter().flatten() {
            has_below[*u] = true;
        }
        let mut done = vec![false; rows.len()];
        let mut out = Vec::new();
        let walk = |start: usize, done: &mut Vec<bool>| {
            let mut chain = vec![start];
            done[start] = true;
            let mut r = start;
            while let Some(u) = up[r] {
                if done[u] {
                    break;
                }
                done[u] = true;
                chain.push(u);
                r = u;
            }
            let min_sq = chain.iter().flat_map(|&r| rows[r].iter().copied()).min().unwrap_or(0);
            (rows[start].len() as u64, chain.len() as u64, min_sq)
        };
        for r in 0..rows.len() {
            if !has_below[r] && !done[r] {
                out.push(walk(r, &mut done));
            }
        }
        // whatever is left closes up into a single loop of rows
        for r in 0..rows.len() {
            if !done[r] {
                out.push(walk(r, &mut done));
            }
        }
        out.sort_by(|a, b| (b.0, b.1, a.2).cmp(&(a.0, a.1, b.2)));
        out.into_iter().map(|(c, h, m)| (c, h, vec![m])).collect()
    }
}

impl fmt::Display for Origami {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}; {}; {}", self.n(), format_cycles(&self.h), format_cycles(&self.v))
    }
}

impl FromStr for Origami {
    type Err = Error;

    /// `n; h-cycles; v-cycles`, e.g. `3; (1 2); (1 3)`, or `torus`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("torus") {
            return Ok(Self::torus());
        }
        let parts: Vec<&str> = s.split(';').collect();
        if parts.len() != 3 {
            return Err(Error::Parse { token: s.into(), reason: "expected `n; h; v`".into() });
        }
        let n: usize = parts[0]
            .trim()
            .parse()
            .map_err(|_| Error::Parse { token: parts[0].trim().into(), reason: "not a square count".into() })?;
        if n == 0 {
            return Err(Error::Parse { token: parts[0].trim().into(), reason: "need at least one square".into() });
        }
        let o = Self::new(parse_cycles(parts[1], n)?, parse_cycles(parts[2], n)?)?;
        validate(&o)?;
        Ok(o)
    }
}

/// Orbits of the group generated by `h` and `v`.
pub fn components(o: &Origami) -> Vec<Vec<usize>> {
    let n = o.n();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        let mut comp = vec![s];
        seen[s] = true;
        let mut i = 0;
        while i < comp.len() {
            let x = comp[i];
            for y in [o.h[x], o.v[x]] {
                if !seen[y] {
                    seen[y] = true;
                    comp.push(y);
                }
            }
            i += 1;
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

pub fn validate(o: &Origami) -> Result<()> {
    let comps = components(o);
    if comps.len() == 1 {
        Ok(())
    } else {
        Err(Error::Disconnected(comps.into_iter().map(|c| c.into_iter().map(|x| x + 1).collect()).collect()))
    }
}

/// Orders of the zeros, largest first.
pub fn stratum(o: &Origami) -> Vec<usize> {
    let hi = inverse(&o.h);
    let vi = inverse(&o.v);
    let comm: Vec<usize> = (0..o.n()).map(|i| vi[hi[o.v[o.h[i]]]]).collect();
    let mut orders: Vec<usize> = cycles(&comm).into_iter().map(|c| c.len() - 1).filter(|&k| k > 0).collect();
    orders.sort_unstable_by(|a, b| b.cmp(a));
    orders
}

pub fn genus(o: &Origami) -> usize {
    stratum(o).iter().sum::<usize>() / 2 + 1
}

fn check_primitive(p: i64, q: i64) -> Result<()> {
    if p.gcd(&q) != 1 {
        return Err(Error::NotReduced { p: p.to_string(), q: q.to_string() });
    }
    Ok(())
}

/// A matrix in the integral unimodular group sending `(p, q)` to `(1, 0)`.
pub fn normalizing_matrix(p: i64, q: i64) -> Result<[[i64; 2]; 2]> {
    check_primitive(p, q)?;
    // x p + y q = 1
    let e = p.extended_gcd(&q);
    let (x, y) = if e.gcd == 1 { (e.x, e.y) } else { (-e.x, -e.y) };
    Ok([[x, y], [-q, p]])
}

fn cylinders_from(o: &Origami, dir: (i64, i64), label: &str) -> Vec<Cylinder> {
    let n = o.n() as f64;
    o.horizontal()
        .into_iter()
        .enumerate()
        .map(|(j, (c, h, _))| Cylinder {
            direction: dir,
            circumference: c,
            height: h,
            area_fraction: (c * h) as f64 / n,
            core_label: format!("{label}#{j}"),
        })
        .collect()
}

pub fn cylinder_decomposition(o: &Origami, dir: (i64, i64)) -> Result<Vec<Cylinder>> {
    let (p, q) = dir;
    let g = normalizing_matrix(p, q)?;
    Ok(cylinders_from(&o.act(g)?, dir, &format!("{p}/{q}")))
}

/// Squared flat length, at unit total area, of a core with holonomy
/// `circ · (p, q)` after deforming by the disc point `z`.
pub fn flat_length_sq(o: &Origami, dir: (i64, i64), circ: u64, z: &UhpPoint) -> Result<f64> {
    let (p, q) = dir;
    if circ == 0 {
        return Err(Error::Domain("zero circumference".into()));
    }
    let (x, y) = (z.x(), z.y());
    if !(y > 0.0) {
        return Err(Error::NotInHalfPlane { x, y });
    }
    let re = q as f64 * x - p as f64;
    let im = q as f64 * y;
    let c = circ as f64;
    Ok(c * c * (re * re + im * im) / (o.n() as f64 * y))
}

/// Horoballs of cores that are `eps`-short somewhere, for every primitive
/// direction `p/q` with `q <= q_max` and `p/q` in `window`, plus the
/// direction `1/0` (tangent at infinity).
pub fn horoball_family(o: &Origami, eps: f64, q_max: u64, window: (f64, f64)) -> Result<Vec<Horoball>> {
    let e0 = eps0(o);
    if !(eps > 0.0) || eps > e0 {
        return Err(Error::EpsTooLarge { eps, eps0: e0 });
    }
    let n = o.n() as f64;
    let mut out = Vec::new();
    let mut push = |dir: (i64, i64), tangency: Boundary, q: f64| -> Result<()> {
        for cyl in cylinder_decomposition(o, dir)? {
            let c = cyl.circumference as f64;
            let qq = if q == 0.0 { 1.0 } else { q * q };
            out.push(Horoball::new(tangency, eps * n / (c * c * qq), cyl.area_fraction, cyl.core_label)?);
        }
        Ok(())
    };
    push((1, 0), Boundary::Infinity, 0.0)?;
    for q in 1..=q_max as i64 {
        let qf = q as f64;
        let lo = (window.0 * qf).ceil() as i64;
        let hi = (window.1 * qf).floor() as i64;
        for p in lo..=hi {
            if p.gcd(&q) == 1 {
                push((p, q), Boundary::Finite(p as f64 / qf), qf)?;
            }
        }
    }
    Ok(out)
}

/// Points at which no core may be short: `i` and six unimodular translates.
pub const THICK_POINTS: [(f64, f64); 7] =
    [(0.0, 1.0), (1.0, 1.0), (-1.0, 1.0), (0.5, 0.5), (-0.5, 0.5), (2.0, 1.0), (-2.0, 1.0)];

/// Smallest squared core length at `z` over all cylinders in all directions.
pub fn min_core_length_sq(o: &Origami, z: &UhpPoint) -> Result<f64> {
    let (x, y) = (z.x(), z.y());
    let mut best = f64::INFINITY;
    for cyl in cylinder_decomposition(o, (1, 0))? {
        best = best.min(flat_length_sq(o, (1, 0), cyl.circumference, z)?);
    }
    // circ >= 1, so |qz - p|²/(n y) <= best bounds q y and |qx - p|
    let mut q = 1i64;
    while (q as f64 * y).powi(2) <= best * o.n() as f64 * y {
        let reach = (best * o.n() as f64 * y).sqrt();
        let qx = q as f64 * x;
        for p in (qx - reach).floor() as i64..=(qx + reach).ceil() as i64 {
            if p.gcd(&q) != 1 {
                continue;
            }
            for cyl in cylinder_decomposition(o, (p, q))? {
                best = best.min(flat_length_sq(o, (p, q), cyl.circumference, z)?);
            }
        }
        q += 1;
    }
    Ok(best)
}

/// Largest admissible thin-part parameter: half the shortest core over
/// [`THICK_POINTS`].
pub fn eps0(o: &Origami) -> f64 {
    THICK_POINTS
        .iter()
        .filter_map(|&(x, y)| UhpPoint::new(x, y).ok())
        .filter_map(|z| min_core_length_sq(o, &z).ok())
        .fold(f64::INFINITY, f64::min)
        / 2.0
}

/// Canonical representatives of the orbit under the integral unimodular group.
pub fn orbit(o: &Origami) -> Vec<Origami> {
    let start = o.canonical();
    let mut seen: BTreeMap<Origami, ()> = BTreeMap::new();
    seen.insert(start.clone(), ());
    let mut queue = VecDeque::from([start]);
    let one = BigInt::from(1);
    while let Some(x) = queue.pop_front() {
        for y in [x.shear(&one), x.rotate()] {
            let y = y.canonical();
            if !seen.contains_key(&y) {
                seen.insert(y.clone(), ());
                queue.push_back(y);
            }
        }
    }
    seen.into_keys().collect()
}

/// Area Siegel-Veech constant from the cusp data of the orbit:
/// `(3/π²) · mean over the orbit of Σ height/circumference` of horizontal
/// cylinders. Used as a reference value in tests and reports.
pub fn c_area_cusp(o: &Origami) -> f64 {
    let orb = orbit(o);
    let total: f64 = orb
        .iter()
        .map(|x| x.horizontal().iter().map(|&(c, h, _)| h as f64 / c as f64).sum::<f64>())
        .sum();
    3.0 / std::f64::consts::PI.powi(2) * total / orb.len() as f64
}

/// Per-orbit-element horizontal cylinder tables, for repeated lookups along
/// a trajectory.
#[derive(Debug, Default, Clone)]
pub struct DecompositionCache {
    table: HashMap<Origami, Vec<(u64, u64)>>,
}

impl DecompositionCache {
    /// `(circumference, height)` of cylinders of `o` in direction `dir`.
    pub fn get(&mut self, o: &Origami, dir: (i64, i64)) -> Result<Vec<(u64, u64)>> {
        let g = normalizing_matrix(dir.0, dir.1)?;
        let key = o.act(g)?.canonical();
        Ok(self
            .table
            .entry(key)
            .or_insert_with_key(|k| k.horizontal().into_iter().map(|(c, h, _)| (c, h)).collect())
            .clone())
    }
}

/// Reduce a `BigInt` exponent for [`Origami::shear`] callers that hold
/// coefficients as unsigned big integers.
pub fn signed(a: &num_bigint::BigUint, negative: bool) -> BigInt {
    let b = BigInt::from(a.clone());
    if negative {
        -b
    } else {
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn l_origami() -> Origami {
        "3; (1 2); (1 3)".parse().unwrap()
    }

    fn test_surfaces() -> Vec<Origami> {
        ["torus", "3; (1 2); (1 3)", "4; (1 2 3 4); (1 2)", "4; (1 2)(3 4); (1 3)", "5; (1 2 3); (1 4)(2 5)"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect()
    }

    fn ct(cyls: &[Cylinder]) -> Vec<(u64, u64)> {
        let mut v: Vec<_> = cyls.iter().map(|c| (c.circumference, c.height)).collect();
        v.sort_unstable();
        v
    }

    // Walk a straight segment of holonomy (p, q) with p, q >= 0 from a
    // generic point of each square and record where it lands.
    fn christoffel_return(o: &Origami, p: i64, q: i64) -> Vec<usize> {
        let (x0, y0) = (0.3217, 0.2791);
        let mut events: Vec<(f64, bool)> = Vec::new();
        for j in 1..=p {
            events.push(((j as f64 - x0) / p as f64, true));
        }
        for k in 1..=q {
            events.push(((k as f64 - y0) / q as f64, false));
        }
        events.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        (0..o.n())
            .map(|mut i| {
                for &(_, right) in &events {
                    i = if right { o.h()[i] } else { o.v()[i] };
                }
                i
            })
            .collect()
    }

    #[test]
    fn parse_and_display() {
        let o = l_origami();
        assert_eq!(o.n(), 3);
        assert_eq!(o.to_string(), "3; (1 2); (1 3)");
        assert!(matches!("3; (1 4); ()".parse::<Origami>(), Err(Error::Parse { token, .. }) if token == "4"));
        assert!(matches!("3; (1 x); ()".parse::<Origami>(), Err(Error::Parse { token, .. }) if token == "x"));
        assert!(matches!("2; (); ()".parse::<Origami>(), Err(Error::Disconnected(_))));
        assert_eq!("torus".parse::<Origami>().unwrap(), Origami::torus());
    }

    #[test]
    fn validate_examples() {
        assert!(validate(&Origami::torus()).is_ok());
        let e = validate(&Origami::new(vec![0, 1], vec![0, 1]).unwrap()).unwrap_err();
        assert_eq!(e, Error::Disconnected(vec![vec![1], vec![2]]));
        assert!(validate(&l_origami()).is_ok());
    }

    #[test]
    fn stratum_examples() {
        assert!(stratum(&Origami::torus()).is_empty());
        assert_eq!(genus(&Origami::torus()), 1);
        assert_eq!(stratum(&l_origami()), vec![2]);
        assert_eq!(genus(&l_origami()), 2);
        for o in test_surfaces() {
            assert_eq!(stratum(&o).iter().sum::<usize>() % 2, 0);
        }
    }

    #[test]
    fn decomposition_examples() {
        let t = cylinder_decomposition(&Origami::torus(), (1, 0)).unwrap();
        assert_eq!(ct(&t), vec![(1, 1)]);
        assert_eq!(t[0].area_fraction, 1.0);
        let l = cylinder_decomposition(&l_origami(), (1, 0)).unwrap();
        assert_eq!(ct(&l), vec![(1, 1), (2, 1)]);
        let areas: Vec<f64> = l.iter().map(|c| c.area_fraction).collect();
        assert_relative_eq!(areas[0], 2.0 / 3.0);
        assert_relative_eq!(areas[1], 1.0 / 3.0);
        assert_eq!(ct(&cylinder_decomposition(&Origami::torus(), (1, 1)).unwrap()), vec![(1, 1)]);
        assert!(cylinder_decomposition(&l_origami(), (2, 4)).is_err());
    }

    #[test]
    fn stacked_rows_form_one_cylinder() {
        // two squares stacked: one horizontal cylinder of height 2
        let o: Origami = "2; (); (1 2)".parse().unwrap();
        assert_eq!(ct(&cylinder_decomposition(&o, (1, 0)).unwrap()), vec![(1, 2)]);
        assert_eq!(ct(&cylinder_decomposition(&o, (0, 1)).unwrap()), vec![(2, 1)]);
    }

    #[test]
    fn circumferences_match_straight_line_walk() {
        for o in test_surfaces() {
            for p in 0..=8i64 {
                for q in 0..=8i64 {
                    if p.gcd(&q) != 1 {
                        continue;
                    }
                    let mut want: Vec<usize> = cycles(&christoffel_return(&o, p, q)).iter().map(|c| c.len()).collect();
                    want.sort_unstable();
                    let mut got: Vec<usize> = Vec::new();
                    for c in cylinder_decomposition(&o, (p, q)).unwrap() {
                        got.extend(std::iter::repeat_n(c.circumference as usize, c.height as usize));
                    }
                    got.sort_unstable();
                    assert_eq!(got, want, "{o} direction ({p},{q})");
                }
            }
        }
    }

    #[test]
    fn flat_length_examples() {
        let t = Origami::torus();
        let i = UhpPoint::new(0.0, 1.0).unwrap();
        assert_relative_eq!(flat_length_sq(&t, (1, 0), 1, &i).unwrap(), 1.0);
        assert_relative_eq!(flat_length_sq(&t, (1, 1), 1, &i).unwrap(), 2.0);
        let mut prev = f64::INFINITY;
        for y in [1.0, 10.0, 100.0, 1e4] {
            let l = flat_length_sq(&t, (1, 0), 1, &UhpPoint::new(0.0, y).unwrap()).unwrap();
            assert!(l < prev);
            prev = l;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn eps0_values() {
        assert_relative_eq!(eps0(&Origami::torus()), 0.5);
        assert_relative_eq!(eps0(&l_origami()), 1.0 / 6.0);
    }

    #[test]
    fn horoball_family_examples() {
        let t = Origami::torus();
        assert!(matches!(horoball_family(&t, 1.0, 1, (-2.0, 2.0)), Err(Error::EpsTooLarge { .. })));
        let f = horoball_family(&t, 0.5, 1, (-2.0, 2.0)).unwrap();
        assert_eq!(f.len(), 6);
        for h in &f[1..] {
            assert_eq!((h.diameter(), h.weight()), (0.5, 1.0));
        }
        assert_eq!(f[0].tangency(), Boundary::Infinity);

        let l = l_origami();
        let f = horoball_family(&l, 0.1, 1, (0.0, 0.0)).unwrap();
        let at0: Vec<_> = f.iter().filter(|h| h.tangency() == Boundary::Finite(0.0)).collect();
        assert_eq!(at0.len(), 2);
        let f2 = horoball_family(&l, 0.05, 1, (0.0, 0.0)).unwrap();
        for (a, b) in f.iter().zip(&f2) {
            assert_relative_eq!(a.diameter(), 2.0 * b.diameter(), max_relative = 1e-15);
        }
        // direction 1/0 of the L: circ 2 (area 2/3) and circ 1 (area 1/3)
        let inf: Vec<_> = f.iter().filter(|h| h.tangency() == Boundary::Infinity).collect();
        let mut dw: Vec<(f64, f64)> = inf.iter().map(|h| (h.diameter(), h.weight())).collect();
        dw.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_relative_eq!(dw[0].0, 0.1 * 3.0 / 4.0, max_relative = 1e-15);
        assert_relative_eq!(dw[0].1, 2.0 / 3.0);
        assert_relative_eq!(dw[1].0, 0.1 * 3.0, max_relative = 1e-15);
        assert_relative_eq!(dw[1].1, 1.0 / 3.0);
    }

    #[test]
    fn orbit_and_cusp_constant() {
        assert_eq!(orbit(&Origami::torus()).len(), 1);
        assert_eq!(orbit(&l_origami()).len(), 3);
        assert_relative_eq!(c_area_cusp(&Origami::torus()), 3.0 / std::f64::consts::PI.powi(2), max_relative = 1e-14);
        assert_relative_eq!(c_area_cusp(&l_origami()), 10.0 / (3.0 * std::f64::consts::PI.powi(2)), max_relative = 1e-14);
    }

    #[test]
    fn huge_shear_uses_cycle_order() {
        let o = "4; (1 2 3 4); (1 2)".parse::<Origami>().unwrap();
        let big = BigInt::from(12) * BigInt::from(10).pow(40) + 5;
        assert_eq!(o.shear(&big), o.shear(&BigInt::from(1)));
    }

    fn unimodular() -> impl Strategy<Value = [[i64; 2]; 2]> {
        prop::collection::vec(prop_oneof![(-3i64..=3).prop_map(Some), Just(None)], 0..8).prop_map(|w| {
            let mut m = [[1i64, 0], [0, 1]];
            for s in w {
                let g = match s {
                    Some(k) => [[1, k], [0, 1]],
                    None => [[0, -1], [1, 0]],
                };
                m = [
                    [g[0][0] * m[0][0] + g[0][1] * m[1][0], g[0][0] * m[0][1] + g[0][1] * m[1][1]],
                    [g[1][0] * m[0][0] + g[1][1] * m[1][0], g[1][0] * m[0][1] + g[1][1] * m[1][1]],
                ];
            }
            m
        })
    }

    fn primitive() -> impl Strategy<Value = (i64, i64)> {
        (-30i64..=30, -30i64..=30).prop_filter("primitive", |&(p, q)| p.gcd(&q) == 1)
    }

    proptest! {
        #[test]
        fn areas_sum_to_one(idx in 0usize..5, dir in primitive()) {
            let o = &test_surfaces()[idx];
            let cyls = cylinder_decomposition(o, dir).unwrap();
            let total: f64 = cyls.iter().map(|c| c.area_fraction).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            prop_assert!(cyls.iter().all(|c| c.circumference * c.height <= o.n() as u64));
        }

        #[test]
        fn decomposition_is_equivariant(idx in 0usize..5, m in unimodular(), dir in primitive()) {
            let o = &test_surfaces()[idx];
            let [[a, b], [c, d]] = m;
            let mdir = (a * dir.0 + b * dir.1, c * dir.0 + d * dir.1);
            let minv = [[d, -b], [-c, a]];
            let lhs = ct(&cylinder_decomposition(o, mdir).unwrap());
            let rhs = ct(&cylinder_decomposition(&o.act(minv).unwrap(), dir).unwrap());
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn stratum_is_invariant(idx in 0usize..5, m in unimodular()) {
            let o = &test_surfaces()[idx];
            prop_assert_eq!(stratum(o), stratum(&o.act(m).unwrap()));
        }

        #[test]
        fn flat_length_is_invariant(idx in 0usize..5, m in unimodular(), dir in primitive(),
                                    x in -2.0f64..2.0, y in 0.1f64..3.0) {
            let o = &test_surfaces()[idx];
            let [[a, b], [c, d]] = m;
            let z = UhpPoint::new(x, y).unwrap();
            // the Möbius action of m on the disc coordinate matching (p, q) ↦ m (p, q)
            let gz = crate::hyperbolic::mobius_apply([[a as f64, b as f64], [c as f64, d as f64]], z).unwrap();
            let mdir = (a * dir.0 + b * dir.1, c * dir.0 + d * dir.1);
            for cyl in cylinder_decomposition(o, dir).unwrap() {
                let l1 = flat_length_sq(o, dir, cyl.circumference, &z).unwrap();
                let l2 = flat_length_sq(&o.act(m).unwrap(), mdir, cyl.circumference, &gz).unwrap();
                prop_assert!((l1 - l2).abs() <= 1e-9 * l1);
            }
        }
    }
}
