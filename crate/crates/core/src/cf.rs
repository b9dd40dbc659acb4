//! Gauss-map dynamics on certified real numbers.
//!
//! A [`PrecisionReal`] is a closed interval with rational endpoints (or a
//! single exact rational). A continued-fraction coefficient is emitted only
//! when both endpoints agree on it, so an expansion never contains digits
//! that the input does not determine.

use num_bigint::{BigInt, BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

use crate::bignum::{ln_biguint, ratio_to_f64};
use crate::error::{Error, Result};
use crate::hyperbolic::{Boundary, Horoball};

/// Expansions stop before the remaining precision drops below this many bits.
pub const DEFAULT_SAFETY_FLOOR: f64 = 64.0;

#[derive(Debug, Clone, PartialEq, Eq)]
struct Ratio {
    num: BigUint,
    den: BigUint,
}

impl Ratio {
    fn ln(&self) -> f64 {
        ln_biguint(&self.num) - ln_biguint(&self.den)
    }
}

/// A real number in `(0, 1)` known to lie in `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionReal {
    lo: Ratio,
    hi: Ratio,
    exact: bool,
    bits: f64,
    floor: f64,
}

/// Outcome of one application of the Gauss map `x ↦ 1/x - floor(1/x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum GaussStep {
    /// `a = floor(1/x)`; `rest` is `None` when `1/x - a = 0` exactly.
    Digit { a: BigUint, rest: Option<PrecisionReal> },
    /// The interval no longer determines the next coefficient within budget.
    Exhausted,
}

impl PrecisionReal {
    /// The exact rational `num/den` with `0 < num < den`.
    pub fn exact(num: impl Into<BigUint>, den: impl Into<BigUint>) -> Result<Self> {
        let (num, den) = (num.into(), den.into());
        if num.is_zero() || num >= den {
            return Err(Error::Domain(format!("{num}/{den} is not in (0, 1)")));
        }
        let r = Ratio { num, den };
        Ok(Self { lo: r.clone(), hi: r, exact: true, bits: f64::INFINITY, floor: DEFAULT_SAFETY_FLOOR })
    }

    /// The interval `[m, m + 1] / 2^bits`.
    pub fn dyadic(m: BigUint, bits: u64) -> Result<Self> {
        let den = BigUint::one() << bits;
        let hi = &m + 1u32;
        if m.is_zero() || hi >= den {
            return Err(Error::Domain(format!("dyadic numerator outside (0, 2^{bits} - 1)")));
        }
        Self::interval(m, den.clone(), hi, den)
    }

    /// `[lo_num/lo_den, hi_num/hi_den]` inside `(0, 1)`.
    pub fn interval(lo_num: BigUint, lo_den: BigUint, hi_num: BigUint, hi_den: BigUint) -> Result<Self> {
        let lo = Ratio { num: lo_num, den: lo_den };
        let hi = Ratio { num: hi_num, den: hi_den };
        if lo.num.is_zero() || hi.num >= hi.den || &lo.num * &hi.den > &hi.num * &lo.den {
            return Err(Error::Domain("interval is empty or leaves (0, 1)".into()));
        }
        // bits = -log2(hi - lo)
        let width_num = &hi.num * &lo.den - &lo.num * &hi.den;
        let bits = if width_num.is_zero() {
            f64::INFINITY
        } else {
            (ln_biguint(&lo.den) + ln_biguint(&hi.den) - ln_biguint(&width_num)) / std::f64::consts::LN_2
        };
        Ok(Self { exact: width_num.is_zero(), lo, hi, bits, floor: DEFAULT_SAFETY_FLOOR })
    }

    /// Uniform sample on `(0, 1)` carried at `bits` bits.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, bits: u64) -> Result<Self> {
        if bits < 2 {
            return Err(Error::Domain(format!("precision budget of {bits} bits")));
        }
        let top = (BigUint::one() << bits) - 1u32;
        let m = rng.gen_biguint_range(&BigUint::one(), &top);
        Self::dyadic(m, bits)
    }

    pub fn with_safety_floor(mut self, floor: f64) -> Self {
        self.floor = floor;
        self
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    /// Remaining precision, `-log2(hi - lo)`.
    pub fn bits(&self) -> f64 {
        self.bits
    }

    pub fn safety_floor(&self) -> f64 {
        self.floor
    }

    pub fn lower(&self) -> (&BigUint, &BigUint) {
        (&self.lo.num, &self.lo.den)
    }

    pub fn upper(&self) -> (&BigUint, &BigUint) {
        (&self.hi.num, &self.hi.den)
    }

    pub fn to_f64(&self) -> f64 {
        ratio_to_f64(&BigInt::from(self.lo.num.clone()), &self.lo.den)
    }

    pub fn gauss_step(&self) -> Result<GaussStep> {
        if self.lo.num.is_zero() {
            return Err(Error::Domain("Gauss map applied to 0".into()));
        }
        if !self.exact && self.bits < self.floor {
            return Ok(GaussStep::Exhausted);
        }
        let (a, r_hi) = self.hi.den.div_rem(&self.hi.num);
        if self.exact {
            let rest = if r_hi.is_zero() {
                None
            } else {
                let r = Ratio { num: r_hi, den: self.hi.num.clone() };
                Some(Self { lo: r.clone(), hi: r, ..self.clone() })
            };
            return Ok(GaussStep::Digit { a, rest });
        }
        let (a_lo, r_lo) = self.lo.den.div_rem(&self.lo.num);
        if a != a_lo || r_hi.is_zero() {
            return Ok(GaussStep::Exhausted);
        }
        // The map reverses orientation: 1/hi - a is the new lower end.
        let bits = self.bits + 2.0 * self.lo.ln() / std::f64::consts::LN_2;
        if bits < self.floor {
            return Ok(GaussStep::Exhausted);
        }
        let rest = Self {
            lo: Ratio { num: r_hi, den: self.hi.num.clone() },
            hi: Ratio { num: r_lo, den: self.lo.num.clone() },
            exact: false,
            bits,
            floor: self.floor,
        };
        Ok(GaussStep::Digit { a, rest: Some(rest) })
    }
}

/// Continued-fraction coefficients `a_1, a_2, …` of a number in `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CfExpansion {
    pub coeffs: Vec<BigUint>,
    /// The expansion stopped because the input's precision ran out.
    pub exhausted: bool,
    /// The input is rational and the expansion is complete.
    pub terminated: bool,
}

impl CfExpansion {
    pub fn from_coeffs(coeffs: Vec<BigUint>) -> Self {
        Self { coeffs, exhausted: false, terminated: false }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(|a| a.to_f64().unwrap_or(f64::INFINITY)).collect()
    }
}

pub fn cf_expand(x: &PrecisionReal, n_max: usize) -> CfExpansion {
    let mut out = CfExpansion::default();
    let mut cur = x.clone();
    while out.coeffs.len() < n_max {
        match cur.gauss_step() {
            Ok(GaussStep::Digit { a, rest }) => {
                out.coeffs.push(a);
                match rest {
                    Some(r) => cur = r,
                    None => {
                        out.terminated = true;
                        break;
                    }
                }
            }
            Ok(GaussStep::Exhausted) | Err(_) => {
                out.exhausted = true;
                break;
            }
        }
    }
    out
}

/// A convergent `p/q`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Convergent {
    pub p: BigUint,
    pub q: BigUint,
}

pub fn convergents(e: &CfExpansion) -> Result<Vec<Convergent>> {
    if e.is_empty() {
        return Err(Error::Empty("continued fraction expansion"));
    }
    let (mut p0, mut q0) = (BigUint::one(), BigUint::zero());
    let (mut p1, mut q1) = (BigUint::zero(), BigUint::one());
    let mut out = Vec::with_capacity(e.len());
    for a in &e.coeffs {
        let p2 = a * &p1 + &p0;
        let q2 = a * &q1 + &q0;
        out.push(Convergent { p: p2.clone(), q: q2.clone() });
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
    }
    Ok(out)
}

/// The horoball tangent at `p/q` where the flat torus core of slope `p/q`
/// satisfies `ℓ² = |qz - p|² / Im z <= eps`.
pub fn ford_horoball(p: i64, q: u64, eps: f64) -> Result<Horoball> {
    if q == 0 {
        if p.unsigned_abs() != 1 {
            return Err(Error::NotReduced { p: p.to_string(), q: "0".into() });
        }
    } else if BigInt::from(p).gcd(&BigInt::from(q)) != BigInt::one() {
        return Err(Error::NotReduced { p: p.to_string(), q: q.to_string() });
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Domain(format!("eps = {eps}")));
    }
    if q == 0 {
        return Horoball::new(Boundary::Infinity, eps, 1.0, "1/0");
    }
    let qf = q as f64;
    Horoball::new(Boundary::Finite(p as f64 / qf), eps / (qf * qf), 1.0, format!("{p}/{q}"))
}

/// Sum with a single maximal term removed.
pub fn trimmed_sum(values: &[f64]) -> Result<f64> {
    let (imax, _) = values
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, &v)| match best {
            Some((_, b)) if b >= v => best,
            _ => Some((i, v)),
        })
        .ok_or(Error::Empty("trimmed sum"))?;
    Ok(values.iter().enumerate().filter(|&(i, _)| i != imax).map(|(_, v)| v).sum())
}

/// `(a_1 + … + a_n - max a_k) / (n ln n)`.
pub fn dv_statistic(e: &CfExpansion, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("n = {n}, need n >= 2")));
    }
    if e.len() < n {
        return Err(Error::PrecisionExhausted(format!("{} coefficients available, {n} requested", e.len())));
    }
    let a = e.coeffs_f64();
    let nf = n as f64;
    Ok(trimmed_sum(&a[..n])? / (nf * nf.ln()))
}
