//! Conversions from big integers to `f64` that stay finite for operands far
//! outside the `f64` exponent range.

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{ToPrimitive, Zero};

const LN_2: f64 = std::f64::consts::LN_2;

/// Leading 64 bits of `n` and the number of bits dropped.
fn leading(n: &BigUint) -> (f64, u64) {
    let bits = n.bits();
    if bits <= 64 {
        (n.to_u64().unwrap_or(u64::MAX) as f64, 0)
    } else {
        let shift = bits - 64;
        ((n >> shift).to_u64().unwrap_or(u64::MAX) as f64, shift)
    }
}

/// Natural log of a positive big integer; `-inf` for zero.
pub fn ln_biguint(n: &BigUint) -> f64 {
    if n.is_zero() {
        return f64::NEG_INFINITY;
    }
    let (m, shift) = leading(n);
    m.ln() + shift as f64 * LN_2
}

pub fn ln_bigint_abs(n: &BigInt) -> f64 {
    ln_biguint(n.magnitude())
}

/// `n / 2^shift` as `f64`, saturating to `±inf` or `0` only when the true
/// value is outside the `f64` range.
pub fn scaled_to_f64(n: &BigInt, shift: u64) -> f64 {
    if n.is_zero() {
        return 0.0;
    }
    let (m, dropped) = leading(n.magnitude());
    let exp = dropped as i64 - shift as i64;
    let value = m * pow2(exp);
    if n.sign() == Sign::Minus {
        -value
    } else {
        value
    }
}

/// `num / den` as `f64` with a correctly scaled 64-bit quotient.
pub fn ratio_to_f64(num: &BigInt, den: &BigUint) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let shift = (den.bits() + 64).saturating_sub(num.magnitude().bits());
    let q = (num.magnitude() << shift) / den;
    let value = scaled_to_f64(&BigInt::from(q), shift);
    if num.sign() == Sign::Minus {
        -value
    } else {
        value
    }
}

fn pow2(e: i64) -> f64 {
    if e > 1100 {
        f64::INFINITY
    } else if e < -1200 {
        0.0
    } else if e < -1000 {
        2f64.powi(-1000) * 2f64.powi((e + 1000) as i32)
    } else {
        2f64.powi(e as i32)
    }
}
