//! Exact rational scalars.

use alloc::string::{String, ToString};
use core::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Big-integer rational, always reduced with positive denominator.
pub type Rational = num_rational::BigRational;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn frac(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

/// `N/2` as an exact rational.
pub fn half(n: usize) -> Rational {
    frac(n as i64, 2)
}

/// Parses `p`, `p/q` or a finite decimal such as `-1.25`.
pub fn parse(s: &str) -> Result<Rational> {
    let t = s.trim();
    let bad = || Error::InvalidInput(alloc::format!("cannot parse rational {s:?}"));
    if let Some((a, b)) = t.split_once('/') {
        let n = BigInt::from_str(a.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(b.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((a, b)) = t.split_once('.') {
        if b.is_empty() || !b.bytes().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = a.starts_with('-');
        let whole = if a.is_empty() || a == "-" || a == "+" {
            BigInt::zero()
        } else {
            BigInt::from_str(a).map_err(|_| bad())?
        };
        let frac_part = BigInt::from_str(b).map_err(|_| bad())?;
        let den = num_traits::pow(BigInt::from(10), b.len());
        let mag = Rational::new(frac_part, den);
        let w = Rational::from_integer(whole);
        return Ok(if neg { w - mag } else { w + mag });
    }
    BigInt::from_str(t).map(Rational::from_integer).map_err(|_| bad())
}

/// Canonical text form: `p` for integers, otherwise `p/q`.
pub fn fmt(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        alloc::format!("{}/{}", r.numer(), r.denom())
    }
}

/// `true` iff `r` is an integer `>= 0`.
pub fn is_natural(r: &Rational) -> bool {
    r.is_integer() && !r.is_negative()
}

/// Floor of a rational as `i64` (saturating for huge values).
pub fn floor_i64(r: &Rational) -> i64 {
    let f = r.floor().to_integer();
    i64::try_from(f).unwrap_or(if r.is_negative() { i64::MIN } else { i64::MAX })
}
