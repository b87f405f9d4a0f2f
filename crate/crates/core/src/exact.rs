//! Helpers for exact rationals: parsing, decimal rendering, and rounding
//! to a number of significant digits.

use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("cannot parse {0:?} as a rational (expected \"num/den\", an integer or a decimal)")]
pub struct ParseRationalError(pub String);

/// Parses `"n/d"`, `"n"` or a plain decimal such as `"0.125"`.
pub fn parse_rational(s: &str) -> Result<BigRational, ParseRationalError> {
    let err = || ParseRationalError(s.to_string());
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| err())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let negative = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches(['-', '+']), frac);
        let mut n = BigInt::from_str(&digits).map_err(|_| err())?;
        if negative {
            n = -n;
        }
        return Ok(BigRational::new(n, pow10(frac.len() as u32)));
    }
    BigInt::from_str(s).map(BigRational::from_integer).map_err(|_| err())
}

pub fn pow10(e: u32) -> BigInt {
    BigInt::from(10u32).pow(e)
}

fn scale_by_pow10(r: &BigRational, e: i64) -> BigRational {
    if e >= 0 {
        r * BigRational::from_integer(pow10(e as u32))
    } else {
        r / BigRational::from_integer(pow10((-e) as u32))
    }
}

/// `floor(log10 |r|)` for nonzero `r`.
pub fn decimal_exponent(r: &BigRational) -> i64 {
    assert!(!r.is_zero(), "decimal exponent of zero");
    let r = r.abs();
    let mut e = r.numer().to_string().len() as i64 - r.denom().to_string().len() as i64;
    while scale_by_pow10(&BigRational::one(), e) > r {
        e -= 1;
    }
    while scale_by_pow10(&BigRational::one(), e + 1) <= r {
        e += 1;
    }
    e
}

/// Largest rational with `digits` significant decimal digits not exceeding `r`.
pub fn round_down_significant(r: &BigRational, digits: u32) -> BigRational {
    if r.is_zero() {
        return r.clone();
    }
    let shift = digits as i64 - 1 - decimal_exponent(r);
    let scaled = scale_by_pow10(r, shift);
    let floored = BigRational::from_integer(scaled.numer().div_floor(scaled.denom()));
    scale_by_pow10(&floored, -shift)
}

/// Scientific notation with `digits` significant digits, rounded to nearest.
pub fn to_scientific(r: &BigRational, digits: u32) -> String {
    if r.is_zero() {
        return format!("{:.*}e0", digits.saturating_sub(1) as usize, 0.0);
    }
    let sign = if r.is_negative() { "-" } else { "" };
    let a = r.abs();
    let mut e = decimal_exponent(&a);
    let mut mantissa = round_half_up(&scale_by_pow10(&a, digits as i64 - 1 - e));
    if mantissa >= pow10(digits) {
        e += 1;
        mantissa = round_half_up(&scale_by_pow10(&a, digits as i64 - 1 - e));
    }
    let m = mantissa.to_string();
    let (head, tail) = m.split_at(1);
    if tail.is_empty() {
        format!("{sign}{head}e{e}")
    } else {
        format!("{sign}{head}.{tail}e{e}")
    }
}

fn round_half_up(r: &BigRational) -> BigInt {
    let twice = r * BigRational::from_integer(BigInt::from(2));
    let n = twice.numer() + twice.denom();
    n.div_floor(&(twice.denom() * 2))
}

/// `"numerator/denominator"` (or just the integer).
pub fn to_fraction_string(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}
