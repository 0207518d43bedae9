//! Exact rational helpers shared by every module.

use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Arbitrary-precision rational. All semantic and analysis values use this type.
pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RationalParseError {
    #[error("empty rational literal")]
    Empty,
    #[error("malformed rational literal `{0}`")]
    Malformed(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

/// Parses `n`, `-n`, `n/m`, or a decimal such as `0.5` into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational, RationalParseError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(RationalParseError::Empty);
    }
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let malformed = || RationalParseError::Malformed(text.to_string());
    let digits = |s: &str| -> Result<BigInt, RationalParseError> {
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(malformed());
        }
        BigInt::from_str(s).map_err(|_| malformed())
    };
    let value = if let Some((num, den)) = body.split_once('/') {
        let num = digits(num.trim())?;
        let den = digits(den.trim())?;
        if den.is_zero() {
            return Err(RationalParseError::ZeroDenominator(text.to_string()));
        }
        Rational::new(num, den)
    } else if let Some((int, frac)) = body.split_once('.') {
        let int = if int.is_empty() { BigInt::zero() } else { digits(int)? };
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let frac = digits(frac)?;
        Rational::new(int * &scale + frac, scale)
    } else {
        Rational::from_integer(digits(body)?)
    };
    Ok(if negative { -value } else { value })
}

/// `num/den` with the denominator always present, e.g. `0/1`, `1/2`, `3/1`.
pub fn to_fraction_string(value: &Rational) -> String {
    format!("{}/{}", value.numer(), value.denom())
}

/// Compact literal form: `3` for integers, `1/2` otherwise.
pub fn to_literal_string(value: &Rational) -> String {
    if value.is_integer() {
        value.numer().to_string()
    } else {
        to_fraction_string(value)
    }
}

/// Decimal expansion truncated toward zero after `digits` fractional digits.
pub fn to_decimal_string(value: &Rational, digits: usize) -> String {
    let sign = if value.is_negative() { "-" } else { "" };
    let abs = value.abs();
    let scale = BigInt::from(10u32).pow(digits as u32);
    let scaled = (abs.numer() * &scale).div_floor(abs.denom());
    let (int, frac) = scaled.div_rem(&scale);
    if digits == 0 {
        return format!("{sign}{int}");
    }
    format!("{sign}{int}.{:0>width$}", frac.to_string(), width = digits)
}

pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

pub fn from_u64(n: u64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn from_biguint(n: &BigUint) -> Rational {
    Rational::from_integer(BigInt::from(n.clone()))
}

/// `2^-exp` exactly.
pub fn pow2_inv(exp: u32) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << exp)
}

/// Floor of the quotient; zero when the divisor is zero.
pub fn floor_div(a: &Rational, b: &Rational) -> Rational {
    if b.is_zero() {
        return Rational::zero();
    }
    (a / b).floor()
}

/// `a - b * floor(a / b)`; zero when the divisor is zero.
pub fn floor_mod(a: &Rational, b: &Rational) -> Rational {
    if b.is_zero() {
        return Rational::zero();
    }
    a - b * (a / b).floor()
}
