//! Exact rational helpers: the `"num/den"` string codec used by every JSON
//! surface, and float conversions.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, ToPrimitive, Zero};

use crate::error::Error;

/// Alias for the crate's exact scalar type.
pub type Rat = BigRational;

/// Renders a rational in the canonical reduced form used on all JSON and
/// report surfaces: `"num/den"`, or just `"num"` when the denominator is 1.
pub fn to_string(r: &Rat) -> String {
    r.to_string()
}

/// Parses `"num"` or `"num/den"` (optionally signed) into a reduced rational.
pub fn parse(text: &str) -> Result<Rat, Error> {
    let err = || Error::ParseRational {
        text: text.to_string(),
    };
    let mut parts = text.splitn(2, '/');
    let numer: BigInt = parts.next().ok_or_else(err)?.trim().parse().map_err(|_| err())?;
    let denom: BigInt = match parts.next() {
        Some(d) => d.trim().parse().map_err(|_| err())?,
        None => BigInt::one(),
    };
    if denom.is_zero() {
        return Err(err());
    }
    Ok(Rat::new(numer, denom))
}

/// Nearest-double conversion (used only on reporting surfaces).
pub fn to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Exact conversion of a finite double (doubles are dyadic rationals).
pub fn from_f64(x: f64) -> Option<Rat> {
    Rat::from_float(x)
}

/// `n!` as an exact big integer.
pub fn factorial(n: usize) -> BigInt {
    (1..=n as u64).map(BigInt::from).product()
}

pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn ratio(numer: i64, denom: i64) -> Rat {
    Rat::new(BigInt::from(numer), BigInt::from(denom))
}
