//! Exact numbers: arbitrary-precision integers and rationals.

use alloc::string::{String, ToString};
use core::fmt;

pub use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

pub type Rational = num_rational::BigRational;

pub fn int(v: i64) -> BigInt {
    BigInt::from(v)
}

pub fn rat(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Floor of `n / d` over the integers (`d != 0`).
pub fn floor_div(n: &BigInt, d: &BigInt) -> BigInt {
    n.div_floor(d)
}

pub fn floor_rat(q: &Rational) -> BigInt {
    q.numer().div_floor(q.denom())
}

/// `floor(log2(v))` for `v >= 1`, and `-1` for `v < 1`.
pub fn floor_log2(v: &Rational) -> BigInt {
    let f = floor_rat(v);
    if f < BigInt::one() {
        return BigInt::from(-1);
    }
    BigInt::from(f.bits() as i64 - 1)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecimalError(pub String);

impl fmt::Display for DecimalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "not a decimal number: `{}`", self.0)
    }
}

/// Parses `12`, `-0.25`, `3/4`, `1e-8` or `2.5E3` into an exact rational.
pub fn parse_decimal(text: &str) -> Result<Rational, DecimalError> {
    let err = || DecimalError(text.to_string());
    let s = text.trim();
    if s.is_empty() {
        return Err(err());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_decimal(n)?;
        let d = parse_decimal(d)?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(n / d);
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let e: i64 = s[pos + 1..].parse().map_err(|_| err())?;
            (&s[..pos], e)
        }
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(err());
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let mut all = String::from(whole);
    all.push_str(frac);
    let numer: BigInt = if all.is_empty() { BigInt::zero() } else { all.parse().map_err(|_| err())? };
    let scale = exponent - frac.len() as i64;
    let ten = BigInt::from(10);
    let mut value = Rational::from_integer(numer);
    if scale >= 0 {
        value *= Rational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= Rational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if neg { -value } else { value })
}

/// Renders a rational as an integer when possible, otherwise as `n/d`.
pub fn fmt_rational(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        alloc::format!("{}/{}", q.numer(), q.denom())
    }
}

/// Renders a rational in plain decimal notation when the expansion is finite.
pub fn fmt_decimal(q: &Rational) -> String {
    if q.is_integer() {
        return q.numer().to_string();
    }
    let mut d = q.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let mut places = 0usize;
    while d.is_even() {
        d /= &two;
        places += 1;
    }
    let mut fives = 0usize;
    while (&d % &five).is_zero() {
        d /= &five;
        fives += 1;
    }
    if !d.is_one() {
        return fmt_rational(q);
    }
    let places = places.max(fives);
    let scaled = q * Rational::from_integer(num_traits::pow(BigInt::from(10), places));
    let digits = scaled.numer().abs().to_string();
    let digits = if digits.len() <= places {
        let mut padded = String::new();
        for _ in 0..(places + 1 - digits.len()) {
            padded.push('0');
        }
        padded.push_str(&digits);
        padded
    } else {
        digits
    };
    let (w, f) = digits.split_at(digits.len() - places);
    let sign = if q.is_negative() { "-" } else { "" };
    alloc::format!("{}{}.{}", sign, w, f.trim_end_matches('0'))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_parse_exactly() {
        assert_eq!(parse_decimal("0.1").unwrap(), ratio(1, 10));
        assert_eq!(parse_decimal("1e-8").unwrap(), Rational::new(int(1), int(100_000_000)));
        assert_eq!(parse_decimal("-2.5E1").unwrap(), rat(-25));
        assert_eq!(parse_decimal("3/4").unwrap(), ratio(3, 4));
        assert!(parse_decimal("abc").is_err());
        assert!(parse_decimal("1/0").is_err());
    }

    #[test]
    fn log2_floor() {
        assert_eq!(floor_log2(&rat(1)), int(0));
        assert_eq!(floor_log2(&rat(64)), int(6));
        assert_eq!(floor_log2(&rat(63)), int(5));
        assert_eq!(floor_log2(&rat(0)), int(-1));
        assert_eq!(floor_log2(&ratio(5, 2)), int(1));
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(fmt_decimal(&ratio(71, 10)), "7.1");
        assert_eq!(fmt_decimal(&ratio(-3, 8)), "-0.375");
        assert_eq!(fmt_decimal(&ratio(1, 3)), "1/3");
    }
}

/// Serde adapters that encode rationals and integers as decimal strings.
#[cfg(feature = "serde")]
pub mod serde_rat {
    use super::{parse_decimal, BigInt, Rational};
    use alloc::collections::BTreeMap;
    use alloc::string::String;
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
        super::fmt_rational(q).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse_decimal(&text).map_err(D::Error::custom)
    }

    pub mod map {
        use super::*;

        pub fn serialize<S: Serializer>(m: &BTreeMap<String, Rational>, s: S) -> Result<S::Ok, S::Error> {
            let strings: BTreeMap<&String, String> = m.iter().map(|(k, v)| (k, super::super::fmt_rational(v))).collect();
            strings.serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, Rational>, D::Error> {
            let strings = BTreeMap::<String, String>::deserialize(d)?;
            strings
                .into_iter()
                .map(|(k, v)| parse_decimal(&v).map(|q| (k, q)).map_err(D::Error::custom))
                .collect()
        }
    }

    pub mod int {
        use super::*;

        pub fn serialize<S: Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
            alloc::string::ToString::to_string(v).serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
            let text = String::deserialize(d)?;
            text.parse().map_err(|_| D::Error::custom("invalid integer"))
        }
    }
}
