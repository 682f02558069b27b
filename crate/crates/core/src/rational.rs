//! Exponent parsing (`"3/4"`, `"-0.5"`, `2`) and rational snapping for
//! reporting.

use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest denominator considered when snapping.
pub const SNAP_MAX_DENOMINATOR: i64 = 12;
/// Maximum distance between a value and its snapped rational.
pub const SNAP_TOLERANCE: f64 = 1e-6;

/// Parses a decimal or `p/q` string into a float.
pub fn parse_exponent(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || Error::Config(format!("cannot parse exponent `{s}`"));
    let value = match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| bad())?;
            let q: f64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0.0 {
                return Err(Error::Config(format!("zero denominator in `{s}`")));
            }
            p / q
        }
        None => s.parse().map_err(|_| bad())?,
    };
    if !value.is_finite() {
        return Err(bad());
    }
    Ok(value)
}

/// A rational approximation `num/den` with `den > 0` and lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rational {
    pub num: i64,
    pub den: i64,
}

impl Rational {
    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// Nearest `p/q` with `q <= 12` lying within `1e-6` of `x`, smallest
/// denominator first.
pub fn snap(x: f64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    (1..=SNAP_MAX_DENOMINATOR).find_map(|den| {
        let num = (x * den as f64).round();
        if (x - num / den as f64).abs() <= SNAP_TOLERANCE && num.abs() < i64::MAX as f64 {
            let num = num as i64;
            let g = gcd(num.abs(), den);
            Some(Rational {
                num: num / g,
                den: den / g,
            })
        } else {
            None
        }
    })
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

/// Snapped string form, or `None` when no small rational is close enough.
pub fn snap_string(x: f64) -> Option<String> {
    snap(x).map(|r| r.to_string())
}

/// An exponent read from JSON: either a number or a string accepted by
/// [`parse_exponent`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Exponent(pub f64);

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct ExpVisitor;
        impl Visitor<'_> for ExpVisitor {
            type Value = Exponent;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or a string such as \"3/4\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Exponent, E> {
                Ok(Exponent(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Exponent, E> {
                Ok(Exponent(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Exponent, E> {
                Ok(Exponent(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Exponent, E> {
                parse_exponent(v).map(Exponent).map_err(E::custom)
            }
        }
        deserializer.deserialize_any(ExpVisitor)
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.0)
    }
}
