//! Exact rational helpers shared by the measure code and the report writers.
//!
//! Every rational that leaves the library is written as a `"num/den"` string so
//! that reports stay bit-exact.

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serializer};

/// Renders a rational as `"num/den"` (denominator always present).
pub fn fmt_q(q: &BigRational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

pub fn fmt_r64(q: &Rational64) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Parses `"num/den"`, `"num"` or a plain integer string.
pub fn parse_q(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(BigRational::new(n, d))
        }
        None => s.parse::<BigInt>().ok().map(BigRational::from_integer),
    }
}

pub fn parse_r64(s: &str) -> Option<Rational64> {
    let q = parse_q(s)?;
    let n: i64 = q.numer().try_into().ok()?;
    let d: i64 = q.denom().try_into().ok()?;
    Some(Rational64::new(n, d))
}

pub fn r64_to_big(q: &Rational64) -> BigRational {
    BigRational::new(BigInt::from(*q.numer()), BigInt::from(*q.denom()))
}

pub fn q_from_u128(v: u128) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

pub fn q_to_f64(q: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    q.to_f64().unwrap_or(f64::NAN)
}

/// `base^exp` for a non-negative exponent.
pub fn q_pow(base: &BigRational, exp: u32) -> BigRational {
    let mut acc = BigRational::one();
    for _ in 0..exp {
        acc *= base;
    }
    acc
}

pub fn q_floor(q: &BigRational) -> BigInt {
    q.floor().to_integer()
}

pub fn is_positive(q: &BigRational) -> bool {
    q.is_positive()
}

/// serde adapter: `Rational64` as a `"num/den"` string (integers also accepted).
pub mod r64_str {
    use super::*;

    pub fn serialize<S: Serializer>(q: &Rational64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_r64(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational64, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        let parsed = match &v {
            serde_json::Value::String(s) => parse_r64(s),
            serde_json::Value::Number(n) => n.as_i64().map(Rational64::from_integer),
            _ => None,
        };
        parsed.ok_or_else(|| serde::de::Error::custom(format!("expected a rational \"num/den\", got {v}")))
    }
}

/// serde adapter: `Vec<Rational64>`.
pub mod r64_vec_str {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(v: &[Rational64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for q in v {
            seq.serialize_element(&fmt_r64(q))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational64>, D::Error> {
        let raw = Vec::<serde_json::Value>::deserialize(d)?;
        raw.iter()
            .map(|v| {
                let parsed = match v {
                    serde_json::Value::String(s) => parse_r64(s),
                    serde_json::Value::Number(n) => n.as_i64().map(Rational64::from_integer),
                    _ => None,
                };
                parsed.ok_or_else(|| serde::de::Error::custom(format!("expected a rational, got {v}")))
            })
            .collect()
    }
}

/// serde adapter: `BigRational` as a `"num/den"` string.
pub mod q_str {
    use super::*;

    pub fn serialize<S: Serializer>(q: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_q(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let s = String::deserialize(d)?;
        parse_q(&s).ok_or_else(|| serde::de::Error::custom(format!("bad rational {s:?}")))
    }
}
