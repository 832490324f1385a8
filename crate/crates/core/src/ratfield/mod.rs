//! Exact arithmetic in Q[z] and Q(z) with the conjugation involution.
//!
//! Coefficients are arbitrary-precision rationals so that every zero test is
//! exact. Serialized coefficients use the `"p/q"` string form.

mod modular;
mod poly;
mod ratfn;

use num_bigint::BigInt;
use serde::de::{self, Deserializer};
use serde::ser::{SerializeStruct, Serializer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use poly::Poly;
pub use ratfn::RatFn;

pub use poly::rational_to_f64;

pub type Rational = num_rational::BigRational;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RatFieldError {
    #[error("polynomial division by zero")]
    PolyDivisionByZero,
    #[error("polynomial division is not exact")]
    InexactDivision,
    #[error("gcd of two zero polynomials is undefined")]
    GcdOfZeros,
    #[error("rational function with zero denominator")]
    ZeroDenominator,
    #[error("division by the zero rational function")]
    DivisionByZero,
    #[error("pole at z = {re} + {im}i")]
    Pole { re: f64, im: f64 },
    #[error("pole at z = {0}")]
    PoleRational(Rational),
    #[error("invalid rational literal {0:?}: expected \"p\" or \"p/q\"")]
    Parse(String),
}

/// Parses `"p"` or `"p/q"` with integer `p`, nonzero integer `q`.
/// Decimal notation is rejected so that every value is exact.
pub fn parse_rational(s: &str) -> Result<Rational, RatFieldError> {
    let err = || RatFieldError::Parse(s.to_string());
    let int = |t: &str| -> Result<BigInt, RatFieldError> {
        let t = t.trim();
        let digits = t.strip_prefix(['-', '+']).unwrap_or(t);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        t.parse::<BigInt>().map_err(|_| err())
    };
    match s.split_once('/') {
        None => Ok(Rational::from_integer(int(s)?)),
        Some((p, q)) => {
            let q = int(q)?;
            if q == BigInt::from(0) {
                return Err(err());
            }
            Ok(Rational::new(int(p)?, q))
        }
    }
}

/// Always emits `"p/q"`, including `q = 1`.
pub fn format_rational(c: &Rational) -> String {
    format!("{}/{}", c.numer(), c.denom())
}

impl Serialize for Poly {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.coeffs().iter().map(format_rational))
    }
}

impl<'de> Deserialize<'de> for Poly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        let coeffs = raw
            .iter()
            .map(|c| parse_rational(c))
            .collect::<Result<Vec<_>, _>>()
            .map_err(de::Error::custom)?;
        Ok(Poly::from_coeffs(coeffs))
    }
}

impl Serialize for RatFn {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("RatFn", 2)?;
        st.serialize_field("num", self.num())?;
        st.serialize_field("den", self.den())?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for RatFn {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            num: Poly,
            den: Poly,
        }
        let raw = Raw::deserialize(d)?;
        RatFn::new(raw.num, raw.den).map_err(de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_parsing() {
        assert_eq!(parse_rational("3").unwrap(), Rational::from_integer(3.into()));
        assert_eq!(parse_rational("-6/4").unwrap(), Rational::new((-3).into(), 2.into()));
        assert!(parse_rational("0.5").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("").is_err());
        assert!(parse_rational("1e3").is_err());
        assert_eq!(format_rational(&Rational::from_integer(7.into())), "7/1");
    }

    #[test]
    fn ratfn_json_round_trip() {
        let r = RatFn::new(Poly::from_ints(&[1, 2]), Poly::from_ints(&[3, 0, 1])).unwrap();
        let js = serde_json::to_string(&r).unwrap();
        assert_eq!(js, r#"{"num":["1/1","2/1"],"den":["3/1","0/1","1/1"]}"#);
        let back: RatFn = serde_json::from_str(&js).unwrap();
        assert_eq!(back, r);
        // non-canonical input is normalized
        let back: RatFn = serde_json::from_str(r#"{"num":["2"],"den":["4","2"]}"#).unwrap();
        assert_eq!(back, RatFn::new(Poly::one(), Poly::from_ints(&[2, 1])).unwrap());
        assert!(serde_json::from_str::<RatFn>(r#"{"num":["1"],"den":[]}"#).is_err());
    }
}
