//! Exact rationals and the extended real line `[−∞, ∞]`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Neg;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Exact rational scalar used throughout the crate.
pub type Q = BigRational;

/// Shorthand for the rational `num / den`.
pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

/// Shorthand for an integer rational.
pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Canonical `p/q` formatting: lowest terms, positive denominator, denominator always written.
pub fn format_q(x: &Q) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot parse rational from {0:?}")]
pub struct ParseRationalError(pub String);

/// Parses `p/q` or a bare integer `p`.
pub fn parse_q(s: &str) -> Result<Q, ParseRationalError> {
    let err = || ParseRationalError(s.to_string());
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n = BigInt::from_str(n.trim()).map_err(|_| err())?;
            let d = BigInt::from_str(d.trim()).map_err(|_| err())?;
            if d.is_zero() {
                return Err(err());
            }
            Ok(Q::new(n, d))
        }
        None => Ok(Q::from_integer(BigInt::from_str(s).map_err(|_| err())?)),
    }
}

/// Serde adapter writing a rational as a `"p/q"` string.
pub mod q_string {
    use super::*;

    pub fn serialize<S: Serializer>(x: &Q, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_q(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        let s = String::deserialize(d)?;
        parse_q(&s).map_err(serde::de::Error::custom)
    }
}

/// A point of `[−∞, ∞]` with exact finite part.
///
/// The one-sided space `(−∞, ∞]` used for preorder representations is the
/// subset without [`Ext::NegInf`]; validators reject `NegInf` where it is not allowed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Ext {
    NegInf,
    Fin(Q),
    PosInf,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtError {
    #[error("∞ + (−∞) is undefined")]
    OppositeInfinities,
}

impl Ext {
    pub fn zero() -> Self {
        Ext::Fin(Q::zero())
    }

    pub fn fin(num: i64, den: i64) -> Self {
        Ext::Fin(q(num, den))
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Ext::Fin(_))
    }

    pub fn finite(&self) -> Option<&Q> {
        match self {
            Ext::Fin(x) => Some(x),
            _ => None,
        }
    }

    /// Sum on the extended line; `∞ + (−∞)` is a domain error.
    pub fn checked_add(&self, other: &Ext) -> Result<Ext, ExtError> {
        use Ext::*;
        match (self, other) {
            (Fin(a), Fin(b)) => Ok(Fin(a + b)),
            (PosInf, NegInf) | (NegInf, PosInf) => Err(ExtError::OppositeInfinities),
            (PosInf, _) | (_, PosInf) => Ok(PosInf),
            (NegInf, _) | (_, NegInf) => Ok(NegInf),
        }
    }

    pub fn add_rational(&self, t: &Q) -> Ext {
        match self {
            Ext::Fin(x) => Ext::Fin(x + t),
            other => other.clone(),
        }
    }

    /// The order-preserving map `[−∞, ∞] → [−1, 1]`, `x ↦ x / (1 + |x|)`.
    pub fn compactified(&self) -> Q {
        match self {
            Ext::NegInf => -Q::one(),
            Ext::PosInf => Q::one(),
            Ext::Fin(x) => x / (Q::one() + x.abs()),
        }
    }

    /// JSON token for the two-sided line: `"p/q"`, `"+inf"` or `"-inf"`.
    pub fn to_line_token(&self) -> String {
        match self {
            Ext::NegInf => "-inf".into(),
            Ext::PosInf => "+inf".into(),
            Ext::Fin(x) => format_q(x),
        }
    }

    pub fn from_line_token(s: &str) -> Result<Ext, ParseRationalError> {
        match s.trim() {
            "+inf" | "inf" => Ok(Ext::PosInf),
            "-inf" => Ok(Ext::NegInf),
            other => parse_q(other).map(Ext::Fin),
        }
    }
}

impl Neg for Ext {
    type Output = Ext;
    fn neg(self) -> Ext {
        match self {
            Ext::NegInf => Ext::PosInf,
            Ext::PosInf => Ext::NegInf,
            Ext::Fin(x) => Ext::Fin(-x),
        }
    }
}

impl Neg for &Ext {
    type Output = Ext;
    fn neg(self) -> Ext {
        -self.clone()
    }
}

impl From<Q> for Ext {
    fn from(x: Q) -> Self {
        Ext::Fin(x)
    }
}

impl PartialOrd for Ext {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ext {
    fn cmp(&self, other: &Self) -> Ordering {
        use Ext::*;
        match (self, other) {
            (NegInf, NegInf) | (PosInf, PosInf) => Ordering::Equal,
            (NegInf, _) | (_, PosInf) => Ordering::Less,
            (_, NegInf) | (PosInf, _) => Ordering::Greater,
            (Fin(a), Fin(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ext::NegInf => write!(f, "-inf"),
            Ext::PosInf => write!(f, "+inf"),
            Ext::Fin(x) => write!(f, "{}", format_q(x)),
        }
    }
}

/// Values of `(−∞, ∞]` serialize as `{"fin": "p/q"}` or `"inf"`.
impl Serialize for Ext {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        match self {
            Ext::PosInf => s.serialize_str("inf"),
            Ext::NegInf => s.serialize_str("-inf"),
            Ext::Fin(x) => {
                let mut m = s.serialize_map(Some(1))?;
                m.serialize_entry("fin", &format_q(x))?;
                m.end()
            }
        }
    }
}

impl<'de> Deserialize<'de> for Ext {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Token(String),
            Fin { fin: String },
        }
        match Repr::deserialize(d)? {
            Repr::Token(t) => match t.as_str() {
                "inf" | "+inf" => Ok(Ext::PosInf),
                "-inf" => Ok(Ext::NegInf),
                other => Err(serde::de::Error::custom(format!("unknown extended real {other:?}"))),
            },
            Repr::Fin { fin } => parse_q(&fin).map(Ext::Fin).map_err(serde::de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinity_absorbs_finite() {
        assert_eq!(Ext::fin(3, 2).checked_add(&Ext::PosInf), Ok(Ext::PosInf));
        assert_eq!(Ext::PosInf.checked_add(&Ext::fin(-7, 1)), Ok(Ext::PosInf));
        assert_eq!(
            Ext::PosInf.checked_add(&Ext::NegInf),
            Err(ExtError::OppositeInfinities)
        );
    }

    #[test]
    fn order_and_compactification() {
        let xs = [Ext::NegInf, Ext::fin(-5, 1), Ext::zero(), Ext::fin(1, 3), Ext::PosInf];
        for w in xs.windows(2) {
            assert!(w[0] < w[1]);
            assert!(w[0].compactified() < w[1].compactified());
        }
        assert_eq!(Ext::fin(1, 1).compactified(), q(1, 2));
    }

    #[test]
    fn rational_formatting_is_canonical() {
        assert_eq!(format_q(&q(4, -6)), "-2/3");
        assert_eq!(format_q(&qi(3)), "3/1");
        assert_eq!(parse_q("6/4").unwrap(), q(3, 2));
        assert_eq!(parse_q("-2").unwrap(), qi(-2));
        assert!(parse_q("1/0").is_err());
    }

    #[test]
    fn json_forms() {
        let s = serde_json::to_string(&vec![Ext::fin(1, 2), Ext::PosInf]).unwrap();
        assert_eq!(s, r#"[{"fin":"1/2"},"inf"]"#);
        let back: Vec<Ext> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![Ext::fin(1, 2), Ext::PosInf]);
        assert_eq!(Ext::from_line_token("-inf").unwrap(), Ext::NegInf);
        assert_eq!(Ext::fin(-3, 1).to_line_token(), "-3/1");
    }
}
