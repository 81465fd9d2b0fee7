//! Scalar values carried by tensors and weights.
//!
//! Two kinds exist: exact rationals (arbitrary precision, always reduced,
//! positive denominator) and 64-bit floats. Arithmetic never promotes one
//! kind to the other; mixing kinds is an error.

use std::fmt;
use std::str::FromStr;

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScalarKind {
    Rational,
    F64,
}

impl fmt::Display for ScalarKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarKind::Rational => write!(f, "rational"),
            ScalarKind::F64 => write!(f, "f64"),
        }
    }
}

impl FromStr for ScalarKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rational" => Ok(ScalarKind::Rational),
            "f64" => Ok(ScalarKind::F64),
            other => Err(Error::Parse(format!("unknown scalar kind {other:?}"))),
        }
    }
}

/// A single tensor entry: exact rational or 64-bit float.
#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Rational(BigRational),
    F64(f64),
}

impl Scalar {
    pub fn kind(&self) -> ScalarKind {
        match self {
            Scalar::Rational(_) => ScalarKind::Rational,
            Scalar::F64(_) => ScalarKind::F64,
        }
    }

    pub fn zero(kind: ScalarKind) -> Self {
        match kind {
            ScalarKind::Rational => Scalar::Rational(BigRational::zero()),
            ScalarKind::F64 => Scalar::F64(0.0),
        }
    }

    pub fn one(kind: ScalarKind) -> Self {
        match kind {
            ScalarKind::Rational => Scalar::Rational(BigRational::one()),
            ScalarKind::F64 => Scalar::F64(1.0),
        }
    }

    pub fn from_int(v: i64) -> Self {
        Scalar::Rational(BigRational::from_integer(BigInt::from(v)))
    }

    /// Reduced rational `p/q`; `q` must be nonzero.
    pub fn rational(p: i64, q: i64) -> Result<Self> {
        if q == 0 {
            return Err(Error::Parse("zero denominator".into()));
        }
        Ok(Scalar::Rational(BigRational::new(
            BigInt::from(p),
            BigInt::from(q),
        )))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Rational(r) => r.is_zero(),
            Scalar::F64(x) => *x == 0.0,
        }
    }

    pub fn add(&self, other: &Scalar) -> Result<Scalar> {
        match (self, other) {
            (Scalar::Rational(a), Scalar::Rational(b)) => Ok(Scalar::Rational(a + b)),
            (Scalar::F64(a), Scalar::F64(b)) => Ok(Scalar::F64(a + b)),
            _ => Err(Error::ScalarKindMismatch(self.kind(), other.kind())),
        }
    }

    pub fn mul(&self, other: &Scalar) -> Result<Scalar> {
        match (self, other) {
            (Scalar::Rational(a), Scalar::Rational(b)) => Ok(Scalar::Rational(a * b)),
            (Scalar::F64(a), Scalar::F64(b)) => Ok(Scalar::F64(a * b)),
            _ => Err(Error::ScalarKindMismatch(self.kind(), other.kind())),
        }
    }

    /// `self += w * t`, used by weighted sums.
    pub fn add_mul_assign(&mut self, w: &Scalar, t: &Scalar) -> Result<()> {
        match (&mut *self, w, t) {
            (Scalar::Rational(acc), Scalar::Rational(a), Scalar::Rational(b)) => {
                *acc += a * b;
                Ok(())
            }
            (Scalar::F64(acc), Scalar::F64(a), Scalar::F64(b)) => {
                *acc += a * b;
                Ok(())
            }
            _ => Err(Error::ScalarKindMismatch(w.kind(), t.kind())),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Rational(r) => r.to_f64().unwrap_or(f64::NAN),
            Scalar::F64(x) => *x,
        }
    }

    pub fn as_rational(&self) -> Result<&BigRational> {
        match self {
            Scalar::Rational(r) => Ok(r),
            Scalar::F64(_) => Err(Error::ScalarKindMismatch(
                ScalarKind::Rational,
                ScalarKind::F64,
            )),
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Rational(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Scalar::F64(x) => write!(f, "{x}"),
        }
    }
}

/// Parse a rational from `"p/q"` or a plain integer string.
pub fn parse_rational(s: &str) -> Result<Scalar> {
    let r = BigRational::from_str(s)
        .map_err(|e| Error::Parse(format!("bad rational {s:?}: {e}")))?;
    Ok(Scalar::Rational(r))
}

// Rationals serialize as "p/q" strings, floats as JSON numbers; the two are
// unambiguous on the wire, so no enum tag is needed per entry.
impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Scalar::Rational(r) => {
                serializer.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
            }
            Scalar::F64(x) => serializer.serialize_f64(*x),
        }
    }
}

struct ScalarVisitor;

impl<'de> Visitor<'de> for ScalarVisitor {
    type Value = Scalar;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a \"p/q\" string or a float")
    }

    fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Scalar, E> {
        parse_rational(v).map_err(|e| E::custom(e.to_string()))
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Scalar, E> {
        Ok(Scalar::F64(v))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Scalar, E> {
        Ok(Scalar::F64(v as f64))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Scalar, E> {
        Ok(Scalar::F64(v as f64))
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        deserializer.deserialize_any(ScalarVisitor)
    }
}

/// Commutative binary operator used by the generalized tensor product and
/// by the network forward pass. Both built-ins map rationals to rationals
/// and satisfy `g(0, 0) = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BinaryOp {
    Product,
    ReluSum,
}

impl BinaryOp {
    pub fn apply(&self, a: &Scalar, b: &Scalar) -> Result<Scalar> {
        match self {
            BinaryOp::Product => a.mul(b),
            BinaryOp::ReluSum => {
                let sum = a.add(b)?;
                Ok(match sum {
                    Scalar::Rational(r) => {
                        if r.is_negative() {
                            Scalar::Rational(BigRational::zero())
                        } else {
                            Scalar::Rational(r)
                        }
                    }
                    Scalar::F64(x) => Scalar::F64(x.max(0.0)),
                })
            }
        }
    }
}

impl fmt::Display for BinaryOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BinaryOp::Product => write!(f, "product"),
            BinaryOp::ReluSum => write!(f, "relu-sum"),
        }
    }
}

impl FromStr for BinaryOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "product" => Ok(BinaryOp::Product),
            "relu-sum" | "relu_sum" => Ok(BinaryOp::ReluSum),
            other => Err(Error::Parse(format!("unknown operator {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_is_reduced_with_positive_denominator() {
        let s = Scalar::rational(4, -6).unwrap();
        match &s {
            Scalar::Rational(r) => {
                assert_eq!(r.numer(), &BigInt::from(-2));
                assert_eq!(r.denom(), &BigInt::from(3));
            }
            _ => panic!("expected rational"),
        }
        assert_eq!(s.to_string(), "-2/3");
    }

    #[test]
    fn mixing_kinds_is_an_error() {
        let a = Scalar::from_int(1);
        let b = Scalar::F64(1.0);
        assert!(matches!(a.add(&b), Err(Error::ScalarKindMismatch(_, _))));
        assert!(matches!(a.mul(&b), Err(Error::ScalarKindMismatch(_, _))));
    }

    #[test]
    fn relu_sum_clamps_at_zero() {
        let g = BinaryOp::ReluSum;
        let v = g.apply(&Scalar::from_int(1), &Scalar::from_int(3)).unwrap();
        assert_eq!(v, Scalar::from_int(4));
        let v = g.apply(&Scalar::from_int(-2), &Scalar::from_int(-1)).unwrap();
        assert_eq!(v, Scalar::from_int(0));
        let v = g.apply(&Scalar::from_int(0), &Scalar::from_int(0)).unwrap();
        assert!(v.is_zero());
    }

    #[test]
    fn scalar_json_round_trip() {
        let s = Scalar::rational(-7, 3).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(text, "\"-7/3\"");
        let back: Scalar = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);

        let f = Scalar::F64(0.5);
        let text = serde_json::to_string(&f).unwrap();
        let back: Scalar = serde_json::from_str(&text).unwrap();
        assert_eq!(back, f);
    }
}
