//! Exact rational arithmetic.
//!
//! Every probability, weight, and bound in this crate is a [`Rational`]:
//! an arbitrary-precision fraction that is always kept in lowest terms.
//! Floats appear only in reports, never in any computation that a test
//! asserts on.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

/// An exact rational number backed by arbitrary-precision integers.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(BigRational);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RationalParseError {
    #[error("empty rational literal")]
    Empty,
    #[error("invalid integer in rational literal: {0}")]
    BadInt(String),
    #[error("zero denominator in rational literal")]
    ZeroDenominator,
}

impl Rational {
    /// Builds `num/den`. Panics if `den` is zero; use [`Rational::from_str`]
    /// when the input is untrusted.
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_bigints(num: BigInt, den: BigInt) -> Result<Self, RationalParseError> {
        if den.is_zero() {
            return Err(RationalParseError::ZeroDenominator);
        }
        Ok(Rational(BigRational::new(num, den)))
    }

    pub fn from_int(v: i64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn recip(&self) -> Self {
        assert!(!self.is_zero(), "reciprocal of zero");
        Rational(self.0.recip())
    }

    pub fn pow(&self, exp: i32) -> Self {
        Rational(self.0.pow(exp))
    }

    /// Nearest double; used only for display and informational fields.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Compares `self / den` with `rhs` by cross-multiplication, without
    /// forming the quotient. Requires `self >= 0`, `den > 0`, `rhs >= 0`.
    pub fn div_cmp(&self, den: &Rational, rhs: &Rational) -> std::cmp::Ordering {
        debug_assert!(!self.is_negative() && !den.is_negative() && !rhs.is_negative());
        debug_assert!(!den.is_zero());
        let lhs = self.numer() * den.denom() * rhs.denom();
        let rhs = rhs.numer() * self.denom() * den.numer();
        lhs.cmp(&rhs)
    }

    /// Canonical `num/den` form, e.g. `4/1`, `24/25`.
    pub fn to_ratio_string(&self) -> String {
        format!("{}/{}", self.0.numer(), self.0.denom())
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_ratio_string())
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_ratio_string())
    }
}

impl Default for Rational {
    fn default() -> Self {
        Rational::zero()
    }
}

impl FromStr for Rational {
    type Err = RationalParseError;

    /// Accepts `a` or `a/b` with optional leading `-`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(RationalParseError::Empty);
        }
        let parse_int = |t: &str| {
            BigInt::from_str(t.trim()).map_err(|_| RationalParseError::BadInt(t.to_string()))
        };
        match s.split_once('/') {
            None => Ok(Rational(BigRational::from_integer(parse_int(s)?))),
            Some((n, d)) => {
                let num = parse_int(n)?;
                let den = parse_int(d)?;
                Rational::from_bigints(num, den)
            }
        }
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_ratio_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl From<u64> for Rational {
    fn from(v: u64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(v)))
    }
}

impl From<i64> for Rational {
    fn from(v: i64) -> Self {
        Rational::from_int(v)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational((self.0).$method(rhs.0))
            }
        }
        impl<'a> $trait<&'a Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                Rational((self.0).$method(&rhs.0))
            }
        }
        impl<'a> $trait<&'a Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
        impl<'a> $trait<Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational((&self.0).$method(rhs.0))
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        self.0 += &rhs.0;
    }
}

impl AddAssign for Rational {
    fn add_assign(&mut self, rhs: Rational) {
        self.0 += rhs.0;
    }
}

impl SubAssign<&Rational> for Rational {
    fn sub_assign(&mut self, rhs: &Rational) {
        self.0 -= &rhs.0;
    }
}

impl MulAssign<&Rational> for Rational {
    fn mul_assign(&mut self, rhs: &Rational) {
        self.0 *= &rhs.0;
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["1/5", "4/1", "0/1", "24/25", "-3/7"] {
            let r: Rational = s.parse().unwrap();
            assert_eq!(r.to_ratio_string(), s);
        }
        assert_eq!("4".parse::<Rational>().unwrap(), Rational::from_int(4));
        assert_eq!("2/4".parse::<Rational>().unwrap(), Rational::new(1, 2));
    }

    #[test]
    fn zero_denominator_rejected() {
        assert_eq!(
            "1/0".parse::<Rational>(),
            Err(RationalParseError::ZeroDenominator)
        );
    }

    #[test]
    fn arithmetic_is_exact() {
        let third = Rational::new(1, 3);
        let sixth = Rational::new(1, 6);
        assert_eq!(&third + &sixth, Rational::new(1, 2));
        assert_eq!(&third - &sixth, sixth);
        assert_eq!(&third * &third, Rational::new(1, 9));
        assert_eq!(&third / &sixth, Rational::from_int(2));
        assert_eq!(Rational::new(1, 5).pow(3), Rational::new(1, 125));
    }

    #[test]
    fn ordering_uses_exact_values() {
        assert!(Rational::new(1, 3) < Rational::new(34, 100));
        assert!(Rational::new(1, 3) > Rational::new(33, 100));
    }

    #[test]
    fn serde_as_ratio_string() {
        let r = Rational::new(24, 25);
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(json, "\"24/25\"");
        let back: Rational = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }
}
