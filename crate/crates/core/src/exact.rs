//! Exact rational scalars for physical quantities.
//!
//! Energies, latencies, leakage powers and areas are carried as arbitrary
//! precision rationals so that cost comparisons, report identities and
//! golden files are bit-stable. Values deserialize from JSON numbers without
//! a detour through floating point (decimal literals are kept exact) and
//! render back either as exact decimals or as fixed-precision decimals for
//! reports.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{de, Deserialize, Serialize};

/// An exact rational scalar.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Exact(BigRational);

/// Error parsing a decimal or rational literal.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid numeric literal {literal:?}: {reason}")]
pub struct ParseExactError {
    pub literal: String,
    pub reason: &'static str,
}

impl Exact {
    pub fn zero() -> Self {
        Exact(BigRational::zero())
    }

    pub fn one() -> Self {
        Exact(BigRational::one())
    }

    pub fn from_ratio(numer: i64, denom: u64) -> Self {
        assert!(denom != 0, "zero denominator");
        Exact(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn abs(&self) -> Self {
        Exact(self.0.abs())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn as_rational(&self) -> &BigRational {
        &self.0
    }

    /// Lossy conversion, for ordering-insensitive display purposes only.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Parses `"123"`, `"-1.25"`, `"2.5e3"` or `"3/4"` exactly.
    pub fn parse(text: &str) -> Result<Self, ParseExactError> {
        let err = |reason| ParseExactError {
            literal: text.to_owned(),
            reason,
        };
        let s = text.trim();
        if s.is_empty() {
            return Err(err("empty literal"));
        }
        if let Some((n, d)) = s.split_once('/') {
            let numer = BigInt::from_str(n.trim()).map_err(|_| err("bad numerator"))?;
            let denom = BigInt::from_str(d.trim()).map_err(|_| err("bad denominator"))?;
            if denom.is_zero() {
                return Err(err("zero denominator"));
            }
            return Ok(Exact(BigRational::new(numer, denom)));
        }

        // Decimal with optional exponent: [sign] digits [. digits] [e[sign]digits]
        let (mantissa, exp10) = match s.find(['e', 'E']) {
            Some(pos) => {
                let e: i64 = s[pos + 1..].parse().map_err(|_| err("bad exponent"))?;
                (&s[..pos], e)
            }
            None => (s, 0),
        };
        let (int_part, frac_part) = match mantissa.split_once('.') {
            Some((i, f)) => (i, f),
            None => (mantissa, ""),
        };
        let digits: String = format!("{int_part}{frac_part}");
        if digits.is_empty() || digits == "-" || digits == "+" {
            return Err(err("no digits"));
        }
        let unscaled = BigInt::from_str(&digits).map_err(|_| err("bad mantissa"))?;
        let scale = exp10 - frac_part.len() as i64;
        let pow = BigInt::from(10u32).pow(scale.unsigned_abs() as u32);
        let value = if scale >= 0 {
            BigRational::from_integer(unscaled * pow)
        } else {
            BigRational::new(unscaled, pow)
        };
        Ok(Exact(value))
    }

    /// Exact decimal rendering, available when the denominator is of the
    /// form 2^a * 5^b. Trailing fractional zeros are trimmed.
    pub fn to_decimal_string(&self) -> Option<String> {
        let mut d = self.0.denom().clone();
        let two = BigInt::from(2u32);
        let five = BigInt::from(5u32);
        let mut k2 = 0u32;
        let mut k5 = 0u32;
        while (&d % &two).is_zero() {
            d /= &two;
            k2 += 1;
        }
        while (&d % &five).is_zero() {
            d /= &five;
            k5 += 1;
        }
        if !d.is_one() {
            return None;
        }
        let k = k2.max(k5);
        let scaled = self.0.numer() * BigInt::from(10u32).pow(k) / self.0.denom();
        Some(place_decimal_point(&scaled, k, true))
    }

    /// Fixed-precision decimal rendering; rounds half away from zero.
    pub fn to_fixed_decimal(&self, digits: u32) -> String {
        let pow = BigInt::from(10u32).pow(digits);
        let scaled = &self.0 * BigRational::from_integer(pow);
        let rounded = scaled.round().to_integer();
        place_decimal_point(&rounded, digits, false)
    }
}

/// Renders `scaled * 10^-k` as a decimal string.
fn place_decimal_point(scaled: &BigInt, k: u32, trim: bool) -> String {
    let negative = scaled.is_negative();
    let mut digits = scaled.abs().to_string();
    let k = k as usize;
    if digits.len() <= k {
        digits = format!("{}{}", "0".repeat(k + 1 - digits.len()), digits);
    }
    let split = digits.len() - k;
    let (int_part, mut frac_part) = (&digits[..split], digits[split..].to_string());
    if trim {
        while frac_part.ends_with('0') {
            frac_part.pop();
        }
    }
    let sign = if negative { "-" } else { "" };
    if frac_part.is_empty() {
        format!("{sign}{int_part}")
    } else {
        format!("{sign}{int_part}.{frac_part}")
    }
}

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_decimal_string() {
            Some(s) => f.write_str(&s),
            None => write!(f, "{}/{}", self.0.numer(), self.0.denom()),
        }
    }
}

impl fmt::Debug for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Exact({self})")
    }
}

impl FromStr for Exact {
    type Err = ParseExactError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Exact::parse(s)
    }
}

macro_rules! from_int {
    ($($t:ty),*) => {$(
        impl From<$t> for Exact {
            fn from(v: $t) -> Self {
                Exact(BigRational::from_integer(BigInt::from(v)))
            }
        }
    )*};
}
from_int!(u8, u16, u32, u64, u128, usize, i8, i16, i32, i64, i128);

macro_rules! binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Exact {
            type Output = Exact;
            fn $method(self, rhs: Exact) -> Exact {
                Exact((self.0).$method(rhs.0))
            }
        }
        impl $trait<&Exact> for Exact {
            type Output = Exact;
            fn $method(self, rhs: &Exact) -> Exact {
                Exact((self.0).$method(&rhs.0))
            }
        }
        impl $trait<Exact> for &Exact {
            type Output = Exact;
            fn $method(self, rhs: Exact) -> Exact {
                Exact((&self.0).$method(rhs.0))
            }
        }
        impl $trait<&Exact> for &Exact {
            type Output = Exact;
            fn $method(self, rhs: &Exact) -> Exact {
                Exact((&self.0).$method(&rhs.0))
            }
        }
    };
}
binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl Neg for Exact {
    type Output = Exact;
    fn neg(self) -> Exact {
        Exact(-self.0)
    }
}

impl AddAssign<&Exact> for Exact {
    fn add_assign(&mut self, rhs: &Exact) {
        self.0 += &rhs.0;
    }
}

impl AddAssign<Exact> for Exact {
    fn add_assign(&mut self, rhs: Exact) {
        self.0 += rhs.0;
    }
}

impl SubAssign<&Exact> for Exact {
    fn sub_assign(&mut self, rhs: &Exact) {
        self.0 -= &rhs.0;
    }
}

impl MulAssign<&Exact> for Exact {
    fn mul_assign(&mut self, rhs: &Exact) {
        self.0 *= &rhs.0;
    }
}

impl std::iter::Sum for Exact {
    fn sum<I: Iterator<Item = Exact>>(iter: I) -> Exact {
        iter.fold(Exact::zero(), |acc, x| acc + x)
    }
}

impl<'a> std::iter::Sum<&'a Exact> for Exact {
    fn sum<I: Iterator<Item = &'a Exact>>(iter: I) -> Exact {
        iter.fold(Exact::zero(), |acc, x| acc + x)
    }
}

impl Serialize for Exact {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self.to_decimal_string() {
            Some(dec) => serde_json::Number::from_string_unchecked(dec).serialize(serializer),
            None => serializer.serialize_str(&format!("{}/{}", self.0.numer(), self.0.denom())),
        }
    }
}

impl<'de> Deserialize<'de> for Exact {
    fn deserialize<D: de::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ExactVisitor;

        impl<'de> de::Visitor<'de> for ExactVisitor {
            type Value = Exact;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or a decimal/rational string")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Exact, E> {
                Ok(Exact::from(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Exact, E> {
                Ok(Exact::from(v))
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Exact, E> {
                BigRational::from_float(v)
                    .map(Exact)
                    .ok_or_else(|| E::custom("non-finite number"))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Exact, E> {
                Exact::parse(v).map_err(E::custom)
            }

            // serde_json's arbitrary-precision numbers arrive as a one-entry
            // map; let Number's own impl decode it, then parse its literal.
            fn visit_map<A: de::MapAccess<'de>>(self, map: A) -> Result<Exact, A::Error> {
                let n =
                    serde_json::Number::deserialize(de::value::MapAccessDeserializer::new(map))?;
                Exact::parse(&n.to_string()).map_err(de::Error::custom)
            }
        }

        deserializer.deserialize_any(ExactVisitor)
    }
}
