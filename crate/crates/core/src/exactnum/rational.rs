use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Exact signed rational in lowest terms with a positive denominator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RationalNumber(BigRational);

impl RationalNumber {
    pub fn new(numerator: BigInt, denominator: BigInt) -> Result<Self> {
        if denominator.is_zero() {
            return Err(Error::InvalidInput("zero denominator".into()));
        }
        Ok(Self(BigRational::new(numerator, denominator)))
    }

    pub fn from_integer(n: impl Into<BigInt>) -> Self {
        Self(BigRational::from_integer(n.into()))
    }

    pub fn from_ratio(numerator: i64, denominator: i64) -> Result<Self> {
        Self::new(numerator.into(), denominator.into())
    }

    pub fn zero() -> Self {
        Self(BigRational::zero())
    }

    pub fn one() -> Self {
        Self(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn abs(&self) -> Self {
        Self(self.0.abs())
    }

    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::InvalidInput("reciprocal of zero".into()));
        }
        Ok(Self(self.0.recip()))
    }

    pub fn pow(&self, exp: i32) -> Self {
        Self(num_traits::Pow::pow(&self.0, exp))
    }

    pub fn as_ratio(&self) -> &BigRational {
        &self.0
    }

    pub fn into_ratio(self) -> BigRational {
        self.0
    }

    /// Numerator and denominator as `i64`, when both fit.
    pub fn to_i64_parts(&self) -> Option<(i64, i64)> {
        Some((self.numer().to_i64()?, self.denom().to_i64()?))
    }

    /// Lossy conversion for reporting only.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl From<BigRational> for RationalNumber {
    fn from(r: BigRational) -> Self {
        Self(r)
    }
}

impl From<i64> for RationalNumber {
    fn from(n: i64) -> Self {
        Self::from_integer(n)
    }
}

impl fmt::Display for RationalNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl fmt::Debug for RationalNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn parse_int(s: &str, signed: bool) -> Option<BigInt> {
    let digits = match s.strip_prefix(['-', '+']) {
        Some(rest) if signed => rest,
        Some(_) => return None,
        None => s,
    };
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    BigInt::from_str(s).ok()
}

impl FromStr for RationalNumber {
    type Err = Error;

    /// Accepts a decimal integer `n` or a fraction `a/b`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parsed = match s.split_once('/') {
            None => parse_int(s, true).map(|n| (n, BigInt::one())),
            Some((a, b)) => parse_int(a.trim(), true).zip(parse_int(b.trim(), false)),
        };
        match parsed {
            Some((_, d)) if d.is_zero() => {
                Err(Error::InvalidInput(format!("{s:?}: zero denominator")))
            }
            Some((n, d)) => Self::new(n, d),
            None => Err(Error::InvalidInput(format!(
                "{s:?} is not an integer or a fraction a/b; only rational inputs are supported \
                 (the multiplicative branch needs exact prime factorizations)"
            ))),
        }
    }
}

impl Serialize for RationalNumber {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RationalNumber {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<&RationalNumber> for &RationalNumber {
            type Output = RationalNumber;
            fn $method(self, rhs: &RationalNumber) -> RationalNumber {
                RationalNumber($trait::$method(&self.0, &rhs.0))
            }
        }
        impl $trait for RationalNumber {
            type Output = RationalNumber;
            fn $method(self, rhs: RationalNumber) -> RationalNumber {
                RationalNumber($trait::$method(self.0, rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

impl Neg for RationalNumber {
    type Output = RationalNumber;
    fn neg(self) -> RationalNumber {
        RationalNumber(-self.0)
    }
}

impl Neg for &RationalNumber {
    type Output = RationalNumber;
    fn neg(self) -> RationalNumber {
        RationalNumber(-&self.0)
    }
}

/// Least common multiple of the denominators.
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a RationalNumber>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, r| acc.lcm(r.denom()))
}

/// A finite set of distinct rationals, stored in ascending order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct NumberSet(Vec<RationalNumber>);

impl NumberSet {
    /// Rejects duplicates; order of `elements` is irrelevant.
    pub fn new(mut elements: Vec<RationalNumber>) -> Result<Self> {
        elements.sort_unstable();
        if let Some(w) = elements.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Duplicate(w[0].to_string()));
        }
        Ok(Self(elements))
    }

    /// Builds a set from values known to be distinct, sorting them.
    pub(crate) fn from_distinct(mut elements: Vec<RationalNumber>) -> Self {
        elements.sort_unstable();
        debug_assert!(elements.windows(2).all(|w| w[0] != w[1]));
        Self(elements)
    }

    pub fn from_integers(values: impl IntoIterator<Item = i64>) -> Result<Self> {
        Self::new(values.into_iter().map(RationalNumber::from).collect())
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[RationalNumber] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, RationalNumber> {
        self.0.iter()
    }

    pub fn into_vec(self) -> Vec<RationalNumber> {
        self.0
    }

    pub fn contains(&self, x: &RationalNumber) -> bool {
        self.0.binary_search(x).is_ok()
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(&RationalNumber::zero())
    }

    pub fn is_subset_of(&self, other: &NumberSet) -> bool {
        self.0.iter().all(|x| other.contains(x))
    }

    /// The set with the element at `index` removed.
    pub fn without(&self, index: usize) -> NumberSet {
        let mut v = self.0.clone();
        v.remove(index);
        NumberSet(v)
    }

    pub fn negated(&self) -> NumberSet {
        NumberSet::from_distinct(self.0.iter().map(|x| -x).collect())
    }
}

impl<'a> IntoIterator for &'a NumberSet {
    type Item = &'a RationalNumber;
    type IntoIter = std::slice::Iter<'a, RationalNumber>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}
