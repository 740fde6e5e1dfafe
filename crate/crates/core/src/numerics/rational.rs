use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// An exact rational number in lowest terms with a positive denominator.
///
/// Dyadic values (denominator a power of two) take shift-based fast paths for
/// addition, multiplication and comparison. Orbits of expanding maps carry
/// dyadics with tens of thousands of bits, where gcd normalization would
/// dominate the run time.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Rational(BigRational);

fn dyadic_exp(den: &BigInt) -> Option<u64> {
    let tz = den.trailing_zeros()?;
    if den.bits() == tz + 1 {
        Some(tz)
    } else {
        None
    }
}

impl Rational {
    pub fn new(numer: impl Into<BigInt>, denom: impl Into<BigInt>) -> Self {
        let d = denom.into();
        assert!(!d.is_zero(), "zero denominator");
        Rational(BigRational::new(numer.into(), d))
    }

    pub fn from_integer(n: impl Into<BigInt>) -> Self {
        Rational(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    /// `2^exp` for any signed exponent.
    pub fn pow2(exp: i64) -> Self {
        if exp >= 0 {
            Rational(BigRational::from_integer(BigInt::one() << exp as u64))
        } else {
            Rational(BigRational::new_raw(BigInt::one(), BigInt::one() << (-exp) as u64))
        }
    }

    /// `mantissa / 2^exp`, reduced.
    pub fn dyadic(mantissa: impl Into<BigInt>, exp: u64) -> Self {
        Self::from_dyadic_parts(mantissa.into(), exp)
    }

    fn from_dyadic_parts(n: BigInt, e: u64) -> Self {
        if n.is_zero() {
            return Self::zero();
        }
        let tz = n.trailing_zeros().unwrap_or(0).min(e);
        let n = n >> tz;
        Rational(BigRational::new_raw(n, BigInt::one() << (e - tz)))
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn inner(&self) -> &BigRational {
        &self.0
    }

    /// Exponent `e` such that the denominator is `2^e`, if the value is dyadic.
    pub fn dyadic_exponent(&self) -> Option<u64> {
        dyadic_exp(self.0.denom())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn abs(&self) -> Self {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    pub fn floor(&self) -> BigInt {
        match self.dyadic_exponent() {
            Some(e) => self.numer() >> e,
            None => self.0.numer().div_floor(self.0.denom()),
        }
    }

    pub fn ceil(&self) -> BigInt {
        let f = self.floor();
        if self.is_integer() {
            f
        } else {
            f + 1
        }
    }

    /// `self - floor(self)`, in `[0, 1)`.
    pub fn fract(&self) -> Self {
        self - &Rational::from_integer(self.floor())
    }

    /// Largest multiple of `2^-bits` not exceeding `self`.
    pub fn round_down(&self, bits: u64) -> Self {
        match self.dyadic_exponent() {
            Some(e) if e <= bits => self.clone(),
            _ => Self::from_dyadic_parts((self * &Rational::pow2(bits as i64)).floor(), bits),
        }
    }

    /// Smallest multiple of `2^-bits` not below `self`.
    pub fn round_up(&self, bits: u64) -> Self {
        match self.dyadic_exponent() {
            Some(e) if e <= bits => self.clone(),
            _ => Self::from_dyadic_parts((self * &Rational::pow2(bits as i64)).ceil(), bits),
        }
    }

    pub fn recip(&self) -> Self {
        assert!(!self.is_zero(), "reciprocal of zero");
        Rational(self.0.recip())
    }

    pub fn to_f64(&self) -> f64 {
        if let Some(f) = self.0.to_f64() {
            if f.is_finite() {
                return f;
            }
        }
        // Huge numerator and denominator: scale both down first.
        let shift = self.denom().bits().saturating_sub(60);
        let n = (self.numer() >> shift).to_f64().unwrap_or(f64::NAN);
        let d = (self.denom() >> shift).to_f64().unwrap_or(f64::NAN);
        n / d
    }

    /// Exact conversion of a finite `f64`.
    pub fn from_f64(x: f64) -> Option<Self> {
        BigRational::from_float(x).map(Rational)
    }

    /// Floor of `log2 |self|` for nonzero values.
    pub fn floor_log2(&self) -> i64 {
        assert!(!self.is_zero());
        let n = self.numer().abs();
        let d = self.denom();
        let mut m = n.bits() as i64 - d.bits() as i64;
        // 2^m <= n/d  <=>  n >= d*2^m
        let ge = |m: i64| {
            if m >= 0 {
                n >= (d.clone() << m as u64)
            } else {
                (n.clone() << (-m) as u64) >= *d
            }
        };
        if !ge(m) {
            m -= 1;
        }
        m
    }

    pub fn min_of<'a>(a: &'a Rational, b: &'a Rational) -> &'a Rational {
        if a <= b {
            a
        } else {
            b
        }
    }

    pub fn max_of<'a>(a: &'a Rational, b: &'a Rational) -> &'a Rational {
        if a >= b {
            a
        } else {
            b
        }
    }

    fn add_ref(&self, o: &Rational) -> Rational {
        if let (Some(ea), Some(eb)) = (self.dyadic_exponent(), o.dyadic_exponent()) {
            let e = ea.max(eb);
            let n = (self.numer() << (e - ea)) + (o.numer() << (e - eb));
            return Self::from_dyadic_parts(n, e);
        }
        Rational(&self.0 + &o.0)
    }

    fn mul_ref(&self, o: &Rational) -> Rational {
        if let (Some(ea), Some(eb)) = (self.dyadic_exponent(), o.dyadic_exponent()) {
            return Self::from_dyadic_parts(self.numer() * o.numer(), ea + eb);
        }
        Rational(&self.0 * &o.0)
    }

    fn div_ref(&self, o: &Rational) -> Rational {
        assert!(!o.is_zero(), "division by zero");
        if let (Some(ea), Some(eb)) = (self.dyadic_exponent(), o.dyadic_exponent()) {
            let m = o.numer().magnitude();
            if let Some(k) = m.trailing_zeros() {
                if m.bits() == k + 1 {
                    // o = ±2^(k - eb)
                    let n = if o.is_negative() { -self.numer() } else { self.numer().clone() };
                    let exp = ea as i64 + k as i64 - eb as i64;
                    return if exp >= 0 {
                        Self::from_dyadic_parts(n, exp as u64)
                    } else {
                        Self::from_dyadic_parts(n << (-exp) as u64, 0)
                    };
                }
            }
        }
        Rational(&self.0 / &o.0)
    }
}

impl Ord for Rational {
    fn cmp(&self, o: &Self) -> Ordering {
        if let (Some(ea), Some(eb)) = (self.dyadic_exponent(), o.dyadic_exponent()) {
            let e = ea.max(eb);
            return (self.numer() << (e - ea)).cmp(&(o.numer() << (e - eb)));
        }
        (self.numer() * o.denom()).cmp(&(o.numer() * self.denom()))
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $imp:ident) => {
        impl<'a> $tr<&'a Rational> for &'a Rational {
            type Output = Rational;
            fn $m(self, o: &'a Rational) -> Rational {
                self.$imp(o)
            }
        }
        impl $tr<Rational> for Rational {
            type Output = Rational;
            fn $m(self, o: Rational) -> Rational {
                self.$imp(&o)
            }
        }
        impl<'a> $tr<&'a Rational> for Rational {
            type Output = Rational;
            fn $m(self, o: &'a Rational) -> Rational {
                self.$imp(o)
            }
        }
        impl<'a> $tr<Rational> for &'a Rational {
            type Output = Rational;
            fn $m(self, o: Rational) -> Rational {
                self.$imp(&o)
            }
        }
    };
}

impl Rational {
    fn sub_ref(&self, o: &Rational) -> Rational {
        self.add_ref(&-o)
    }
}

binop!(Add, add, add_ref);
binop!(Sub, sub, sub_ref);
binop!(Mul, mul, mul_ref);
binop!(Div, div, div_ref);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0.clone())
    }
}

impl std::iter::Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Self {
        iter.fold(Rational::zero(), |a, b| a + b)
    }
}

impl<'a> std::iter::Sum<&'a Rational> for Rational {
    fn sum<I: Iterator<Item = &'a Rational>>(iter: I) -> Self {
        iter.fold(Rational::zero(), |a, b| a + b)
    }
}

macro_rules! from_int {
    ($($t:ty),*) => {$(
        impl From<$t> for Rational {
            fn from(v: $t) -> Self { Rational::from_integer(BigInt::from(v)) }
        }
    )*};
}
from_int!(i32, i64, u32, u64, usize);

impl From<BigInt> for Rational {
    fn from(v: BigInt) -> Self {
        Rational::from_integer(v)
    }
}

impl From<BigRational> for Rational {
    fn from(v: BigRational) -> Self {
        Rational(v)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rational {
    type Err = Error;

    /// Accepts `a/b`, integers and finite decimals such as `0.25`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Domain(format!("not a rational: {s:?}"));
        if let Some((n, d)) = s.split_once('/') {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            return Ok(Rational::new(n, d));
        }
        if let Some((ip, fp)) = s.split_once('.') {
            if fp.is_empty() || !fp.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let neg = ip.starts_with('-');
            let ip = ip.trim_start_matches(['-', '+']);
            let whole: BigInt = if ip.is_empty() { BigInt::zero() } else { ip.parse().map_err(|_| bad())? };
            let frac: BigInt = fp.parse().map_err(|_| bad())?;
            let scale = BigInt::from(10u32).pow(fp.len() as u32);
            let v = Rational::new(whole * &scale + frac, scale);
            return Ok(if neg { -v } else { v });
        }
        let n: BigInt = s.parse().map_err(|_| bad())?;
        Ok(Rational::from_integer(n))
    }
}

impl serde::Serialize for Rational {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Rational {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Shorthand for `Rational::new(n, d)` on machine integers.
pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}
