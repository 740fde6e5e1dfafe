//! Computable metric spaces: ideal points, fast approximations of points,
//! ideal balls and enumerated open sets.

use std::fmt;
use std::sync::{Arc, Mutex};

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Interval, Rational};

/// The spaces the library knows how to compute in.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpaceDescriptor {
    /// `[0, 1]` with `|x - y|`.
    UnitInterval,
    /// `[0, 1)` with the wrap-around metric.
    Circle,
    /// One-sided sequences over `alphabet` symbols, `d = 2^-i` where `i` is the
    /// first index (from 0) at which the sequences differ.
    Cantor { alphabet: u8 },
    /// Binary product with the max metric.
    Product(Box<SpaceDescriptor>, Box<SpaceDescriptor>),
}

impl SpaceDescriptor {
    pub fn cantor(alphabet: u8) -> Self {
        assert!(alphabet >= 2, "alphabet must have at least two symbols");
        SpaceDescriptor::Cantor { alphabet }
    }

    pub fn product(a: SpaceDescriptor, b: SpaceDescriptor) -> Self {
        SpaceDescriptor::Product(Box::new(a), Box::new(b))
    }

    pub fn is_interval_like(&self) -> bool {
        matches!(self, SpaceDescriptor::UnitInterval | SpaceDescriptor::Circle)
    }

    pub fn alphabet(&self) -> Option<u8> {
        match self {
            SpaceDescriptor::Cantor { alphabet } => Some(*alphabet),
            _ => None,
        }
    }

    pub fn check_same(&self, other: &SpaceDescriptor) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::SpaceMismatch { left: format!("{self:?}"), right: format!("{other:?}") })
        }
    }

    /// Decodes an ideal-point index.
    pub fn decode(&self, index: &BigUint) -> IdealPoint {
        match self {
            SpaceDescriptor::UnitInterval | SpaceDescriptor::Circle => {
                let (m, l) = unpair(index);
                let l = l.to_u64().unwrap_or(u64::MAX).min(1 << 20);
                let cap = BigUint::one() << l;
                let m = if matches!(self, SpaceDescriptor::Circle) { m % &cap } else { m.min(cap) };
                IdealPoint::Dyadic(Rational::dyadic(BigInt::from(m), l))
            }
            SpaceDescriptor::Cantor { alphabet } => {
                let k = BigUint::from(*alphabet);
                let mut w = Vec::new();
                let mut i = index.clone();
                while !i.is_zero() {
                    w.push((&i % &k).to_u8().unwrap());
                    i /= &k;
                }
                IdealPoint::Word(w)
            }
            SpaceDescriptor::Product(a, b) => {
                let (i, j) = unpair(index);
                IdealPoint::Pair(Box::new(a.decode(&i)), Box::new(b.decode(&j)))
            }
        }
    }

    /// Exact distance between two ideal points.
    pub fn ideal_dist(&self, a: &IdealPoint, b: &IdealPoint) -> Rational {
        match (self, a, b) {
            (SpaceDescriptor::UnitInterval, IdealPoint::Dyadic(x), IdealPoint::Dyadic(y)) => (x - y).abs(),
            (SpaceDescriptor::Circle, IdealPoint::Dyadic(x), IdealPoint::Dyadic(y)) => circle_dist(x, y),
            (SpaceDescriptor::Cantor { .. }, IdealPoint::Word(u), IdealPoint::Word(v)) => {
                match first_difference(u, v) {
                    None => Rational::zero(),
                    Some(i) => Rational::pow2(-(i as i64)),
                }
            }
            (SpaceDescriptor::Product(s, t), IdealPoint::Pair(a1, a2), IdealPoint::Pair(b1, b2)) => {
                let d1 = s.ideal_dist(a1, b1);
                let d2 = t.ideal_dist(a2, b2);
                Rational::max_of(&d1, &d2).clone()
            }
            _ => panic!("ideal point does not belong to {self:?}"),
        }
    }

    /// Distance between indexed ideal points as an interval of width at most
    /// `2^-precision`. Ideal distances are exact, so the interval is a point.
    pub fn ideal_dist_indexed(&self, i: &BigUint, j: &BigUint, _precision: u32) -> Interval {
        Interval::point(self.ideal_dist(&self.decode(i), &self.decode(j)))
    }

    /// Diameter bound: every distance is at most this value.
    pub fn diameter(&self) -> Rational {
        match self {
            SpaceDescriptor::UnitInterval => Rational::one(),
            SpaceDescriptor::Circle => Rational::pow2(-1),
            SpaceDescriptor::Cantor { .. } => Rational::one(),
            SpaceDescriptor::Product(a, b) => Rational::max_of(&a.diameter(), &b.diameter()).clone(),
        }
    }
}

impl fmt::Debug for SpaceDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceDescriptor::UnitInterval => write!(f, "UnitInterval"),
            SpaceDescriptor::Circle => write!(f, "Circle"),
            SpaceDescriptor::Cantor { alphabet } => write!(f, "Cantor({alphabet})"),
            SpaceDescriptor::Product(a, b) => write!(f, "Product({a:?}, {b:?})"),
        }
    }
}

/// `min(|x - y| mod 1, 1 - |x - y| mod 1)`.
pub fn circle_dist(x: &Rational, y: &Rational) -> Rational {
    let d = (x - y).fract();
    let e = Rational::one() - &d;
    Rational::min_of(&d, &e).clone()
}

/// First index where two ultimately-zero words differ, padding with zeros.
pub fn first_difference(u: &[u8], v: &[u8]) -> Option<usize> {
    let n = u.len().max(v.len());
    (0..n).find(|&i| u.get(i).copied().unwrap_or(0) != v.get(i).copied().unwrap_or(0))
}

/// Cantor pairing `⟨a, b⟩ = (a+b)(a+b+1)/2 + b`.
pub fn pair(a: &BigUint, b: &BigUint) -> BigUint {
    let s = a + b;
    (&s * (&s + 1u32)) / 2u32 + b
}

pub fn unpair(z: &BigUint) -> (BigUint, BigUint) {
    let w = ((z * 8u32 + 1u32).sqrt() - 1u32) / 2u32;
    let t = (&w * (&w + 1u32)) / 2u32;
    let b = z - &t;
    let a = &w - &b;
    (a, b)
}

/// A point of the countable dense set: a dyadic rational, an ultimately-zero
/// word (trailing zeros implicit), or a pair.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IdealPoint {
    Dyadic(Rational),
    Word(Vec<u8>),
    Pair(Box<IdealPoint>, Box<IdealPoint>),
}

impl IdealPoint {
    /// Index under the numbering of `space`.
    pub fn index(&self, space: &SpaceDescriptor) -> BigUint {
        match (self, space) {
            (IdealPoint::Dyadic(q), _) => {
                let l = q.dyadic_exponent().expect("ideal points of interval spaces are dyadic");
                let m = q.numer().to_biguint().expect("ideal points are non-negative");
                pair(&m, &BigUint::from(l))
            }
            (IdealPoint::Word(w), SpaceDescriptor::Cantor { alphabet }) => {
                let k = BigUint::from(*alphabet);
                w.iter().rev().fold(BigUint::zero(), |acc, &d| acc * &k + BigUint::from(d))
            }
            (IdealPoint::Pair(a, b), SpaceDescriptor::Product(s, t)) => pair(&a.index(s), &b.index(t)),
            _ => panic!("ideal point does not belong to {space:?}"),
        }
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            IdealPoint::Dyadic(q) => Some(q),
            _ => None,
        }
    }

    pub fn as_word(&self) -> Option<&[u8]> {
        match self {
            IdealPoint::Word(w) => Some(w),
            _ => None,
        }
    }
}

impl fmt::Debug for IdealPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IdealPoint::Dyadic(q) => write!(f, "{q}"),
            IdealPoint::Word(w) => {
                for d in w {
                    write!(f, "{d}")?;
                }
                write!(f, "0…")
            }
            IdealPoint::Pair(a, b) => write!(f, "({a:?}, {b:?})"),
        }
    }
}

/// Open ball `B(center, radius)` around an ideal point.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IdealBall {
    pub center: IdealPoint,
    pub radius: Rational,
}

impl IdealBall {
    pub fn new(center: IdealPoint, radius: Rational) -> Result<Self> {
        if !radius.is_positive() {
            return Err(Error::Domain(format!("ball radius must be positive, got {radius}")));
        }
        Ok(IdealBall { center, radius })
    }

    /// Convenience constructor for interval spaces.
    pub fn dyadic(center: Rational, radius: Rational) -> Self {
        assert!(center.dyadic_exponent().is_some(), "center {center} is not dyadic");
        IdealBall::new(IdealPoint::Dyadic(center), radius).unwrap()
    }

    pub fn contains_ideal(&self, space: &SpaceDescriptor, s: &IdealPoint) -> bool {
        space.ideal_dist(&self.center, s) < self.radius
    }
}

impl fmt::Debug for IdealBall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "B({:?}, {})", self.center, self.radius)
    }
}

/// Exactly known values, used to bypass approximation where possible.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExactValue {
    Rational(Rational),
    /// The eventually periodic sequence `prefix · cycle^∞`.
    Periodic {
        prefix: Vec<u8>,
        cycle: Vec<u8>,
    },
    Pair(Box<ExactValue>, Box<ExactValue>),
}

impl ExactValue {
    pub fn symbol(&self, i: usize) -> Option<u8> {
        match self {
            ExactValue::Periodic { prefix, cycle } => {
                Some(if i < prefix.len() { prefix[i] } else { cycle[(i - prefix.len()) % cycle.len()] })
            }
            _ => None,
        }
    }
}

type Approximator = dyn Fn(u32) -> IdealPoint + Send + Sync;

/// A computable point: an oracle `n ↦ s_{i_n}` with `d(s_{i_n}, s_{i_{n+1}}) < 2^-n`.
#[derive(Clone)]
pub struct Point {
    space: SpaceDescriptor,
    approx: Arc<Approximator>,
    exact: Option<ExactValue>,
    label: String,
}

impl Point {
    /// Builds a point from a fast approximator; the caller vouches for fastness.
    pub fn from_fast_sequence(
        space: SpaceDescriptor,
        label: impl Into<String>,
        f: impl Fn(u32) -> IdealPoint + Send + Sync + 'static,
    ) -> Self {
        Point { space, approx: Arc::new(f), exact: None, label: label.into() }
    }

    /// A rational point of the unit interval or circle (reduced mod 1 on the
    /// circle). Approximants are the nearest multiples of `2^-(n+1)`.
    pub fn rational(space: SpaceDescriptor, x: Rational) -> Result<Self> {
        let x = match space {
            SpaceDescriptor::Circle => x.fract(),
            SpaceDescriptor::UnitInterval => {
                if x.is_negative() || x > Rational::one() {
                    return Err(Error::Domain(format!("{x} is outside [0, 1]")));
                }
                x
            }
            _ => return Err(Error::Domain(format!("rational point in {space:?}"))),
        };
        let label = x.to_string();
        let circle = matches!(space, SpaceDescriptor::Circle);
        let y = x.clone();
        let f = move |n: u32| {
            let r = round_nearest(&y, n as u64 + 1);
            IdealPoint::Dyadic(if circle { r.fract() } else { r })
        };
        Ok(Point { space, approx: Arc::new(f), exact: Some(ExactValue::Rational(x)), label })
    }

    /// A point of an interval space given by a real oracle `g` with
    /// `|g(n) - x| ≤ 2^-n`.
    pub fn from_real_oracle(
        space: SpaceDescriptor,
        label: impl Into<String>,
        g: impl Fn(u32) -> Rational + Send + Sync + 'static,
    ) -> Self {
        let circle = matches!(space, SpaceDescriptor::Circle);
        let f = move |n: u32| {
            let r = round_nearest(&g(n + 3), n as u64 + 2);
            let r = if circle {
                r.fract()
            } else {
                Rational::max_of(&Rational::zero(), Rational::min_of(&r, &Rational::one())).clone()
            };
            IdealPoint::Dyadic(r)
        };
        Point { space, approx: Arc::new(f), exact: None, label: label.into() }
    }

    /// A pseudo-random point whose binary digits come from a seeded ChaCha8
    /// stream; on the Cantor space, symbols are drawn uniformly.
    pub fn random(space: SpaceDescriptor, seed: u64) -> Result<Self> {
        let label = format!("random(seed={seed})");
        match space {
            SpaceDescriptor::UnitInterval | SpaceDescriptor::Circle => {
                let bits = DigitStream::new(seed, 2);
                let f = move |n: u32| {
                    let d = bits.prefix(n as usize + 1);
                    let mut m = BigInt::zero();
                    for b in d {
                        m = (m << 1) + BigInt::from(b);
                    }
                    IdealPoint::Dyadic(Rational::dyadic(m, n as u64 + 1))
                };
                Ok(Point { space, approx: Arc::new(f), exact: None, label })
            }
            SpaceDescriptor::Cantor { alphabet } => {
                let digits = DigitStream::new(seed, alphabet);
                Ok(Point::sequence(alphabet, label, move |i| digits.get(i)))
            }
            SpaceDescriptor::Product(_, _) => Err(Error::Unsupported("random points in product spaces".into())),
        }
    }

    /// A sequence point given symbol by symbol. The approximant at precision
    /// `n` is the prefix of length `n + 1`.
    pub fn sequence(alphabet: u8, label: impl Into<String>, sym: impl Fn(usize) -> u8 + Send + Sync + 'static) -> Self {
        let f = move |n: u32| IdealPoint::Word(trim_zeros((0..=n as usize).map(&sym).collect()));
        Point { space: SpaceDescriptor::cantor(alphabet), approx: Arc::new(f), exact: None, label: label.into() }
    }

    /// The eventually periodic sequence `prefix · cycle^∞`.
    pub fn periodic(alphabet: u8, prefix: Vec<u8>, cycle: Vec<u8>) -> Result<Self> {
        if cycle.is_empty() {
            return Err(Error::Domain("empty cycle".into()));
        }
        if prefix.iter().chain(cycle.iter()).any(|&d| d >= alphabet) {
            return Err(Error::Domain(format!("symbol outside alphabet of size {alphabet}")));
        }
        let exact = ExactValue::Periodic { prefix: prefix.clone(), cycle: cycle.clone() };
        let label = format!(
            "{}({})",
            prefix.iter().map(|d| d.to_string()).collect::<String>(),
            cycle.iter().map(|d| d.to_string()).collect::<String>()
        );
        let e = exact.clone();
        let mut p = Point::sequence(alphabet, label, move |i| e.symbol(i).unwrap());
        p.exact = Some(exact);
        Ok(p)
    }

    /// A finite word followed by zeros.
    pub fn word(alphabet: u8, w: Vec<u8>) -> Result<Self> {
        Point::periodic(alphabet, w, vec![0])
    }

    pub fn pair(a: Point, b: Point) -> Self {
        let space = SpaceDescriptor::product(a.space.clone(), b.space.clone());
        let exact = match (&a.exact, &b.exact) {
            (Some(x), Some(y)) => Some(ExactValue::Pair(Box::new(x.clone()), Box::new(y.clone()))),
            _ => None,
        };
        let label = format!("({}, {})", a.label, b.label);
        let (fa, fb) = (a.approx.clone(), b.approx.clone());
        let f = move |n: u32| IdealPoint::Pair(Box::new(fa(n)), Box::new(fb(n)));
        Point { space, approx: Arc::new(f), exact, label }
    }

    /// `√2 - 1` on the circle, from continued-fraction convergents of `[0; 2, 2, 2, …]`.
    pub fn sqrt2_minus_1(space: SpaceDescriptor) -> Self {
        Point::from_real_oracle(space, "sqrt2-1", sqrt2_minus_1_approx)
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn exact(&self) -> Option<&ExactValue> {
        self.exact.as_ref()
    }

    pub fn exact_rational(&self) -> Option<&Rational> {
        match &self.exact {
            Some(ExactValue::Rational(q)) => Some(q),
            _ => None,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// The `n`-th approximant `s_{i_n}`.
    pub fn approximant(&self, n: u32) -> IdealPoint {
        (self.approx)(n)
    }

    /// The `n`-th approximant of an interval-space point as a rational.
    pub fn approx_rational(&self, n: u32) -> Rational {
        match self.approximant(n) {
            IdealPoint::Dyadic(q) => q,
            other => panic!("expected a dyadic approximant, got {other:?}"),
        }
    }

    /// Symbol `i` of a sequence point.
    pub fn symbol(&self, i: usize) -> u8 {
        if let Some(s) = self.exact.as_ref().and_then(|e| e.symbol(i)) {
            return s;
        }
        match self.approximant(i as u32) {
            IdealPoint::Word(w) => w.get(i).copied().unwrap_or(0),
            other => panic!("expected a word approximant, got {other:?}"),
        }
    }

    /// First `len` symbols of a sequence point.
    pub fn prefix(&self, len: usize) -> Vec<u8> {
        if len == 0 {
            return Vec::new();
        }
        if let Some(e) = &self.exact {
            if let Some(v) = (0..len).map(|i| e.symbol(i)).collect::<Option<Vec<u8>>>() {
                return v;
            }
        }
        match self.approximant(len as u32 - 1) {
            IdealPoint::Word(mut w) => {
                w.resize(len, 0);
                w
            }
            other => panic!("expected a word approximant, got {other:?}"),
        }
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Point({:?}, {})", self.space, self.label)
    }
}

/// Nearest multiple of `2^-bits`, ties rounded up.
pub fn round_nearest(x: &Rational, bits: u64) -> Rational {
    (x + &Rational::pow2(-(bits as i64) - 1)).round_down(bits)
}

fn trim_zeros(mut w: Vec<u8>) -> Vec<u8> {
    while w.last() == Some(&0) {
        w.pop();
    }
    w
}

/// Rational within `2^-n` of `√2 - 1`: the first convergent `p/q` of
/// `[0; 2, 2, …]` with `1/(q·q') ≤ 2^-n`, `q'` the next denominator.
pub fn sqrt2_minus_1_approx(n: u32) -> Rational {
    let (mut p0, mut q0) = (BigInt::one(), BigInt::zero());
    let (mut p1, mut q1) = (BigInt::zero(), BigInt::one());
    let bound = BigInt::one() << n;
    loop {
        let p2 = &p1 * 2 + &p0;
        let q2 = &q1 * 2 + &q0;
        if &q1 * &q2 >= bound {
            return Rational::new(p1, q1);
        }
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
    }
}

/// Pure, lazily cached stream of seeded digits in `0..base`.
#[derive(Clone)]
struct DigitStream {
    seed: u64,
    base: u8,
    cache: Arc<Mutex<Vec<u8>>>,
}

impl DigitStream {
    fn new(seed: u64, base: u8) -> Self {
        DigitStream { seed, base, cache: Arc::new(Mutex::new(Vec::new())) }
    }

    fn fill(&self, len: usize) -> std::sync::MutexGuard<'_, Vec<u8>> {
        let mut c = self.cache.lock().unwrap();
        if c.len() < len {
            // Regenerate from the start so the stream is independent of call order.
            let target = len.max(2 * c.len()).max(256);
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            c.clear();
            let base = self.base as u32;
            let zone = u32::MAX - u32::MAX % base;
            while c.len() < target {
                let mut v = rng.next_u32();
                if base == 2 {
                    for _ in 0..32 {
                        c.push((v & 1) as u8);
                        v >>= 1;
                    }
                } else {
                    while v >= zone {
                        v = rng.next_u32();
                    }
                    c.push((v % base) as u8);
                }
            }
        }
        c
    }

    fn get(&self, i: usize) -> u8 {
        self.fill(i + 1)[i]
    }

    fn prefix(&self, len: usize) -> Vec<u8> {
        self.fill(len)[..len].to_vec()
    }
}

/// `d(x, y)` to within `2^-n`.
pub fn dist(x: &Point, y: &Point, n: u32) -> Result<Interval> {
    x.space.check_same(&y.space)?;
    if let (Some(a), Some(b)) = (x.exact_rational(), y.exact_rational()) {
        let d = match x.space {
            SpaceDescriptor::Circle => circle_dist(a, b),
            _ => (a - b).abs(),
        };
        return Ok(Interval::point(d));
    }
    let m = n + 3;
    let d = x.space.ideal_dist(&x.approximant(m), &y.approximant(m));
    let slack = Rational::pow2(-(m as i64 - 2));
    let lo = Rational::max_of(&(&d - &slack), &Rational::zero()).clone();
    let hi = Rational::min_of(&(&d + &slack), &x.space.diameter()).clone();
    Interval::new(lo, hi)
}

/// The ball `B(s_{i_n}, 2^-(n-1))`, which contains `x`.
pub fn approx(x: &Point, n: u32) -> IdealBall {
    IdealBall { center: x.approximant(n), radius: Rational::pow2(1 - n as i64) }
}

type Enumerator = dyn Fn(u32) -> Vec<IdealBall> + Send + Sync;

/// An r.e. open set: budget `m ↦` a finite list of ideal balls, nested in `m`.
#[derive(Clone)]
pub struct EnumeratedOpenSet {
    space: SpaceDescriptor,
    enumerate: Arc<Enumerator>,
}

impl EnumeratedOpenSet {
    pub fn from_fn(space: SpaceDescriptor, f: impl Fn(u32) -> Vec<IdealBall> + Send + Sync + 'static) -> Self {
        EnumeratedOpenSet { space, enumerate: Arc::new(f) }
    }

    /// A finite union, listed in full at every budget.
    pub fn finite(space: SpaceDescriptor, balls: Vec<IdealBall>) -> Self {
        EnumeratedOpenSet::from_fn(space, move |_| balls.clone())
    }

    pub fn empty(space: SpaceDescriptor) -> Self {
        EnumeratedOpenSet::finite(space, Vec::new())
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn balls(&self, m: u32) -> Vec<IdealBall> {
        (self.enumerate)(m)
    }
}

impl fmt::Debug for EnumeratedOpenSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EnumeratedOpenSet({:?}, {:?}…)", self.space, self.balls(0))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Membership {
    Inside(IdealBall),
    Unknown,
}

/// Semi-decides `x ∈ U` within budget `m`: succeeds when some ball `B(s, q)`
/// listed by `U(m)` satisfies `d(c_j, s) + r_j ≤ q` for an approximation ball
/// `B(c_j, r_j)` of `x` with `j ≤ m`.
pub fn member_semidecide(x: &Point, u: &EnumeratedOpenSet, m: u32) -> Result<Membership> {
    x.space.check_same(&u.space)?;
    let balls = u.balls(m);
    for j in 0..=m {
        let a = approx(x, j);
        for b in &balls {
            if &x.space.ideal_dist(&a.center, &b.center) + &a.radius <= b.radius {
                return Ok(Membership::Inside(b.clone()));
            }
        }
    }
    Ok(Membership::Unknown)
}
