use std::fmt;

use serde::{Deserialize, Serialize};

use super::Rational;
use crate::error::{Error, Result};

/// Closed interval `[lo, hi]` with exact rational endpoints.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    lo: Rational,
    hi: Rational,
}

/// Binary operations supported by [`iv_arith`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntervalOp {
    Add,
    Sub,
    Mul,
    /// `|x - y|` on the real line.
    Dist,
    Min,
    Max,
}

impl Interval {
    pub fn new(lo: Rational, hi: Rational) -> Result<Self> {
        if lo > hi {
            return Err(Error::Domain(format!("empty interval [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    /// Builds `[min(a,b), max(a,b)]`.
    pub fn spanning(a: Rational, b: Rational) -> Self {
        if a <= b {
            Interval { lo: a, hi: b }
        } else {
            Interval { lo: b, hi: a }
        }
    }

    pub fn point(x: Rational) -> Self {
        Interval { lo: x.clone(), hi: x }
    }

    /// `[c - r, c + r]`.
    pub fn ball(c: &Rational, r: &Rational) -> Self {
        Interval { lo: c - r, hi: c + r }
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn into_bounds(self) -> (Rational, Rational) {
        (self.lo, self.hi)
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> Rational {
        (&self.lo + &self.hi) * Rational::pow2(-1)
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: &Rational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    /// `self ⊆ other`.
    pub fn is_subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn intersects(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: Rational::min_of(&self.lo, &other.lo).clone(),
            hi: Rational::max_of(&self.hi, &other.hi).clone(),
        }
    }

    pub fn add(&self, o: &Interval) -> Interval {
        Interval { lo: &self.lo + &o.lo, hi: &self.hi + &o.hi }
    }

    pub fn sub(&self, o: &Interval) -> Interval {
        Interval { lo: &self.lo - &o.hi, hi: &self.hi - &o.lo }
    }

    pub fn mul(&self, o: &Interval) -> Interval {
        let c = [&self.lo * &o.lo, &self.lo * &o.hi, &self.hi * &o.lo, &self.hi * &o.hi];
        let lo = c.iter().min().unwrap().clone();
        let hi = c.iter().max().unwrap().clone();
        Interval { lo, hi }
    }

    pub fn abs(&self) -> Interval {
        let zero = Rational::zero();
        if self.lo >= zero {
            self.clone()
        } else if self.hi <= zero {
            Interval { lo: -&self.hi, hi: -&self.lo }
        } else {
            let m = Rational::max_of(&self.hi, &-&self.lo).clone();
            Interval { lo: zero, hi: m }
        }
    }

    pub fn dist(&self, o: &Interval) -> Interval {
        self.sub(o).abs()
    }

    pub fn min(&self, o: &Interval) -> Interval {
        Interval { lo: Rational::min_of(&self.lo, &o.lo).clone(), hi: Rational::min_of(&self.hi, &o.hi).clone() }
    }

    pub fn max(&self, o: &Interval) -> Interval {
        Interval { lo: Rational::max_of(&self.lo, &o.lo).clone(), hi: Rational::max_of(&self.hi, &o.hi).clone() }
    }

    pub fn add_scalar(&self, c: &Rational) -> Interval {
        Interval { lo: &self.lo + c, hi: &self.hi + c }
    }

    pub fn scale(&self, c: &Rational) -> Interval {
        Interval::spanning(&self.lo * c, &self.hi * c)
    }

    /// Outward rounding of both endpoints to multiples of `2^-bits`.
    pub fn round_outward(&self, bits: u64) -> Interval {
        Interval { lo: self.lo.round_down(bits), hi: self.hi.round_up(bits) }
    }

    pub fn to_f64_pair(&self) -> (f64, f64) {
        (self.lo.to_f64(), self.hi.to_f64())
    }
}

/// Applies `op` to two intervals, returning an enclosure of
/// `{op(x, y) : x ∈ a, y ∈ b}`. Exact for all supported operations.
pub fn iv_arith(a: &Interval, b: &Interval, op: IntervalOp) -> Interval {
    match op {
        IntervalOp::Add => a.add(b),
        IntervalOp::Sub => a.sub(b),
        IntervalOp::Mul => a.mul(b),
        IntervalOp::Dist => a.dist(b),
        IntervalOp::Min => a.min(b),
        IntervalOp::Max => a.max(b),
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::q;
    use proptest::prelude::*;

    fn iv(a: (i64, i64), b: (i64, i64)) -> Interval {
        Interval::new(q(a.0, a.1), q(b.0, b.1)).unwrap()
    }

    #[test]
    fn spec_examples() {
        let a = Interval::point(q(1, 4));
        let b = Interval::point(q(1, 2));
        assert_eq!(iv_arith(&a, &b, IntervalOp::Add), Interval::point(q(3, 4)));
        let u = iv((0, 1), (1, 1));
        assert_eq!(iv_arith(&u, &u, IntervalOp::Mul), u);
        let c = iv((1, 3), (1, 2));
        let d = iv((0, 1), (1, 4));
        assert_eq!(iv_arith(&c, &d, IntervalOp::Dist), iv((1, 12), (1, 2)));
    }

    #[test]
    fn dist_brute_force_corners() {
        // Oracle: |x-y| over a fine grid of both intervals.
        let a = iv((-1, 2), (1, 3));
        let b = iv((1, 5), (3, 4));
        let d = iv_arith(&a, &b, IntervalOp::Dist);
        let mut lo = f64::INFINITY;
        let mut hi = 0f64;
        for i in 0..=60 {
            for j in 0..=60 {
                let x = -0.5 + (1.0 / 3.0 + 0.5) * i as f64 / 60.0;
                let y = 0.2 + (0.75 - 0.2) * j as f64 / 60.0;
                lo = lo.min((x - y).abs());
                hi = hi.max((x - y).abs());
            }
        }
        assert!((d.lo().to_f64() - lo).abs() < 1e-9);
        assert!((d.hi().to_f64() - hi).abs() < 1e-9);
    }

    #[test]
    fn rejects_inverted() {
        assert!(Interval::new(q(1, 2), q(1, 3)).is_err());
    }

    fn arb_iv() -> impl Strategy<Value = Interval> {
        (-50i64..50, 0i64..30, 1i64..16).prop_map(|(a, w, d)| Interval::new(q(a, d), q(a + w, d)).unwrap())
    }

    fn ops() -> impl Strategy<Value = IntervalOp> {
        prop_oneof![
            Just(IntervalOp::Add),
            Just(IntervalOp::Sub),
            Just(IntervalOp::Mul),
            Just(IntervalOp::Dist),
            Just(IntervalOp::Min),
            Just(IntervalOp::Max)
        ]
    }

    proptest! {
        #[test]
        fn inclusion_monotone(a in arb_iv(), b in arb_iv(), ga in 0i64..5, gb in 0i64..5, op in ops()) {
            let a2 = Interval::new(a.lo() - &q(ga, 7), a.hi() + &q(ga, 5)).unwrap();
            let b2 = Interval::new(b.lo() - &q(gb, 3), b.hi() + &q(gb, 11)).unwrap();
            prop_assert!(iv_arith(&a, &b, op).is_subset_of(&iv_arith(&a2, &b2, op)));
        }

        #[test]
        fn exact_on_points(x in -40i64..40, dx in 1i64..9, y in -40i64..40, dy in 1i64..9) {
            let (x, y) = (q(x, dx), q(y, dy));
            let a = Interval::point(x.clone());
            let b = Interval::point(y.clone());
            prop_assert_eq!(iv_arith(&a, &b, IntervalOp::Add), Interval::point(&x + &y));
            prop_assert_eq!(iv_arith(&a, &b, IntervalOp::Sub), Interval::point(&x - &y));
            prop_assert_eq!(iv_arith(&a, &b, IntervalOp::Mul), Interval::point(&x * &y));
        }

        #[test]
        fn contains_pointwise_results(a in arb_iv(), b in arb_iv(), s in 0u32..=4, t in 0u32..=4, op in ops()) {
            let x = a.lo() + &(a.width() * q(s as i64, 4));
            let y = b.lo() + &(b.width() * q(t as i64, 4));
            let v = match op {
                IntervalOp::Add => &x + &y,
                IntervalOp::Sub => &x - &y,
                IntervalOp::Mul => &x * &y,
                IntervalOp::Dist => (&x - &y).abs(),
                IntervalOp::Min => Rational::min_of(&x, &y).clone(),
                IntervalOp::Max => Rational::max_of(&x, &y).clone(),
            };
            prop_assert!(iv_arith(&a, &b, op).contains(&v));
        }
    }
}
