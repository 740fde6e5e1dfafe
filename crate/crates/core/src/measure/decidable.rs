use std::fmt;
use std::sync::Arc;

use super::{ComputableMeasure, Region};
use crate::error::{Error, Result};
use crate::numerics::{Interval, Rational};
use crate::space::{EnumeratedOpenSet, IdealBall, IdealPoint, SpaceDescriptor};

type Schedule = dyn Fn(u32) -> u32 + Send + Sync;

/// A set `A` with `U ⊆ A ⊆ X \ V` for disjoint r.e. open `U`, `V` with
/// `μ(U) + μ(V) = 1`. The witness schedule maps a precision `k` to the budget
/// by which the lower bounds of `μ(U) + μ(V)` exceed `1 - 2^-k`.
#[derive(Clone)]
pub struct AlmostDecidableSet {
    pub inside: EnumeratedOpenSet,
    pub outside: EnumeratedOpenSet,
    schedule: Arc<Schedule>,
}

impl AlmostDecidableSet {
    /// Uses the default schedule `k ↦ k + 40`.
    pub fn new(inside: EnumeratedOpenSet, outside: EnumeratedOpenSet) -> Result<Self> {
        Self::with_schedule(inside, outside, |k| k + 40)
    }

    pub fn with_schedule(
        inside: EnumeratedOpenSet,
        outside: EnumeratedOpenSet,
        schedule: impl Fn(u32) -> u32 + Send + Sync + 'static,
    ) -> Result<Self> {
        inside.space().check_same(outside.space())?;
        Ok(AlmostDecidableSet { inside, outside, schedule: Arc::new(schedule) })
    }

    /// The open interval `(a, b)` of `[0, 1]` or the circle with dyadic
    /// endpoints; the outside is the open complement of `[a, b]`.
    pub fn interval(space: SpaceDescriptor, a: Rational, b: Rational) -> Result<Self> {
        if a >= b || &b - &a > Rational::one() {
            return Err(Error::Domain(format!("bad interval ({a}, {b})")));
        }
        let half = Rational::pow2(-1);
        let inside = vec![IdealBall::dyadic((&a + &b) * half.clone(), (&b - &a) * half.clone())];
        let gap = Rational::one() - (&b - &a);
        let outside = match space {
            SpaceDescriptor::Circle if gap.is_positive() => {
                let c = (&b + &(&gap * &half)).fract();
                vec![IdealBall::dyadic(c, &gap * &half)]
            }
            SpaceDescriptor::Circle => vec![],
            _ => {
                let mut v = Vec::new();
                if a.is_positive() {
                    // (-a, a) ∩ [0, 1] = [0, a)
                    v.push(IdealBall::dyadic(Rational::zero(), a.clone()));
                }
                if b < Rational::one() {
                    v.push(IdealBall::dyadic(Rational::one(), Rational::one() - &b));
                }
                v
            }
        };
        AlmostDecidableSet::new(
            EnumeratedOpenSet::finite(space.clone(), inside),
            EnumeratedOpenSet::finite(space, outside),
        )
    }

    /// The cylinder `[w]`, decided exactly by its first `|w|` symbols.
    pub fn cylinder(alphabet: u8, w: &[u8]) -> Result<Self> {
        let space = SpaceDescriptor::cantor(alphabet);
        let r = Rational::pow2(1 - w.len() as i64);
        let inside = vec![IdealBall::new(IdealPoint::Word(w.to_vec()), r.clone())?];
        let mut outside = Vec::new();
        for len in 1..=w.len() {
            for a in 0..alphabet {
                if a != w[len - 1] {
                    let mut v = w[..len - 1].to_vec();
                    v.push(a);
                    outside.push(IdealBall::new(IdealPoint::Word(v), Rational::pow2(1 - len as i64))?);
                }
            }
        }
        AlmostDecidableSet::new(
            EnumeratedOpenSet::finite(space.clone(), inside),
            EnumeratedOpenSet::finite(space, outside),
        )
    }

    /// The whole space: `U = X`, `V = ∅`.
    pub fn full(space: SpaceDescriptor) -> Result<Self> {
        let ball = whole_space_ball(&space)?;
        AlmostDecidableSet::new(EnumeratedOpenSet::finite(space.clone(), vec![ball]), EnumeratedOpenSet::empty(space))
    }

    pub fn space(&self) -> &SpaceDescriptor {
        self.inside.space()
    }

    pub fn schedule(&self, k: u32) -> u32 {
        (self.schedule)(k)
    }

    pub fn inside_region(&self, m: u32) -> Region {
        Region::balls(&self.inside.balls(m))
    }

    pub fn outside_region(&self, m: u32) -> Region {
        Region::balls(&self.outside.balls(m))
    }

    /// The complement set, swapping the roles of `U` and `V`.
    pub fn complement(&self) -> Self {
        AlmostDecidableSet {
            inside: self.outside.clone(),
            outside: self.inside.clone(),
            schedule: self.schedule.clone(),
        }
    }
}

impl fmt::Debug for AlmostDecidableSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AlmostDecidableSet(U={:?}, V={:?})", self.inside, self.outside)
    }
}

/// A ball containing every point of the space.
pub fn whole_space_ball(space: &SpaceDescriptor) -> Result<IdealBall> {
    match space {
        SpaceDescriptor::UnitInterval | SpaceDescriptor::Circle => {
            Ok(IdealBall::dyadic(Rational::pow2(-1), Rational::from_integer(2)))
        }
        SpaceDescriptor::Cantor { .. } => IdealBall::new(IdealPoint::Word(vec![]), Rational::from_integer(2)),
        other => Err(Error::Unsupported(format!("whole-space ball in {other:?}"))),
    }
}

/// `μ(A)` to within `2^-k`: `[lower(U), 1 - lower(V)]` at the first budget
/// not exceeding the witness schedule where the width is small enough.
pub fn measure_of_ad_set(mu: &dyn ComputableMeasure, a: &AlmostDecidableSet, k: u32) -> Result<Interval> {
    mu.space().check_same(a.space())?;
    let tol = Rational::pow2(-(k as i64));
    for m in 0..=a.schedule(k) {
        let lo = mu.lower(&a.inside_region(m), m)?;
        let hi = Rational::one() - mu.lower(&a.outside_region(m), m)?;
        if lo > hi {
            return Err(Error::InvalidWitness(k));
        }
        if &hi - &lo <= tol {
            return Interval::new(lo, hi);
        }
    }
    Err(Error::InvalidWitness(k))
}

/// `μ(· | A)`, computed as `μ(· ∩ U) / μ(A)` with `μ(A)` bracketed by
/// `[lower(U), 1 - lower(V)]`.
#[derive(Clone)]
pub struct ConditionedMeasure {
    base: Arc<dyn ComputableMeasure>,
    set: AlmostDecidableSet,
}

/// Conditions `μ` on `A`, failing if no positive lower bound on `μ(A)` turns
/// up within `budget`.
pub fn condition(mu: Arc<dyn ComputableMeasure>, a: AlmostDecidableSet, budget: u32) -> Result<ConditionedMeasure> {
    mu.space().check_same(a.space())?;
    for m in 0..=budget {
        if mu.lower(&a.inside_region(m), m)?.is_positive() {
            return Ok(ConditionedMeasure { base: mu, set: a });
        }
    }
    Err(Error::ZeroMassCondition(budget))
}

impl ConditionedMeasure {
    pub fn set(&self) -> &AlmostDecidableSet {
        &self.set
    }
}

impl fmt::Debug for ConditionedMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} | {:?}", self.base, self.set)
    }
}

impl ComputableMeasure for ConditionedMeasure {
    fn space(&self) -> SpaceDescriptor {
        self.base.space()
    }

    fn lower(&self, region: &Region, budget: u32) -> Result<Rational> {
        let u = self.set.inside_region(budget);
        let v = self.set.outside_region(budget);
        let num = self.base.lower(&region.clone().intersect(u), budget)?;
        let den = Rational::one() - self.base.lower(&v, budget)?;
        if !den.is_positive() {
            return Ok(Rational::zero());
        }
        Ok(Rational::min_of(&(num / den), &Rational::one()).clone())
    }

    fn upper_closure(&self, region: &Region, budget: u32) -> Result<Rational> {
        let u = self.set.inside_region(budget);
        let v = self.set.outside_region(budget);
        let den = self.base.lower(&u, budget)?;
        if !den.is_positive() {
            return Ok(Rational::one());
        }
        let num = &self.base.upper_closure(region, budget)? - &self.base.lower(&region.clone().intersect(v), budget)?;
        Ok(Rational::min_of(&(num / den), &Rational::one()).clone())
    }

    fn name(&self) -> String {
        format!("{self:?}")
    }
}
