//! Computable probability measures: lower-bound oracles on ball unions, the
//! Prokhorov distance between finitely supported measures, almost decidable
//! radii and sets, and conditioning.

mod decidable;
mod prokhorov;
mod radius;
mod region;
mod zoo;

use std::fmt;

pub use decidable::{condition, measure_of_ad_set, AlmostDecidableSet, ConditionedMeasure};
pub use prokhorov::{prokhorov, total_variation, IdealMeasure};
pub use radius::{almost_decidable_radius, RadiusCertificate, RadiusStage};
pub use region::{ball_cylinder_len, ball_set, closed_ball_set, exterior_cylinder_len, Region};
pub use zoo::{stationary_vector, ZooMeasure};

use crate::error::Result;
use crate::numerics::Rational;
use crate::space::{IdealBall, SpaceDescriptor};

/// Largest cell depth [`measure_lower`] explores beyond the requested precision.
pub const DEFAULT_BUDGET_SLACK: u32 = 40;

/// A probability measure known through budgeted bounds.
///
/// `lower` is a lower bound on the measure of the (open) region, nondecreasing
/// in the budget and converging to the true value. `upper_closure` bounds the
/// measure of the region's closure from above.
pub trait ComputableMeasure: Send + Sync + fmt::Debug {
    fn space(&self) -> SpaceDescriptor;
    fn lower(&self, region: &Region, budget: u32) -> Result<Rational>;
    fn upper_closure(&self, region: &Region, budget: u32) -> Result<Rational>;
    /// Exact measure of the region, when available.
    fn exact(&self, _region: &Region) -> Option<Rational> {
        None
    }
    fn name(&self) -> String;
}

/// Outcome of [`measure_lower`].
#[derive(Clone, Debug, PartialEq)]
pub enum LowerBound {
    /// Within `2^-k` of the true measure.
    Certified(Rational),
    /// A valid lower bound whose accuracy could not be certified; the region
    /// may carry mass on its boundary.
    BestEffort(Rational),
}

impl LowerBound {
    pub fn value(&self) -> &Rational {
        match self {
            LowerBound::Certified(v) | LowerBound::BestEffort(v) => v,
        }
    }
}

/// Lower bound on `μ(∪ balls)`, certified to within `2^-k` once the budget
/// brings the closure bound within `2^-k` of it.
pub fn measure_lower(mu: &dyn ComputableMeasure, balls: &[IdealBall], k: u32) -> Result<LowerBound> {
    measure_lower_region(mu, &Region::balls(balls), k)
}

pub fn measure_lower_region(mu: &dyn ComputableMeasure, region: &Region, k: u32) -> Result<LowerBound> {
    let tol = Rational::pow2(-(k as i64));
    let mut lo = Rational::zero();
    for budget in 0..=k + DEFAULT_BUDGET_SLACK {
        lo = mu.lower(region, budget)?;
        let hi = mu.upper_closure(region, budget)?;
        if &hi - &lo < tol {
            return Ok(LowerBound::Certified(lo));
        }
    }
    Ok(LowerBound::BestEffort(lo))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::q;
    use crate::space::IdealPoint;
    use proptest::prelude::*;

    fn leb() -> ZooMeasure {
        ZooMeasure::lebesgue(SpaceDescriptor::UnitInterval)
    }

    fn ball(c: Rational, r: Rational) -> IdealBall {
        IdealBall::dyadic(c, r)
    }

    #[test]
    fn lebesgue_two_balls() {
        let b = [ball(q(1, 4), q(1, 8)), ball(q(3, 4), q(1, 8))];
        match measure_lower(&leb(), &b, 10).unwrap() {
            LowerBound::Certified(l) => assert!(l <= q(1, 2) && l > q(1, 2) - Rational::pow2(-10)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lebesgue_overlap_merge() {
        // B(1/2, 1/5) ∪ B(5/8, 1/5) = (3/10, 33/40); 1/2 is dyadic, 3/5 is not.
        let b = [ball(q(1, 2), q(1, 5)), ball(q(5, 8), q(1, 5))];
        let l = measure_lower(&leb(), &b, 12).unwrap();
        let exact = q(33, 40) - q(3, 10);
        assert!(matches!(l, LowerBound::Certified(_)));
        assert!(l.value() <= &exact && &exact - l.value() < Rational::pow2(-12));
        assert_eq!(leb().exact(&Region::balls(&b)), Some(exact));
    }

    #[test]
    fn atom_plus_interval() {
        let s = SpaceDescriptor::UnitInterval;
        let mu = ZooMeasure::mixture(vec![
            (q(1, 2), ZooMeasure::lebesgue(s.clone())),
            (q(1, 2), ZooMeasure::dirac(s, q(3, 4))),
        ])
        .unwrap();
        let b = [ball(q(3, 4), q(1, 100))];
        let l = measure_lower(&mu, &b, 6).unwrap();
        let exact = q(1, 2) + q(1, 100);
        assert!(l.value() <= &exact && &exact - l.value() < Rational::pow2(-6));
    }

    #[test]
    fn atom_on_boundary_is_best_effort() {
        let s = SpaceDescriptor::UnitInterval;
        let mu = ZooMeasure::mixture(vec![
            (q(1, 2), ZooMeasure::lebesgue(s.clone())),
            (q(1, 2), ZooMeasure::dirac(s, q(3, 4))),
        ])
        .unwrap();
        let b = [ball(q(1, 2), q(1, 4))];
        let l = measure_lower(&mu, &b, 8).unwrap();
        assert!(matches!(l, LowerBound::BestEffort(_)));
        assert!(l.value() <= &q(1, 4));
    }

    #[test]
    fn markov_stationary_solve() {
        let p = vec![vec![q(9, 10), q(1, 10)], vec![q(1, 2), q(1, 2)]];
        assert_eq!(stationary_vector(&p).unwrap(), vec![q(5, 6), q(1, 6)]);
        let m = ZooMeasure::markov(p).unwrap();
        assert_eq!(m.cylinder(&[0, 0, 1]), q(3, 40));
        assert!((m.entropy_rate_f64().unwrap() - 0.557_496_328).abs() < 1e-6);
    }

    #[test]
    fn cantor_oracle_matches_exact() {
        let m = ZooMeasure::markov(vec![vec![q(9, 10), q(1, 10)], vec![q(1, 2), q(1, 2)]]).unwrap();
        let r = Region::Ball(IdealBall::new(IdealPoint::Word(vec![0, 1]), q(1, 4)).unwrap())
            .union(Region::Exterior { center: IdealPoint::Word(vec![]), radius: q(1, 2) });
        let ex = m.exact(&r).unwrap();
        assert_eq!(ex, m.cylinder(&[0, 1, 0]) + m.cylinder(&[1]));
        assert_eq!(m.lower(&r, 3).unwrap(), ex);
        assert!(m.lower(&r, 1).unwrap() < ex);
    }

    fn arb_balls() -> impl Strategy<Value = Vec<(i64, i64)>> {
        prop::collection::vec((0i64..=64, 1i64..24), 1..4)
    }

    proptest! {
        #[test]
        fn lower_monotone_and_sound(bs in arb_balls(), extra in (0i64..=64, 1i64..24), b in 0u32..10) {
            let mu = ZooMeasure::mixture(vec![
                (q(3, 4), ZooMeasure::lebesgue(SpaceDescriptor::UnitInterval)),
                (q(1, 4), ZooMeasure::dirac(SpaceDescriptor::UnitInterval, q(1, 3))),
            ]).unwrap();
            let balls: Vec<IdealBall> = bs.iter().map(|&(c, r)| ball(q(c, 64), q(r, 97))).collect();
            let region = Region::balls(&balls);
            let exact = mu.exact(&region).unwrap();
            let l0 = mu.lower(&region, b).unwrap();
            let l1 = mu.lower(&region, b + 1).unwrap();
            prop_assert!(l0 <= l1 && l1 <= exact);
            prop_assert!(mu.upper_closure(&region, b).unwrap() >= exact);
            let mut more = balls.clone();
            more.push(ball(q(extra.0, 64), q(extra.1, 97)));
            prop_assert!(mu.lower(&Region::balls(&more), b).unwrap() >= l0);
        }

        #[test]
        fn oracle_agrees_with_exact(bs in arb_balls(), k in 4u32..14) {
            // Lebesgue: every ball union is a continuity set.
            let mu = ZooMeasure::lebesgue(SpaceDescriptor::Circle);
            let balls: Vec<IdealBall> = bs.iter().map(|&(c, r)| ball(q(c % 64, 64), q(r, 97))).collect();
            let exact = mu.exact(&Region::balls(&balls)).unwrap();
            let l = measure_lower(&mu, &balls, k).unwrap();
            prop_assert!(matches!(l, LowerBound::Certified(_)));
            prop_assert!(l.value() <= &exact && &exact - l.value() < Rational::pow2(-(k as i64)));
        }
    }
}
