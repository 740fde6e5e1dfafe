use serde::{Deserialize, Serialize};

use super::{ComputableMeasure, Region};
use crate::error::{Error, Result};
use crate::numerics::Rational;
use crate::space::IdealPoint;

/// Largest cell budget tried per stage before declaring a stall.
pub const STAGE_BUDGET_CAP: u32 = 64;

/// One accepted stage: `J_m = [lo, hi]`, certified by `lower` on the
/// complement of the closed annulus `{lo ≤ d ≤ hi}` at `budget`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusStage {
    pub stage: usize,
    pub lo: Rational,
    pub hi: Rational,
    pub budget: u32,
    pub complement_lower: Rational,
}

impl RadiusStage {
    /// The certified bound `μ(closed annulus) ≤ 1 - complement_lower`.
    pub fn annulus_upper(&self) -> Rational {
        Rational::one() - &self.complement_lower
    }
}

/// Record of the nested intervals `J_0 ⊇ J_1 ⊇ …` found by the search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusCertificate {
    pub center: IdealPoint,
    pub window: (Rational, Rational),
    pub stages: Vec<RadiusStage>,
}

impl RadiusCertificate {
    pub fn deepest(&self) -> (&Rational, &Rational) {
        match self.stages.last() {
            Some(s) => (&s.lo, &s.hi),
            None => (&self.window.0, &self.window.1),
        }
    }
}

/// Finds `r` in `[a, b]` whose sphere around `center` has measure zero in the
/// limit: stage `m + 1` splits `J_m` into thirds and keeps whichever outer
/// third first certifies `μ(closed annulus) < 2^-m`, testing the left third
/// before the right one at every budget. Returns the midpoint of `J_depth`.
pub fn almost_decidable_radius(
    mu: &dyn ComputableMeasure,
    center: &IdealPoint,
    window: (Rational, Rational),
    depth: usize,
) -> Result<(Rational, RadiusCertificate)> {
    let (a, b) = window.clone();
    if !a.is_positive() || a >= b {
        return Err(Error::Domain(format!("radius window must satisfy 0 < a < b, got [{a}, {b}]")));
    }
    let mut cert = RadiusCertificate { center: center.clone(), window, stages: Vec::new() };
    let (mut lo, mut hi) = (a, b);
    for m in 0..depth {
        let third = (&hi - &lo) * Rational::new(1, 3);
        let left = (lo.clone(), &lo + &third);
        let right = (&hi - &third, hi.clone());
        let need = Rational::one() - Rational::pow2(-(m as i64));
        let mut found = None;
        'budget: for budget in 0..=STAGE_BUDGET_CAP {
            for (x, y) in [&left, &right] {
                let comp = Region::annulus_complement(center, x, y);
                let l = mu.lower(&comp, budget)?;
                if l > need {
                    found =
                        Some(RadiusStage { stage: m + 1, lo: x.clone(), hi: y.clone(), budget, complement_lower: l });
                    break 'budget;
                }
            }
        }
        match found {
            Some(s) => {
                lo = s.lo.clone();
                hi = s.hi.clone();
                cert.stages.push(s);
            }
            None => return Err(Error::StallAtDepth { depth: m + 1, partial: Box::new(cert) }),
        }
    }
    Ok(((&lo + &hi) * Rational::pow2(-1), cert))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::ZooMeasure;
    use crate::numerics::q;
    use crate::space::SpaceDescriptor;

    fn exact_annulus(mu: &ZooMeasure, c: &IdealPoint, lo: &Rational, hi: &Rational) -> Rational {
        Rational::one() - mu.exact(&Region::annulus_complement(c, lo, hi)).unwrap()
    }

    #[test]
    fn lebesgue_every_stage_certifies() {
        let mu = ZooMeasure::lebesgue(SpaceDescriptor::UnitInterval);
        let c = IdealPoint::Dyadic(q(1, 2));
        let (r, cert) = almost_decidable_radius(&mu, &c, (q(1, 4), q(1, 3)), 8).unwrap();
        assert!(r >= q(1, 4) && r <= q(1, 3));
        assert_eq!(cert.stages.len(), 8);
        for s in &cert.stages {
            let bound = Rational::pow2(-(s.stage as i64) + 1);
            assert!(s.annulus_upper() < bound);
            assert!(exact_annulus(&mu, &c, &s.lo, &s.hi) < bound);
        }
    }

    #[test]
    fn atom_sphere_is_avoided() {
        let s = SpaceDescriptor::UnitInterval;
        let mu = ZooMeasure::mixture(vec![
            (q(1, 2), ZooMeasure::lebesgue(s.clone())),
            (q(1, 2), ZooMeasure::dirac(s, q(3, 4))),
        ])
        .unwrap();
        let c = IdealPoint::Dyadic(q(1, 2));
        let (r, cert) = almost_decidable_radius(&mu, &c, (q(1, 5), q(2, 5)), 10).unwrap();
        assert_ne!(r, q(1, 4));
        let excluded_from = cert.stages.iter().position(|s| !(s.lo <= q(1, 4) && q(1, 4) <= s.hi)).unwrap();
        assert!(cert.stages[excluded_from..].iter().all(|s| !(s.lo <= q(1, 4) && q(1, 4) <= s.hi)));
        for st in &cert.stages {
            assert!(exact_annulus(&mu, &c, &st.lo, &st.hi) < Rational::pow2(-(st.stage as i64) + 1));
        }
    }

    #[test]
    fn cantor_uniform() {
        let mu = ZooMeasure::uniform(2);
        let c = IdealPoint::Word(vec![]);
        let (r, cert) = almost_decidable_radius(&mu, &c, (q(1, 8), q(1, 2)), 6).unwrap();
        // Distances are powers of two; the spheres of r carry no mass.
        let sphere = exact_annulus(&mu, &c, &r, &r);
        assert_eq!(sphere, Rational::zero());
        assert_eq!(cert.stages.len(), 6);
    }

    /// Lebesgue measure whose oracle stops improving after a few cell levels.
    #[derive(Debug)]
    struct Myopic(ZooMeasure);

    impl ComputableMeasure for Myopic {
        fn space(&self) -> SpaceDescriptor {
            self.0.space()
        }
        fn lower(&self, r: &Region, b: u32) -> Result<Rational> {
            self.0.lower(r, b.min(3))
        }
        fn upper_closure(&self, r: &Region, b: u32) -> Result<Rational> {
            self.0.upper_closure(r, b.min(3))
        }
        fn name(&self) -> String {
            "myopic".into()
        }
    }

    #[test]
    fn stall_reports_partial_certificate() {
        let mu = Myopic(ZooMeasure::lebesgue(SpaceDescriptor::UnitInterval));
        let c = IdealPoint::Dyadic(q(1, 2));
        match almost_decidable_radius(&mu, &c, (q(1, 5), q(2, 5)), 12) {
            Err(Error::StallAtDepth { depth, partial }) => {
                assert!(depth >= 2);
                assert_eq!(partial.stages.len(), depth - 1);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(almost_decidable_radius(&mu, &c, (q(1, 4), q(1, 4)), 1), Err(Error::Domain(_))));
    }
}
