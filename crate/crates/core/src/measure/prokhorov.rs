use crate::error::{Error, Result};
use crate::numerics::{Interval, Rational};
use crate::space::{IdealPoint, SpaceDescriptor};

/// Largest combined support handled by [`prokhorov`].
pub const MAX_SUPPORT: usize = 20;

/// A finitely supported measure with rational weights on ideal points.
#[derive(Clone, Debug, PartialEq)]
pub struct IdealMeasure {
    space: SpaceDescriptor,
    support: Vec<IdealPoint>,
    weights: Vec<Rational>,
}

impl IdealMeasure {
    pub fn new(space: SpaceDescriptor, atoms: Vec<(IdealPoint, Rational)>) -> Result<Self> {
        let mut support: Vec<IdealPoint> = Vec::new();
        let mut weights: Vec<Rational> = Vec::new();
        for (p, w) in atoms {
            if !w.is_positive() {
                return Err(Error::Domain(format!("weight {w} is not positive")));
            }
            match support.iter().position(|s| space.ideal_dist(s, &p).is_zero()) {
                Some(i) => weights[i] = &weights[i] + &w,
                None => {
                    support.push(p);
                    weights.push(w);
                }
            }
        }
        if weights.iter().sum::<Rational>() != Rational::one() {
            return Err(Error::Domain("weights must sum to 1".into()));
        }
        Ok(IdealMeasure { space, support, weights })
    }

    pub fn dirac(space: SpaceDescriptor, p: IdealPoint) -> Self {
        IdealMeasure::new(space, vec![(p, Rational::one())]).unwrap()
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn support(&self) -> &[IdealPoint] {
        &self.support
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    fn mass_of(&self, p: &IdealPoint) -> Rational {
        self.support
            .iter()
            .zip(&self.weights)
            .filter(|(s, _)| self.space.ideal_dist(s, p).is_zero())
            .map(|(_, w)| w.clone())
            .sum()
    }
}

/// Smallest `ε` with `μ(A) ≤ ν(A^ε) + ε` for every `A ⊆ supp μ`.
///
/// For fixed `A`, `ν(A^ε)` is a step function of `ε` that jumps just after
/// each distance `δ` from `A` to a support point of `ν`, so the infimum is
/// `min_δ max(δ, μ(A) - W(δ))`, where `W(δ)` is the `ν`-mass within distance
/// `δ` of `A` and `δ` ranges over `0` and those distances.
fn one_sided(mu: &IdealMeasure, nu: &IdealMeasure) -> Rational {
    let n = mu.support.len();
    let dists: Vec<Vec<Rational>> =
        mu.support.iter().map(|a| nu.support.iter().map(|b| mu.space.ideal_dist(a, b)).collect()).collect();
    let mut worst = Rational::zero();
    for mask in 1u32..(1u32 << n) {
        let mass: Rational = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| mu.weights[i].clone()).sum();
        let near: Vec<Rational> = (0..nu.support.len())
            .map(|j| (0..n).filter(|i| mask >> i & 1 == 1).map(|i| dists[i][j].clone()).min().unwrap())
            .collect();
        let mut cands: Vec<Rational> = near.clone();
        cands.push(Rational::zero());
        cands.sort();
        cands.dedup();
        let best = cands
            .iter()
            .map(|delta| {
                let w: Rational =
                    near.iter().zip(&nu.weights).filter(|(d, _)| *d <= delta).map(|(_, w)| w.clone()).sum();
                Rational::max_of(delta, &(&mass - &w)).clone()
            })
            .min()
            .unwrap();
        if best > worst {
            worst = best;
        }
    }
    worst
}

/// Prokhorov distance between two finitely supported measures. The result is
/// exact, returned as a degenerate interval.
pub fn prokhorov(mu: &IdealMeasure, nu: &IdealMeasure, _k: u32) -> Result<Interval> {
    mu.space.check_same(&nu.space)?;
    let combined = mu.support.len() + nu.support.len();
    if combined > MAX_SUPPORT {
        return Err(Error::SupportTooLarge(combined));
    }
    let a = one_sided(mu, nu);
    let b = one_sided(nu, mu);
    Ok(Interval::point(Rational::max_of(&a, &b).clone()))
}

/// `sup_A |μ(A) - ν(A)|`, by enumerating subsets of the joint support.
pub fn total_variation(mu: &IdealMeasure, nu: &IdealMeasure) -> Result<Rational> {
    mu.space.check_same(&nu.space)?;
    let mut pts: Vec<IdealPoint> = mu.support.clone();
    for p in &nu.support {
        if !pts.iter().any(|s| mu.space.ideal_dist(s, p).is_zero()) {
            pts.push(p.clone());
        }
    }
    if pts.len() > MAX_SUPPORT {
        return Err(Error::SupportTooLarge(pts.len()));
    }
    let diff: Vec<Rational> = pts.iter().map(|p| &mu.mass_of(p) - &nu.mass_of(p)).collect();
    let mut best = Rational::zero();
    for mask in 0u32..(1u32 << pts.len()) {
        let s: Rational = (0..pts.len()).filter(|i| mask >> i & 1 == 1).map(|i| diff[i].clone()).sum();
        let s = s.abs();
        if s > best {
            best = s;
        }
    }
    Ok(best)
}
