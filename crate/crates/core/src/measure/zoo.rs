use std::fmt;

use serde::{Deserialize, Serialize};

use super::region::{universe, Region};
use super::ComputableMeasure;
use crate::error::{Error, Result};
use crate::numerics::{CylinderSet, IntervalSet, Piece, Rational};
use crate::space::SpaceDescriptor;

/// The built-in measures, all with exact rational masses on intervals and
/// cylinders.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub enum ZooMeasure {
    Lebesgue {
        space: SpaceDescriptor,
    },
    Dirac {
        space: SpaceDescriptor,
        at: Rational,
    },
    /// Stationary Markov measure on sequences: `μ[w] = π_{w0} Π P[w_i][w_{i+1}]`.
    Markov {
        alphabet: u8,
        transition: Vec<Vec<Rational>>,
        stationary: Vec<Rational>,
    },
    Mixture(Vec<(Rational, ZooMeasure)>),
}

impl ZooMeasure {
    pub fn lebesgue(space: SpaceDescriptor) -> Self {
        assert!(space.is_interval_like());
        ZooMeasure::Lebesgue { space }
    }

    pub fn dirac(space: SpaceDescriptor, at: Rational) -> Self {
        assert!(space.is_interval_like());
        ZooMeasure::Dirac { space, at }
    }

    /// Product measure with the given symbol probabilities.
    pub fn bernoulli(probs: Vec<Rational>) -> Result<Self> {
        let rows = vec![probs.clone(); probs.len()];
        ZooMeasure::markov_with(rows, probs)
    }

    pub fn uniform(alphabet: u8) -> Self {
        ZooMeasure::bernoulli(vec![Rational::new(1, alphabet as i64); alphabet as usize]).unwrap()
    }

    /// Markov measure with its stationary vector solved exactly.
    pub fn markov(transition: Vec<Vec<Rational>>) -> Result<Self> {
        let pi = stationary_vector(&transition)?;
        ZooMeasure::markov_with(transition, pi)
    }

    pub fn markov_with(transition: Vec<Vec<Rational>>, stationary: Vec<Rational>) -> Result<Self> {
        let k = transition.len();
        if !(2..=255).contains(&k) || stationary.len() != k {
            return Err(Error::Domain("transition matrix must be square with 2..=255 states".into()));
        }
        for row in &transition {
            if row.len() != k || row.iter().any(|p| p.is_negative()) {
                return Err(Error::Domain("malformed transition row".into()));
            }
            if row.iter().sum::<Rational>() != Rational::one() {
                return Err(Error::Domain("transition rows must sum to 1".into()));
            }
        }
        if stationary.iter().sum::<Rational>() != Rational::one() || stationary.iter().any(|p| p.is_negative()) {
            return Err(Error::Domain("stationary vector must be a probability vector".into()));
        }
        for j in 0..k {
            let s: Rational = (0..k).map(|i| &stationary[i] * &transition[i][j]).sum();
            if s != stationary[j] {
                return Err(Error::Domain("π is not stationary for P".into()));
            }
        }
        Ok(ZooMeasure::Markov { alphabet: k as u8, transition, stationary })
    }

    pub fn mixture(parts: Vec<(Rational, ZooMeasure)>) -> Result<Self> {
        if parts.is_empty() || parts.iter().map(|(w, _)| w.clone()).sum::<Rational>() != Rational::one() {
            return Err(Error::Domain("mixture weights must sum to 1".into()));
        }
        if parts.iter().any(|(w, _)| !w.is_positive()) {
            return Err(Error::Domain("mixture weights must be positive".into()));
        }
        let s = parts[0].1.space_descriptor();
        for (_, m) in &parts {
            s.check_same(&m.space_descriptor())?;
        }
        Ok(ZooMeasure::Mixture(parts))
    }

    pub fn space_descriptor(&self) -> SpaceDescriptor {
        match self {
            ZooMeasure::Lebesgue { space } | ZooMeasure::Dirac { space, .. } => space.clone(),
            ZooMeasure::Markov { alphabet, .. } => SpaceDescriptor::cantor(*alphabet),
            ZooMeasure::Mixture(parts) => parts[0].1.space_descriptor(),
        }
    }

    /// Exact mass of a subset of `[0, 1]` (or of the circle's `[0, 1)`).
    pub fn interval_set_mass(&self, s: &IntervalSet) -> Rational {
        match self {
            ZooMeasure::Lebesgue { .. } => s.length(),
            ZooMeasure::Dirac { at, .. } => {
                if s.contains(at) {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            }
            ZooMeasure::Markov { .. } => panic!("Markov measures live on sequence spaces"),
            ZooMeasure::Mixture(parts) => parts.iter().map(|(w, m)| w * &m.interval_set_mass(s)).sum(),
        }
    }

    fn piece_mass(&self, p: &Piece) -> Rational {
        match self {
            ZooMeasure::Lebesgue { .. } => &p.hi - &p.lo,
            ZooMeasure::Dirac { at, .. } => {
                if p.contains(at) {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            }
            ZooMeasure::Markov { .. } => panic!("Markov measures live on sequence spaces"),
            ZooMeasure::Mixture(parts) => parts.iter().map(|(w, m)| w * &m.piece_mass(p)).sum(),
        }
    }

    /// Exact mass of the cylinder `[w]`.
    pub fn cylinder(&self, w: &[u8]) -> Rational {
        match self {
            ZooMeasure::Markov { transition, stationary, .. } => {
                let Some(&first) = w.first() else { return Rational::one() };
                let mut m = stationary[first as usize].clone();
                for pair in w.windows(2) {
                    if m.is_zero() {
                        break;
                    }
                    m = m * &transition[pair[0] as usize][pair[1] as usize];
                }
                m
            }
            ZooMeasure::Mixture(parts) => parts.iter().map(|(wt, m)| wt * &m.cylinder(w)).sum(),
            _ => panic!("cylinders live on sequence spaces"),
        }
    }

    pub fn cylinder_set_mass(&self, s: &CylinderSet) -> Rational {
        s.words().iter().map(|w| self.cylinder(w)).sum()
    }

    /// Entropy rate in bits per symbol for Markov measures, as `f64`.
    pub fn entropy_rate_f64(&self) -> Option<f64> {
        match self {
            ZooMeasure::Markov { transition, stationary, .. } => {
                let mut h = 0.0;
                for (i, row) in transition.iter().enumerate() {
                    let pi = stationary[i].to_f64();
                    for p in row {
                        let p = p.to_f64();
                        if p > 0.0 {
                            h -= pi * p * p.log2();
                        }
                    }
                }
                Some(h)
            }
            _ => None,
        }
    }

    /// Single-pass cell descent: masses of dyadic cells (or cylinders) of
    /// depth at most `budget` lying inside the region (lower bound) and
    /// meeting its closure (upper bound).
    fn cell_bounds(&self, region: &Region, budget: u32) -> Result<(Rational, Rational)> {
        match self.space_descriptor() {
            SpaceDescriptor::Cantor { alphabet } => {
                let set = region.to_cylinder_set(alphabet)?;
                let mut lo = Rational::zero();
                let mut hi = Rational::zero();
                let mut stack = vec![Vec::<u8>::new()];
                while let Some(w) = stack.pop() {
                    if set.contains_cylinder(&w) {
                        let m = self.cylinder(&w);
                        lo = lo + &m;
                        hi = hi + m;
                    } else if set.meets_cylinder(&w) {
                        if w.len() as u32 >= budget {
                            hi = hi + self.cylinder(&w);
                        } else {
                            for a in 0..alphabet {
                                let mut v = w.clone();
                                v.push(a);
                                stack.push(v);
                            }
                        }
                    }
                }
                Ok((lo, hi))
            }
            space => {
                let set = region.to_interval_set(&space)?;
                let closure = set.closure().intersection(&universe(&space)?);
                let circle = matches!(space, SpaceDescriptor::Circle);
                let mut lo = Rational::zero();
                let mut hi = Rational::zero();
                let mut stack = vec![(0u64, num_bigint::BigInt::from(0))];
                while let Some((level, j)) = stack.pop() {
                    let a = Rational::dyadic(j.clone(), level);
                    let b = Rational::dyadic(&j + 1, level);
                    let last = !circle && b == Rational::one();
                    let cell = Piece::new(a, b, true, last);
                    if set.contains_piece(&cell) {
                        let m = self.piece_mass(&cell);
                        lo = lo + &m;
                        hi = hi + m;
                    } else if closure.meets_piece(&cell) {
                        if level as u32 >= budget {
                            hi = hi + self.piece_mass(&cell);
                        } else {
                            stack.push((level + 1, &j * 2 + 1));
                            stack.push((level + 1, &j * 2));
                        }
                    }
                }
                Ok((lo, hi))
            }
        }
    }
}

impl ComputableMeasure for ZooMeasure {
    fn space(&self) -> SpaceDescriptor {
        self.space_descriptor()
    }

    fn lower(&self, region: &Region, budget: u32) -> Result<Rational> {
        Ok(self.cell_bounds(region, budget)?.0)
    }

    fn upper_closure(&self, region: &Region, budget: u32) -> Result<Rational> {
        Ok(self.cell_bounds(region, budget)?.1)
    }

    fn exact(&self, region: &Region) -> Option<Rational> {
        match self.space_descriptor() {
            SpaceDescriptor::Cantor { alphabet } => {
                region.to_cylinder_set(alphabet).ok().map(|s| self.cylinder_set_mass(&s))
            }
            space => region.to_interval_set(&space).ok().map(|s| self.interval_set_mass(&s)),
        }
    }

    fn name(&self) -> String {
        format!("{self:?}")
    }
}

impl fmt::Debug for ZooMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ZooMeasure::Lebesgue { space } => write!(f, "Lebesgue({space:?})"),
            ZooMeasure::Dirac { at, .. } => write!(f, "δ({at})"),
            ZooMeasure::Markov { transition, stationary, .. } => {
                write!(f, "Markov(P={transition:?}, π={stationary:?})")
            }
            ZooMeasure::Mixture(parts) => {
                let s: Vec<String> = parts.iter().map(|(w, m)| format!("{w}·{m:?}")).collect();
                write!(f, "{}", s.join(" + "))
            }
        }
    }
}

/// Solves `πP = π`, `Σπ = 1` by exact Gaussian elimination.
pub fn stationary_vector(p: &[Vec<Rational>]) -> Result<Vec<Rational>> {
    let k = p.len();
    // Rows: (P^T - I) with the last equation replaced by Σπ = 1.
    let mut a: Vec<Vec<Rational>> = (0..k)
        .map(|j| {
            let mut row: Vec<Rational> =
                (0..k).map(|i| if i == j { &p[i][j] - &Rational::one() } else { p[i][j].clone() }).collect();
            row.push(Rational::zero());
            row
        })
        .collect();
    a[k - 1] = vec![Rational::one(); k + 1];
    for col in 0..k {
        let piv = (col..k)
            .find(|&r| !a[r][col].is_zero())
            .ok_or_else(|| Error::Domain("transition matrix has no unique stationary vector".into()))?;
        a.swap(col, piv);
        let inv = a[col][col].recip();
        for v in a[col][col..].iter_mut() {
            *v = &*v * &inv;
        }
        for r in 0..k {
            if r != col && !a[r][col].is_zero() {
                let factor = a[r][col].clone();
                let pivot_row = a[col].clone();
                for (v, p) in a[r][col..].iter_mut().zip(&pivot_row[col..]) {
                    *v = &*v - &(p * &factor);
                }
            }
        }
    }
    Ok(a.into_iter().map(|row| row[k].clone()).collect())
}
