use std::fmt;

use crate::error::{Error, Result};
use crate::numerics::{CylinderSet, IntervalSet, Piece, Rational};
use crate::space::{IdealBall, IdealPoint, SpaceDescriptor};

/// Sets that measure oracles are queried on: finite Boolean combinations of
/// open ideal balls and open ball exteriors `{x : d(x, c) > r}`.
#[derive(Clone, PartialEq)]
pub enum Region {
    Empty,
    Full,
    Ball(IdealBall),
    Exterior { center: IdealPoint, radius: Rational },
    Union(Vec<Region>),
    Intersection(Vec<Region>),
}

impl Region {
    pub fn balls(balls: &[IdealBall]) -> Region {
        match balls.len() {
            0 => Region::Empty,
            1 => Region::Ball(balls[0].clone()),
            _ => Region::Union(balls.iter().cloned().map(Region::Ball).collect()),
        }
    }

    pub fn union(self, other: Region) -> Region {
        Region::Union(vec![self, other])
    }

    pub fn intersect(self, other: Region) -> Region {
        Region::Intersection(vec![self, other])
    }

    /// Complement of the closed annulus `{a ≤ d(x, c) ≤ b}`.
    pub fn annulus_complement(center: &IdealPoint, a: &Rational, b: &Rational) -> Region {
        let inner = if a.is_positive() {
            Region::Ball(IdealBall { center: center.clone(), radius: a.clone() })
        } else {
            Region::Empty
        };
        inner.union(Region::Exterior { center: center.clone(), radius: b.clone() })
    }

    /// The region as an exact subset of `[0, 1]` or of the circle's `[0, 1)`.
    pub fn to_interval_set(&self, space: &SpaceDescriptor) -> Result<IntervalSet> {
        let universe = universe(space)?;
        Ok(match self {
            Region::Empty => IntervalSet::empty(),
            Region::Full => universe,
            Region::Ball(b) => ball_set(space, dyadic_center(&b.center)?, &b.radius),
            Region::Exterior { center, radius } => {
                closed_ball_set(space, dyadic_center(center)?, radius).complement_in(&universe)
            }
            Region::Union(rs) => {
                let mut acc = IntervalSet::empty();
                for r in rs {
                    acc = acc.union(&r.to_interval_set(space)?);
                }
                acc
            }
            Region::Intersection(rs) => {
                let mut acc = universe;
                for r in rs {
                    acc = acc.intersection(&r.to_interval_set(space)?);
                }
                acc
            }
        })
    }

    /// The region as an exact finite union of cylinders.
    pub fn to_cylinder_set(&self, alphabet: u8) -> Result<CylinderSet> {
        Ok(match self {
            Region::Empty => CylinderSet::empty(alphabet),
            Region::Full => CylinderSet::full(alphabet),
            Region::Ball(b) => {
                let w = word_center(&b.center)?;
                CylinderSet::cylinder(alphabet, &padded(w, ball_cylinder_len(&b.radius)))
            }
            Region::Exterior { center, radius } => {
                let w = word_center(center)?;
                match exterior_cylinder_len(radius) {
                    0 => CylinderSet::empty(alphabet),
                    l => CylinderSet::cylinder(alphabet, &padded(w, l)).complement(),
                }
            }
            Region::Union(rs) => {
                let mut acc = CylinderSet::empty(alphabet);
                for r in rs {
                    acc = acc.union(&r.to_cylinder_set(alphabet)?);
                }
                acc
            }
            Region::Intersection(rs) => {
                let mut acc = CylinderSet::full(alphabet);
                for r in rs {
                    acc = acc.intersection(&r.to_cylinder_set(alphabet)?);
                }
                acc
            }
        })
    }
}

impl fmt::Debug for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::Empty => write!(f, "∅"),
            Region::Full => write!(f, "X"),
            Region::Ball(b) => write!(f, "{b:?}"),
            Region::Exterior { center, radius } => write!(f, "Ext({center:?}, {radius})"),
            Region::Union(rs) => write!(f, "∪{rs:?}"),
            Region::Intersection(rs) => write!(f, "∩{rs:?}"),
        }
    }
}

pub(crate) fn universe(space: &SpaceDescriptor) -> Result<IntervalSet> {
    match space {
        SpaceDescriptor::UnitInterval => Ok(IntervalSet::unit()),
        SpaceDescriptor::Circle => Ok(IntervalSet::circle()),
        other => Err(Error::Unsupported(format!("interval sets in {other:?}"))),
    }
}

fn dyadic_center(c: &IdealPoint) -> Result<&Rational> {
    c.as_rational().ok_or_else(|| Error::Domain(format!("center {c:?} is not a dyadic ideal point")))
}

fn word_center(c: &IdealPoint) -> Result<&[u8]> {
    c.as_word().ok_or_else(|| Error::Domain(format!("center {c:?} is not a word")))
}

fn padded(w: &[u8], len: usize) -> Vec<u8> {
    let mut v: Vec<u8> = w.iter().copied().take(len).collect();
    v.resize(len, 0);
    v
}

/// `d < r` holds iff the first `L` symbols agree, `L = max(0, ⌊log2(1/r)⌋ + 1)`.
pub fn ball_cylinder_len(r: &Rational) -> usize {
    (r.recip().floor_log2() + 1).max(0) as usize
}

/// `d > r` holds iff the first `L` symbols do not all agree, `L = max(0, -⌊log2 r⌋)`.
pub fn exterior_cylinder_len(r: &Rational) -> usize {
    (-r.floor_log2()).max(0) as usize
}

/// Open ball `B(c, r)` in `[0, 1]` or on the circle.
pub fn ball_set(space: &SpaceDescriptor, c: &Rational, r: &Rational) -> IntervalSet {
    let p = Piece::open(c - r, c + r);
    match space {
        SpaceDescriptor::Circle if r > &Rational::pow2(-1) => IntervalSet::circle(),
        SpaceDescriptor::Circle => IntervalSet::single(p).wrap_unit(),
        _ => IntervalSet::single(p).intersection(&IntervalSet::unit()),
    }
}

/// Closed ball `B̄(c, r)` in `[0, 1]` or on the circle.
pub fn closed_ball_set(space: &SpaceDescriptor, c: &Rational, r: &Rational) -> IntervalSet {
    let p = Piece::closed(c - r, c + r);
    match space {
        SpaceDescriptor::Circle if r >= &Rational::pow2(-1) => IntervalSet::circle(),
        SpaceDescriptor::Circle => IntervalSet::single(p).wrap_unit(),
        _ => IntervalSet::single(p).intersection(&IntervalSet::unit()),
    }
}
