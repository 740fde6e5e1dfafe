//! The system zoo, rigorous orbit enclosures and the Bowen metric `d_n`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::ZooMeasure;
use crate::numerics::{CylinderSet, Interval, IntervalSet, Rational};
use crate::space::{circle_dist, Point, SpaceDescriptor};

/// Default ceiling on the input precision (bits) an orbit computation may request.
pub const DEFAULT_PRECISION_CAP: u64 = 1 << 22;

#[derive(Clone)]
pub enum MapKind {
    /// `x ↦ 2x mod 1` on the circle.
    Doubling,
    /// `x ↦ 1 - |1 - 2x|` on `[0, 1]`.
    Tent,
    /// `x ↦ x + α mod 1` on the circle.
    Rotation(RotationAngle),
    /// Left shift on sequences over `k` symbols.
    Shift(u8),
}

#[derive(Clone)]
pub enum RotationAngle {
    Rational(Rational),
    Computable(Point),
}

impl RotationAngle {
    pub fn approx(&self, bits: u32) -> (Rational, Rational) {
        match self {
            RotationAngle::Rational(a) => (a.clone(), Rational::zero()),
            RotationAngle::Computable(p) => (p.approx_rational(bits), Rational::pow2(1 - bits as i64)),
        }
    }
}

impl fmt::Debug for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapKind::Doubling => write!(f, "doubling"),
            MapKind::Tent => write!(f, "tent"),
            MapKind::Rotation(RotationAngle::Rational(a)) => write!(f, "rotation({a})"),
            MapKind::Rotation(RotationAngle::Computable(p)) => write!(f, "rotation({})", p.label()),
            MapKind::Shift(k) => write!(f, "shift({k})"),
        }
    }
}

/// A computable endomorphism with an optional invariant measure.
#[derive(Clone)]
pub struct System {
    pub kind: MapKind,
    pub space: SpaceDescriptor,
    pub measure: Option<ZooMeasure>,
    pub name: String,
    pub precision_cap: u64,
}

impl fmt::Debug for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "System({}, {:?}, {:?})", self.name, self.kind, self.space)
    }
}

impl System {
    fn new(kind: MapKind, space: SpaceDescriptor, measure: Option<ZooMeasure>, name: impl Into<String>) -> Self {
        System { kind, space, measure, name: name.into(), precision_cap: DEFAULT_PRECISION_CAP }
    }

    pub fn doubling() -> Self {
        let s = SpaceDescriptor::Circle;
        System::new(MapKind::Doubling, s.clone(), Some(ZooMeasure::lebesgue(s)), "doubling")
    }

    pub fn tent() -> Self {
        let s = SpaceDescriptor::UnitInterval;
        System::new(MapKind::Tent, s.clone(), Some(ZooMeasure::lebesgue(s)), "tent")
    }

    pub fn rotation_rational(alpha: Rational) -> Self {
        let s = SpaceDescriptor::Circle;
        let a = alpha.fract();
        let name = format!("rotation({a})");
        System::new(MapKind::Rotation(RotationAngle::Rational(a)), s.clone(), Some(ZooMeasure::lebesgue(s)), name)
    }

    pub fn rotation(alpha: Point) -> Result<Self> {
        SpaceDescriptor::Circle.check_same(alpha.space())?;
        if let Some(a) = alpha.exact_rational() {
            return Ok(System::rotation_rational(a.clone()));
        }
        let s = SpaceDescriptor::Circle;
        let name = format!("rotation({})", alpha.label());
        Ok(System::new(
            MapKind::Rotation(RotationAngle::Computable(alpha)),
            s.clone(),
            Some(ZooMeasure::lebesgue(s)),
            name,
        ))
    }

    /// Rotation by `√2 - 1`.
    pub fn golden_rotation() -> Self {
        System::rotation(Point::sqrt2_minus_1(SpaceDescriptor::Circle)).unwrap()
    }

    /// Full shift with the uniform Bernoulli measure.
    pub fn shift(k: u8) -> Self {
        System::new(MapKind::Shift(k), SpaceDescriptor::cantor(k), Some(ZooMeasure::uniform(k)), format!("shift({k})"))
    }

    /// Shift carrying a stationary Markov measure.
    pub fn markov_shift(measure: ZooMeasure) -> Result<Self> {
        match &measure {
            ZooMeasure::Markov { alphabet, .. } => {
                let k = *alphabet;
                Ok(System::new(MapKind::Shift(k), SpaceDescriptor::cantor(k), Some(measure), format!("markov({k})")))
            }
            _ => Err(Error::Domain("a Markov shift needs a Markov measure".into())),
        }
    }

    pub fn with_precision_cap(mut self, cap: u64) -> Self {
        self.precision_cap = cap;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn is_isometry(&self) -> bool {
        matches!(self.kind, MapKind::Rotation(_))
    }

    /// Exact image of a rational point.
    pub fn apply_exact(&self, x: &Rational) -> Option<Rational> {
        match &self.kind {
            MapKind::Doubling => Some((x * &Rational::from_integer(2)).fract()),
            MapKind::Tent => {
                let two = Rational::from_integer(2);
                Some(if x <= &Rational::pow2(-1) { x * &two } else { &two - &(x * &two) })
            }
            MapKind::Rotation(RotationAngle::Rational(a)) => Some((x + a).fract()),
            _ => None,
        }
    }

    /// Preimage of a subset of the interval space, exact for the zoo maps that
    /// have rational structure.
    pub fn preimage_interval_set(&self, s: &IntervalSet) -> Option<IntervalSet> {
        let half = Rational::pow2(-1);
        match &self.kind {
            MapKind::Doubling => {
                let a = s.affine(&half, &Rational::zero());
                let b = s.affine(&half, &half);
                Some(a.union(&b))
            }
            MapKind::Tent => {
                let a = s.affine(&half, &Rational::zero());
                let b = s.affine(&-&half, &Rational::one());
                Some(a.union(&b))
            }
            MapKind::Rotation(RotationAngle::Rational(a)) => Some(s.translate(&-a).wrap_unit()),
            _ => None,
        }
    }

    pub fn preimage_cylinder_set(&self, s: &CylinderSet) -> Option<CylinderSet> {
        match self.kind {
            MapKind::Shift(_) => Some(s.shift_preimage()),
            _ => None,
        }
    }

    /// Image of an enclosure: an outer enclosure of `T(E)`. `alpha` is the
    /// rotation-angle enclosure `(center, radius)` when the map is a rotation.
    fn image(&self, e: &Interval, alpha: &(Rational, Rational)) -> Interval {
        let two = Rational::from_integer(2);
        match &self.kind {
            MapKind::Doubling => {
                let lo = e.lo() * &two;
                let hi = e.hi() * &two;
                let shift = Rational::from_integer(lo.floor());
                Interval::new(&lo - &shift, &hi - &shift).unwrap()
            }
            MapKind::Tent => {
                let half = Rational::pow2(-1);
                if e.hi() <= &half {
                    e.scale(&two)
                } else if e.lo() >= &half {
                    Interval::new(&two - &(e.hi() * &two), &two - &(e.lo() * &two)).unwrap()
                } else {
                    let a = e.lo() * &two;
                    let b = &two - &(e.hi() * &two);
                    Interval::new(Rational::min_of(&a, &b).clone(), Rational::one()).unwrap()
                }
            }
            MapKind::Rotation(_) => {
                let lo = &(e.lo() + &alpha.0) - &alpha.1;
                let hi = &(e.hi() + &alpha.0) + &alpha.1;
                let shift = Rational::from_integer(lo.floor());
                Interval::new(&lo - &shift, &hi - &shift).unwrap()
            }
            MapKind::Shift(_) => unreachable!("shift enclosures are cylinders"),
        }
    }
}

/// Enclosure of one orbit point: an interval (a lifted arc `[lo, hi]` with
/// `lo ∈ [0, 1)` on the circle) or a cylinder of known symbols.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Enclosure {
    Interval(Interval),
    Cylinder(Vec<u8>),
}

impl Enclosure {
    pub fn interval(&self) -> Option<&Interval> {
        match self {
            Enclosure::Interval(iv) => Some(iv),
            _ => None,
        }
    }

    pub fn cylinder(&self) -> Option<&[u8]> {
        match self {
            Enclosure::Cylinder(w) => Some(w),
            _ => None,
        }
    }

    /// Diameter bound.
    pub fn width(&self) -> Rational {
        match self {
            Enclosure::Interval(iv) => iv.width(),
            Enclosure::Cylinder(w) => Rational::pow2(-(w.len() as i64)),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Enclosure::Interval(iv) if iv.is_degenerate())
    }
}

impl fmt::Debug for Enclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Enclosure::Interval(iv) => write!(f, "{iv}"),
            Enclosure::Cylinder(w) => {
                write!(f, "[")?;
                for d in w {
                    write!(f, "{d}")?;
                }
                write!(f, "…]")
            }
        }
    }
}

/// Enclosures of `x, Tx, …, T^{n-1}x`, each of width below `2^-p`.
#[derive(Clone, Debug)]
pub struct OrbitSegment {
    pub enclosures: Vec<Enclosure>,
    pub precision: u32,
    pub input_precision: u64,
}

impl OrbitSegment {
    pub fn len(&self) -> usize {
        self.enclosures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.enclosures.is_empty()
    }
}

/// Lazy orbit enclosure stream; see [`iterate`].
pub struct OrbitIter<'a> {
    sys: &'a System,
    remaining: usize,
    state: IterState,
    alpha: (Rational, Rational),
    store_bits: u64,
}

enum IterState {
    Exact(Rational),
    Interval(Interval),
    Symbols { prefix: Vec<u8>, pos: usize, len: usize },
}

/// Input precision needed for `n` steps at output precision `p`.
pub fn input_precision(sys: &System, n: usize, p: u32) -> u64 {
    match sys.kind {
        MapKind::Doubling | MapKind::Tent => n as u64 + p as u64 + 2,
        MapKind::Rotation(_) => p as u64 + 3,
        MapKind::Shift(_) => n as u64 + p as u64,
    }
}

fn ceil_log2(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

/// Streams enclosures of the first `n` orbit points at precision `p`.
pub fn orbit_iter<'a>(sys: &'a System, x: &Point, n: usize, p: u32) -> Result<OrbitIter<'a>> {
    sys.space.check_same(x.space())?;
    let q = input_precision(sys, n, p);
    if q > sys.precision_cap {
        return Err(Error::PrecisionBlowup { needed: q, cap: sys.precision_cap });
    }
    let alpha = match &sys.kind {
        MapKind::Rotation(a) => a.approx(p + 4 + ceil_log2(n)),
        _ => (Rational::zero(), Rational::zero()),
    };
    let state = match (&sys.kind, x.exact_rational()) {
        (MapKind::Shift(_), _) => IterState::Symbols { prefix: x.prefix(n + p as usize), pos: 0, len: p as usize + 1 },
        (_, Some(r)) if sys.apply_exact(r).is_some() => IterState::Exact(r.clone()),
        _ => {
            let c = x.approx_rational(q as u32);
            let r = Rational::pow2(1 - q as i64);
            let iv = match sys.space {
                SpaceDescriptor::UnitInterval => Interval::new(
                    Rational::max_of(&(&c - &r), &Rational::zero()).clone(),
                    Rational::min_of(&(&c + &r), &Rational::one()).clone(),
                )?,
                _ => {
                    let lo = &c - &r;
                    let shift = Rational::from_integer(lo.floor());
                    Interval::new(&lo - &shift, &(&c + &r) - &shift)?
                }
            };
            IterState::Interval(iv)
        }
    };
    Ok(OrbitIter { sys, remaining: n, state, alpha, store_bits: p as u64 + 3 })
}

impl Iterator for OrbitIter<'_> {
    type Item = Enclosure;

    fn next(&mut self) -> Option<Enclosure> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let last = self.remaining == 0;
        match &mut self.state {
            IterState::Exact(r) => {
                let out = Enclosure::Interval(Interval::point(r.clone()));
                if !last {
                    *r = self.sys.apply_exact(r).unwrap();
                }
                Some(out)
            }
            IterState::Interval(iv) => {
                let out = Enclosure::Interval(iv.round_outward(self.store_bits));
                if !last {
                    *iv = self.sys.image(iv, &self.alpha);
                }
                Some(out)
            }
            IterState::Symbols { prefix, pos, len } => {
                let out = Enclosure::Cylinder(prefix[*pos..*pos + *len].to_vec());
                *pos += 1;
                Some(out)
            }
        }
    }
}

/// Enclosures of `T^j x` for `j < n`, each of width below `2^-p`.
pub fn iterate(sys: &System, x: &Point, n: usize, p: u32) -> Result<OrbitSegment> {
    let it = orbit_iter(sys, x, n, p)?;
    let q = input_precision(sys, n, p);
    Ok(OrbitSegment { enclosures: it.collect(), precision: p, input_precision: q })
}

/// Range of `t ↦ dist(t, ℤ)` over a real interval.
fn circle_norm_range(d: &Interval) -> Interval {
    let norm = |t: &Rational| circle_dist(t, &Rational::zero());
    let (lo, hi) = (d.lo(), d.hi());
    let contains_integer = lo.ceil() <= hi.floor();
    let half = Rational::pow2(-1);
    let contains_half = (lo - &half).ceil() <= (hi - &half).floor();
    let (a, b) = (norm(lo), norm(hi));
    let min = if contains_integer { Rational::zero() } else { Rational::min_of(&a, &b).clone() };
    let max = if contains_half { half } else { Rational::max_of(&a, &b).clone() };
    Interval::new(min, max).unwrap()
}

/// Enclosure of the distance between two orbit points.
pub fn enclosure_dist(space: &SpaceDescriptor, a: &Enclosure, b: &Enclosure) -> Interval {
    match (a, b) {
        (Enclosure::Interval(x), Enclosure::Interval(y)) => match space {
            SpaceDescriptor::Circle => circle_norm_range(&y.sub(x)),
            _ => x.dist(y),
        },
        (Enclosure::Cylinder(u), Enclosure::Cylinder(v)) => {
            let l = u.len().min(v.len());
            match (0..l).find(|&i| u[i] != v[i]) {
                Some(i) => Interval::point(Rational::pow2(-(i as i64))),
                None => Interval::new(Rational::zero(), Rational::pow2(-(l as i64))).unwrap(),
            }
        }
        _ => panic!("mismatched enclosures"),
    }
}

/// `d_n(x, y) = max_{j<n} d(T^j x, T^j y)` to within `2^-precision`.
pub fn bowen_dist(sys: &System, x: &Point, y: &Point, n: usize, precision: u32) -> Result<Interval> {
    if n == 0 {
        return Err(Error::Domain("d_n needs n ≥ 1".into()));
    }
    x.space().check_same(y.space())?;
    let p = precision + 2;
    let a = orbit_iter(sys, x, n, p)?;
    let b = orbit_iter(sys, y, n, p)?;
    let mut best: Option<Interval> = None;
    for (ea, eb) in a.zip(b) {
        let d = enclosure_dist(&sys.space, &ea, &eb);
        best = Some(match best {
            None => d,
            Some(m) => m.max(&d),
        });
    }
    Ok(best.unwrap())
}
