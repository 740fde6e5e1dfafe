//! Orbit statistics: empirical measures, Birkhoff averages, typicality tests
//! and recurrence.

use serde::Serialize;

use crate::dynamics::{enclosure_dist, orbit_iter, Enclosure, System};
use crate::error::{Error, Result};
use crate::measure::{AlmostDecidableSet, ZooMeasure};
use crate::numerics::{CylinderSet, IntervalSet, Piece, Rational};
use crate::space::{Point, SpaceDescriptor};

/// Orbit precision (bits) used to classify points against a target set.
pub const STATS_PRECISION: u32 = 40;

/// Stage at which almost decidable targets are enumerated.
pub const STATS_STAGE: u32 = 16;

/// Below this horizon a typicality test reports residuals but no verdict.
pub const TYPICALITY_MIN_N: usize = 1000;

/// A set whose orbit frequency is measured.
#[derive(Clone, Debug)]
pub enum Target {
    /// A finite union of intervals of `[0, 1]` or of the circle's `[0, 1)`.
    Intervals(IntervalSet),
    Cylinders(CylinderSet),
    /// Decided through its two open parts enumerated up to `stage`.
    AlmostDecidable {
        set: AlmostDecidableSet,
        stage: u32,
    },
}

impl Target {
    /// The half-open interval `[a, b)`.
    pub fn half_open(a: Rational, b: Rational) -> Target {
        Target::Intervals(IntervalSet::single(Piece::new(a, b, true, false)))
    }

    pub fn cylinder(alphabet: u8, w: &[u8]) -> Target {
        Target::Cylinders(CylinderSet::cylinder(alphabet, w))
    }

    pub fn almost_decidable(set: AlmostDecidableSet) -> Target {
        Target::AlmostDecidable { set, stage: STATS_STAGE }
    }

    /// Exact mass under a zoo measure; almost decidable targets use the
    /// measure of their inside part.
    pub fn mass(&self, mu: &ZooMeasure) -> Result<Rational> {
        match self {
            Target::Intervals(s) => Ok(mu.interval_set_mass(s)),
            Target::Cylinders(c) => Ok(mu.cylinder_set_mass(c)),
            Target::AlmostDecidable { set, stage } => {
                Ok(mu.interval_set_mass(&set.inside_region(*stage).to_interval_set(set.space())?))
            }
        }
    }

    fn decider(&self, space: &SpaceDescriptor) -> Result<Decider> {
        let universe = || match space {
            SpaceDescriptor::UnitInterval => Ok(IntervalSet::unit()),
            SpaceDescriptor::Circle => Ok(IntervalSet::circle()),
            other => Err(Error::Unsupported(format!("interval targets on {other:?}"))),
        };
        let sided = |inside: IntervalSet, outside: IntervalSet| match space {
            SpaceDescriptor::Circle => Decider::Intervals(inside.periodic_extension(), outside.periodic_extension()),
            _ => Decider::Intervals(inside, outside),
        };
        match self {
            Target::Intervals(s) => {
                let u = universe()?;
                let inside = s.intersection(&u);
                let outside = inside.complement_in(&u);
                Ok(sided(inside, outside))
            }
            Target::Cylinders(c) => {
                if space.alphabet() != Some(c.alphabet()) {
                    return Err(Error::SpaceMismatch {
                        left: format!("{space:?}"),
                        right: format!("cylinders over {} symbols", c.alphabet()),
                    });
                }
                Ok(Decider::Cylinders(c.clone(), c.complement()))
            }
            Target::AlmostDecidable { set, stage } => {
                space.check_same(set.space())?;
                let (u, v) = (set.inside_region(*stage), set.outside_region(*stage));
                match space.alphabet() {
                    Some(k) => Ok(Decider::Cylinders(u.to_cylinder_set(k)?, v.to_cylinder_set(k)?)),
                    None => Ok(sided(u.to_interval_set(space)?, v.to_interval_set(space)?)),
                }
            }
        }
    }
}

enum Decider {
    Intervals(IntervalSet, IntervalSet),
    Cylinders(CylinderSet, CylinderSet),
}

impl Decider {
    fn decide(&self, e: &Enclosure) -> Option<bool> {
        match (self, e) {
            (Decider::Intervals(inside, outside), Enclosure::Interval(iv)) => {
                if inside.contains_interval(iv) {
                    Some(true)
                } else if outside.contains_interval(iv) {
                    Some(false)
                } else {
                    None
                }
            }
            (Decider::Cylinders(inside, outside), Enclosure::Cylinder(w)) => {
                if inside.contains_cylinder(w) {
                    Some(true)
                } else if outside.contains_cylinder(w) {
                    Some(false)
                } else {
                    None
                }
            }
            _ => None,
        }
    }
}

/// Classification of the first `n` orbit points against a target.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OrbitCount {
    pub n: usize,
    pub inside: usize,
    pub outside: usize,
    pub undecided: usize,
}

impl OrbitCount {
    /// Fraction certified inside.
    pub fn average(&self) -> Rational {
        Rational::new(self.inside as i64, self.n as i64)
    }

    /// Fraction certified outside.
    pub fn complement_average(&self) -> Rational {
        Rational::new(self.outside as i64, self.n as i64)
    }

    pub fn undecided_fraction(&self) -> Rational {
        Rational::new(self.undecided as i64, self.n as i64)
    }
}

/// `ν_n = (1/n) Σ_{j<n} δ_{T^j x}`, kept as orbit enclosures.
#[derive(Clone, Debug)]
pub struct EmpiricalMeasure {
    pub space: SpaceDescriptor,
    pub base: String,
    pub n: usize,
    pub precision: u32,
    enclosures: Vec<Enclosure>,
}

impl EmpiricalMeasure {
    pub fn new(sys: &System, x: &Point, n: usize) -> Result<Self> {
        Self::with_precision(sys, x, n, STATS_PRECISION)
    }

    pub fn with_precision(sys: &System, x: &Point, n: usize, precision: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("empirical measures need n ≥ 1".into()));
        }
        let enclosures = orbit_iter(sys, x, n, precision)?.collect();
        Ok(EmpiricalMeasure { space: sys.space.clone(), base: x.label().to_string(), n, precision, enclosures })
    }

    pub fn count(&self, target: &Target) -> Result<OrbitCount> {
        let d = target.decider(&self.space)?;
        let mut c = OrbitCount { n: self.n, inside: 0, outside: 0, undecided: 0 };
        for e in &self.enclosures {
            match d.decide(e) {
                Some(true) => c.inside += 1,
                Some(false) => c.outside += 1,
                None => c.undecided += 1,
            }
        }
        Ok(c)
    }

    /// Certified frequency of the target.
    pub fn frequency(&self, target: &Target) -> Result<Rational> {
        Ok(self.count(target)?.average())
    }
}

/// Birkhoff average of the indicator of `target` along `n` orbit points.
/// Points whose enclosure straddles the boundary are counted as undecided.
pub fn birkhoff_avg(sys: &System, x: &Point, target: &Target, n: usize) -> Result<OrbitCount> {
    EmpiricalMeasure::new(sys, x, n)?.count(target)
}

/// A member of a typicality family with its reference mass.
#[derive(Clone, Debug)]
pub struct FamilyMember {
    pub label: String,
    pub target: Target,
    pub mass: Rational,
}

/// Dyadic intervals of levels `1..=max_level` on interval spaces, cylinders
/// of lengths `1..=max_level` on sequence spaces, with masses under `mu`.
pub fn dyadic_family(mu: &ZooMeasure, max_level: u32) -> Result<Vec<FamilyMember>> {
    let space = mu.space_descriptor();
    let mut out = Vec::new();
    match space.alphabet() {
        None => {
            for l in 1..=max_level {
                for j in 0..(1i64 << l) {
                    let a = Rational::new(j, 1i64 << l);
                    let b = Rational::new(j + 1, 1i64 << l);
                    let target = Target::half_open(a, b);
                    let mass = target.mass(mu)?;
                    out.push(FamilyMember { label: format!("[{j}/2^{l},{}/2^{l})", j + 1), target, mass });
                }
            }
        }
        Some(k) => {
            let mut words: Vec<Vec<u8>> = vec![vec![]];
            for _ in 1..=max_level {
                words = words
                    .iter()
                    .flat_map(|w| {
                        (0..k).map(move |a| {
                            let mut v = w.clone();
                            v.push(a);
                            v
                        })
                    })
                    .collect();
                for w in &words {
                    let label = w.iter().map(|d| d.to_string()).collect::<String>();
                    out.push(FamilyMember {
                        label: format!("[{label}]"),
                        target: Target::cylinder(k, w),
                        mass: mu.cylinder(w),
                    });
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Pass,
    Fail,
    /// Some member has an undecided fraction above `tol/2`.
    Inconclusive,
    /// Horizon below [`TYPICALITY_MIN_N`].
    NoJudgment,
}

#[derive(Clone, Debug, Serialize)]
pub struct Residual {
    pub label: String,
    pub frequency: f64,
    pub mass: f64,
    pub residual: f64,
    pub undecided: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TypicalityResult {
    pub n: usize,
    pub tol: f64,
    pub residuals: Vec<Residual>,
    pub max_residual: f64,
    pub max_undecided: f64,
    pub verdict: Verdict,
}

/// Compares `ν_n(A)` with `μ(A)` over the family.
pub fn typicality_test(
    sys: &System,
    x: &Point,
    family: &[FamilyMember],
    n: usize,
    tol: f64,
) -> Result<TypicalityResult> {
    if family.is_empty() {
        return Err(Error::Domain("empty typicality family".into()));
    }
    let nu = EmpiricalMeasure::new(sys, x, n)?;
    let mut residuals = Vec::with_capacity(family.len());
    for m in family {
        let c = nu.count(&m.target)?;
        let frequency = c.average().to_f64();
        let mass = m.mass.to_f64();
        residuals.push(Residual {
            label: m.label.clone(),
            frequency,
            mass,
            residual: (c.average() - m.mass.clone()).abs().to_f64(),
            undecided: c.undecided_fraction().to_f64(),
        });
    }
    let max_residual = residuals.iter().map(|r| r.residual).fold(0.0, f64::max);
    let max_undecided = residuals.iter().map(|r| r.undecided).fold(0.0, f64::max);
    let verdict = if n < TYPICALITY_MIN_N {
        Verdict::NoJudgment
    } else if max_undecided > tol / 2.0 {
        Verdict::Inconclusive
    } else if max_residual <= tol {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(TypicalityResult { n, tol, residuals, max_residual, max_undecided, verdict })
}

/// Running minimum over `1 ≤ k ≤ j` of a certified upper bound on
/// `d(x, T^k x)`, for `j = 1..=n`.
pub fn recurrence_trace(sys: &System, x: &Point, n: usize) -> Result<Vec<Rational>> {
    if n == 0 {
        return Err(Error::Domain("recurrence needs n ≥ 1".into()));
    }
    let mut it = orbit_iter(sys, x, n + 1, STATS_PRECISION)?;
    let first = it.next().expect("orbit of length n + 1");
    let mut best: Option<Rational> = None;
    let mut out = Vec::with_capacity(n);
    for e in it {
        let d = enclosure_dist(&sys.space, &first, &e).hi().clone();
        let m = match best {
            Some(b) if b <= d => b,
            _ => d,
        };
        out.push(m.clone());
        best = Some(m);
    }
    Ok(out)
}

/// `min_{1≤k≤n}` of a certified upper bound on `d(x, T^k x)`.
pub fn recurrence_stat(sys: &System, x: &Point, n: usize) -> Result<Rational> {
    Ok(recurrence_trace(sys, x, n)?.pop().expect("n ≥ 1"))
}
