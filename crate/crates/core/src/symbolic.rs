//! Computable partitions, the coding map, cylinder measures and
//! reconstruction of symbolic orbits from ε-pseudo-orbits.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{orbit_iter, Enclosure, MapKind, RotationAngle, System};
use crate::error::{Error, Result};
use crate::measure::ZooMeasure;
use crate::numerics::{CylinderSet, Interval, IntervalSet, Piece, Rational};
use crate::space::{circle_dist, IdealPoint, Point, SpaceDescriptor};

/// First precision tried by [`code_orbit`] before refining.
pub const START_PRECISION: u32 = 16;

/// An atom: a finite union of rational intervals, or of cylinders.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub enum Atom {
    Intervals(IntervalSet),
    Cylinders(CylinderSet),
}

/// A finite family of pairwise disjoint open atoms whose union has full measure.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct ComputablePartition {
    space: SpaceDescriptor,
    atoms: Vec<Atom>,
    name: String,
}

fn universe(space: &SpaceDescriptor) -> IntervalSet {
    match space {
        SpaceDescriptor::Circle => IntervalSet::circle(),
        _ => IntervalSet::unit(),
    }
}

fn seq_in_cylinders(set: &CylinderSet, w: &[u8]) -> bool {
    set.words().iter().any(|u| u.iter().enumerate().all(|(i, &a)| w.get(i).copied().unwrap_or(0) == a))
}

impl ComputablePartition {
    pub fn new(space: SpaceDescriptor, atoms: Vec<Atom>, name: impl Into<String>) -> Result<Self> {
        if atoms.len() < 2 || atoms.len() > 36 {
            return Err(Error::Domain("a partition needs between 2 and 36 atoms".into()));
        }
        match &space {
            SpaceDescriptor::UnitInterval | SpaceDescriptor::Circle => {
                let u = universe(&space);
                let mut union = IntervalSet::empty();
                for a in &atoms {
                    let Atom::Intervals(s) = a else {
                        return Err(Error::Domain("interval spaces need interval atoms".into()));
                    };
                    if s.intersection(&u) != *s {
                        return Err(Error::Domain("atom leaves the space".into()));
                    }
                    if !s.intersection(&union).is_empty() {
                        return Err(Error::Domain("atoms overlap".into()));
                    }
                    union = union.union(s);
                }
                if !union.complement_in(&u).length().is_zero() {
                    return Err(Error::Domain("atoms do not have full measure".into()));
                }
            }
            SpaceDescriptor::Cantor { alphabet } => {
                let mut union = CylinderSet::empty(*alphabet);
                for a in &atoms {
                    let Atom::Cylinders(s) = a else {
                        return Err(Error::Domain("sequence spaces need cylinder atoms".into()));
                    };
                    if s.alphabet() != *alphabet || !s.intersection(&union).is_empty() {
                        return Err(Error::Domain("atoms overlap or use another alphabet".into()));
                    }
                    union = union.union(s);
                }
                if !union.complement().is_empty() {
                    return Err(Error::Domain("atoms must cover the sequence space".into()));
                }
            }
            SpaceDescriptor::Product(..) => return Err(Error::Unsupported("partitions of product spaces".into())),
        }
        Ok(ComputablePartition { space, atoms, name: name.into() })
    }

    /// `[0, 1/2)` and the open upper half.
    pub fn halves(space: SpaceDescriptor) -> Self {
        ComputablePartition::cuts(space, vec![Rational::pow2(-1)]).unwrap().with_name("halves")
    }

    /// Atoms `[0, c_1), (c_1, c_2), …, (c_m, 1)`, the last closed at 1 on the
    /// unit interval.
    pub fn cuts(space: SpaceDescriptor, cuts: Vec<Rational>) -> Result<Self> {
        if !space.is_interval_like() {
            return Err(Error::Domain("cut partitions live on interval spaces".into()));
        }
        let mut pts = vec![Rational::zero()];
        pts.extend(cuts.iter().cloned());
        pts.push(Rational::one());
        if pts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("cuts must be strictly increasing inside (0, 1)".into()));
        }
        let m = pts.len() - 1;
        let atoms = (0..m)
            .map(|i| {
                let closed_hi = i == m - 1 && space == SpaceDescriptor::UnitInterval;
                Atom::Intervals(IntervalSet::single(Piece::new(pts[i].clone(), pts[i + 1].clone(), i == 0, closed_hi)))
            })
            .collect();
        let name = format!("cuts({})", cuts.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","));
        ComputablePartition::new(space, atoms, name)
    }

    /// Partition of sequence space by the first symbol.
    pub fn symbols(alphabet: u8) -> Self {
        let atoms = (0..alphabet).map(|a| Atom::Cylinders(CylinderSet::cylinder(alphabet, &[a]))).collect();
        ComputablePartition::new(SpaceDescriptor::cantor(alphabet), atoms, "symbols").unwrap()
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Alphabet size `k`.
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atom_set(&self, a: u8) -> &IntervalSet {
        match &self.atoms[a as usize] {
            Atom::Intervals(s) => s,
            Atom::Cylinders(_) => panic!("cylinder atom"),
        }
    }

    pub fn atom_cylinders(&self, a: u8) -> &CylinderSet {
        match &self.atoms[a as usize] {
            Atom::Cylinders(s) => s,
            Atom::Intervals(_) => panic!("interval atom"),
        }
    }

    /// True when atom `a` is exactly the cylinder `[a]`.
    pub fn is_symbol_partition(&self) -> bool {
        match self.space {
            SpaceDescriptor::Cantor { alphabet } => {
                self.atoms.len() == alphabet as usize
                    && self
                        .atoms
                        .iter()
                        .enumerate()
                        .all(|(i, a)| *a == Atom::Cylinders(CylinderSet::cylinder(alphabet, &[i as u8])))
            }
            _ => false,
        }
    }

    /// The boundary `∂ξ` (interval spaces), reduced mod 1 on the circle.
    pub fn boundary(&self) -> Vec<Rational> {
        let mut out = Vec::new();
        for a in &self.atoms {
            if let Atom::Intervals(s) = a {
                for e in s.endpoints() {
                    let e = match self.space {
                        SpaceDescriptor::Circle => e.fract(),
                        _ => e,
                    };
                    let interior = self.space == SpaceDescriptor::Circle || (e.is_positive() && e < Rational::one());
                    if interior {
                        out.push(e);
                    }
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }

    /// Lebesgue measure of the closed neighbourhood `closure((∂ξ)^r)`.
    pub fn boundary_neighbourhood_length(&self, r: &Rational) -> Rational {
        let mut s = IntervalSet::empty();
        for b in self.boundary() {
            s = s.union(&IntervalSet::single(Piece::closed(&b - r, &b + r)));
        }
        match self.space {
            SpaceDescriptor::Circle => s.wrap_unit().length(),
            _ => s.intersection(&IntervalSet::unit()).length(),
        }
    }

    /// Atom containing an exact point, if any.
    pub fn classify_point(&self, x: &Rational) -> Option<u8> {
        let x = match self.space {
            SpaceDescriptor::Circle => x.fract(),
            _ => x.clone(),
        };
        (0..self.atoms.len()).find(|&a| self.atom_set(a as u8).contains(&x)).map(|a| a as u8)
    }

    pub fn classify_ideal(&self, s: &IdealPoint) -> Option<u8> {
        match s {
            IdealPoint::Dyadic(x) => self.classify_point(x),
            IdealPoint::Word(w) => {
                (0..self.atoms.len()).find(|&a| seq_in_cylinders(self.atom_cylinders(a as u8), w)).map(|a| a as u8)
            }
            IdealPoint::Pair(..) => None,
        }
    }

    /// Atom that provably contains every point of the enclosure.
    pub fn classify(&self, e: &Enclosure) -> Option<u8> {
        match e {
            Enclosure::Interval(iv) if iv.is_degenerate() => self.classify_point(iv.lo()),
            Enclosure::Interval(iv) => (0..self.atoms.len())
                .find(|&a| {
                    let s = self.atom_set(a as u8);
                    match self.space {
                        SpaceDescriptor::Circle => s.periodic_extension().contains_interval(iv),
                        _ => s.contains_interval(iv),
                    }
                })
                .map(|a| a as u8),
            Enclosure::Cylinder(u) => {
                (0..self.atoms.len()).find(|&a| self.atom_cylinders(a as u8).contains_cylinder(u)).map(|a| a as u8)
            }
        }
    }
}

/// A finite word over `{0, …, k-1}` with `Unknown` entries.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymbolicWord {
    alphabet: u8,
    symbols: Vec<Option<u8>>,
}

const DIGITS: &[u8] = b"0123456789abcdefghijklmnopqrstuvwxyz";

impl SymbolicWord {
    pub fn new(alphabet: u8, symbols: Vec<Option<u8>>) -> Self {
        SymbolicWord { alphabet, symbols }
    }

    pub fn from_symbols(alphabet: u8, w: &[u8]) -> Self {
        SymbolicWord { alphabet, symbols: w.iter().map(|&a| Some(a)).collect() }
    }

    pub fn alphabet(&self) -> u8 {
        self.alphabet
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[Option<u8>] {
        &self.symbols
    }

    pub fn get(&self, i: usize) -> Option<u8> {
        self.symbols[i]
    }

    pub fn first_unknown(&self) -> Option<usize> {
        self.symbols.iter().position(|s| s.is_none())
    }

    pub fn unknown_count(&self) -> usize {
        self.symbols.iter().filter(|s| s.is_none()).count()
    }

    /// The symbols before the first `Unknown`.
    pub fn known_prefix(&self) -> Vec<u8> {
        self.symbols.iter().map_while(|s| *s).collect()
    }

    pub fn to_symbols(&self) -> Result<Vec<u8>> {
        match self.first_unknown() {
            Some(i) => Err(Error::UnknownSymbol(i)),
            None => Ok(self.known_prefix()),
        }
    }
}

impl fmt::Display for SymbolicWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.symbols.iter().map(|s| s.map_or('?', |a| DIGITS[a as usize] as char)).collect();
        f.write_str(&s)
    }
}

impl fmt::Debug for SymbolicWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for SymbolicWord {
    type Err = Error;

    /// Parses digits and `?`; the alphabet is the largest digit plus one, at least 2.
    fn from_str(s: &str) -> Result<Self> {
        let mut symbols = Vec::with_capacity(s.len());
        for c in s.bytes() {
            if c == b'?' {
                symbols.push(None);
            } else {
                let d = DIGITS.iter().position(|&x| x == c.to_ascii_lowercase());
                symbols.push(Some(d.ok_or_else(|| Error::Decode(format!("bad symbol {:?}", c as char)))? as u8));
            }
        }
        let alphabet = symbols.iter().flatten().max().map_or(2, |&m| (m + 1).max(2));
        Ok(SymbolicWord { alphabet, symbols })
    }
}

/// Codes the first `n` orbit points, refining precision up to `budget` bits
/// while some non-exact enclosure straddles `∂ξ`.
pub fn code_orbit(sys: &System, x: &Point, xi: &ComputablePartition, n: usize, budget: u32) -> Result<SymbolicWord> {
    if n == 0 {
        return Err(Error::Domain("code_orbit needs n ≥ 1".into()));
    }
    sys.space.check_same(xi.space())?;
    let mut word: Vec<Option<u8>> = vec![None; n];
    let mut p = START_PRECISION.min(budget).max(1);
    loop {
        let mut retry = false;
        for (j, e) in orbit_iter(sys, x, n, p)?.enumerate() {
            if word[j].is_some() {
                continue;
            }
            match xi.classify(&e) {
                Some(a) => word[j] = Some(a),
                None => retry |= !e.is_exact(),
            }
        }
        if !retry || p >= budget {
            break;
        }
        p = p.saturating_mul(2).min(budget);
    }
    Ok(SymbolicWord::new(xi.len() as u8, word))
}

/// Mass of one cylinder.
#[derive(Clone, Debug, PartialEq)]
pub enum CylinderMass {
    Exact(Rational),
    /// Certified enclosure.
    Enclosed(Interval),
    /// Sample frequency with a Hoeffding half-width at 99% confidence.
    Estimate {
        value: f64,
        half_width: f64,
        samples: usize,
    },
}

impl CylinderMass {
    pub fn value_f64(&self) -> f64 {
        match self {
            CylinderMass::Exact(r) => r.to_f64(),
            CylinderMass::Enclosed(iv) => iv.midpoint().to_f64(),
            CylinderMass::Estimate { value, .. } => *value,
        }
    }

    /// Upper bound on the error of [`CylinderMass::value_f64`] (rounding aside).
    pub fn error_f64(&self) -> f64 {
        match self {
            CylinderMass::Exact(_) => 0.0,
            CylinderMass::Enclosed(iv) => iv.width().to_f64() / 2.0,
            CylinderMass::Estimate { half_width, .. } => *half_width,
        }
    }

    pub fn exact(&self) -> Option<&Rational> {
        match self {
            CylinderMass::Exact(r) => Some(r),
            _ => None,
        }
    }

    pub fn is_positive(&self) -> bool {
        match self {
            CylinderMass::Exact(r) => r.is_positive(),
            CylinderMass::Enclosed(iv) => iv.hi().is_positive(),
            CylinderMass::Estimate { value, .. } => *value > 0.0,
        }
    }
}

/// All cylinders of one length with positive mass.
#[derive(Clone, Debug)]
pub struct CylinderDistribution {
    pub n: usize,
    /// Words, when the method produces them.
    pub words: Option<Vec<Vec<u8>>>,
    pub masses: Vec<CylinderMass>,
    pub method: &'static str,
}

impl CylinderDistribution {
    /// `Σ -μ(C) log₂ μ(C)`.
    pub fn entropy_f64(&self) -> f64 {
        self.masses.iter().map(|m| m.value_f64()).filter(|&m| m > 0.0).map(|m| -m * m.log2()).sum()
    }

    pub fn max_error_f64(&self) -> f64 {
        self.masses.iter().map(|m| m.error_f64()).fold(0.0, f64::max)
    }
}

#[derive(Clone)]
enum PulledBack {
    Intervals(IntervalSet),
    Cylinders(CylinderSet),
}

/// Cylinder masses `μ[w] = μ(ξ(w_0) ∩ T^{-1}ξ(w_1) ∩ …)`.
#[derive(Clone, Debug)]
pub struct CylinderOracle {
    sys: System,
    partition: ComputablePartition,
    measure: ZooMeasure,
    /// Sample count of the Monte-Carlo fallback.
    pub samples: usize,
    pub seed: u64,
    /// Target width exponent of certified enclosures.
    pub bits: u32,
}

fn ceil_log2(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

impl CylinderOracle {
    pub fn new(sys: &System, xi: &ComputablePartition) -> Result<Self> {
        let mu = sys.measure.clone().ok_or_else(|| Error::Domain(format!("{} carries no measure", sys.name)))?;
        CylinderOracle::with_measure(sys, xi, mu)
    }

    pub fn with_measure(sys: &System, xi: &ComputablePartition, mu: ZooMeasure) -> Result<Self> {
        sys.space.check_same(xi.space())?;
        sys.space.check_same(&mu.space_descriptor())?;
        Ok(CylinderOracle { sys: sys.clone(), partition: xi.clone(), measure: mu, samples: 20_000, seed: 0, bits: 64 })
    }

    pub fn partition(&self) -> &ComputablePartition {
        &self.partition
    }

    pub fn system(&self) -> &System {
        &self.sys
    }

    pub fn measure_ref(&self) -> &ZooMeasure {
        &self.measure
    }

    fn atom(&self, a: u8) -> PulledBack {
        match &self.partition.atoms[a as usize] {
            Atom::Intervals(s) => PulledBack::Intervals(s.clone()),
            Atom::Cylinders(s) => PulledBack::Cylinders(s.clone()),
        }
    }

    fn pull(sys: &System, a: PulledBack, s: &PulledBack) -> Option<PulledBack> {
        Some(match (a, s) {
            (PulledBack::Intervals(a), PulledBack::Intervals(s)) => {
                PulledBack::Intervals(a.intersection(&sys.preimage_interval_set(s)?))
            }
            (PulledBack::Cylinders(a), PulledBack::Cylinders(s)) => {
                PulledBack::Cylinders(a.intersection(&sys.preimage_cylinder_set(s)?))
            }
            _ => return None,
        })
    }

    fn mass(&self, s: &PulledBack) -> Rational {
        match s {
            PulledBack::Intervals(s) => self.measure.interval_set_mass(s),
            PulledBack::Cylinders(s) => self.measure.cylinder_set_mass(s),
        }
    }

    fn check_word(&self, w: &[u8]) -> Result<()> {
        match w.iter().position(|&a| a as usize >= self.partition.len()) {
            Some(i) => Err(Error::Domain(format!("symbol {} at {i} outside the partition", w[i]))),
            None => Ok(()),
        }
    }

    /// The cylinder as an explicit set, by exact pullback.
    fn pulled_back(&self, sys: &System, w: &[u8]) -> Option<PulledBack> {
        let mut s = self.atom(*w.last()?);
        for &a in w.iter().rev().skip(1) {
            s = CylinderOracle::pull(sys, self.atom(a), &s)?;
        }
        Some(s)
    }

    fn irrational_alpha(&self) -> Option<&Point> {
        match (&self.sys.kind, &self.measure) {
            (MapKind::Rotation(RotationAngle::Computable(p)), ZooMeasure::Lebesgue { .. }) => Some(p),
            _ => None,
        }
    }

    /// `μ[w]`.
    pub fn measure(&self, w: &[u8]) -> Result<CylinderMass> {
        self.check_word(w)?;
        if w.is_empty() {
            return Ok(CylinderMass::Exact(Rational::one()));
        }
        if self.partition.is_symbol_partition() {
            return Ok(CylinderMass::Exact(self.measure.cylinder(w)));
        }
        if let Some(s) = self.pulled_back(&self.sys, w) {
            return Ok(CylinderMass::Exact(self.mass(&s)));
        }
        if let Some(alpha) = self.irrational_alpha() {
            return Ok(self.rotation_enclosure(alpha, w));
        }
        self.monte_carlo(w, self.samples, self.seed)
    }

    pub fn measure_word(&self, w: &SymbolicWord) -> Result<CylinderMass> {
        self.measure(&w.to_symbols()?)
    }

    /// Translating the `j`-th pulled-back atom by `t` moves the Lebesgue mass
    /// of the intersection by at most `(#endpoints)·|t|`, so replacing `α` by
    /// an approximant within `δ` costs at most `Σ_j e_j·j·δ`.
    fn rotation_enclosure(&self, alpha: &Point, w: &[u8]) -> CylinderMass {
        let n = w.len();
        let e_max = self.partition.atoms.len() * 2 * 8;
        let r = self.bits + 2 * ceil_log2(n + 1) + ceil_log2(e_max) + 4;
        let approx = alpha.approx_rational(r);
        let delta = Rational::pow2(1 - r as i64);
        let sys = System::rotation_rational(approx);
        let m = self.mass(&self.pulled_back(&sys, w).unwrap());
        let mut bound = Rational::zero();
        for (j, &a) in w.iter().enumerate() {
            let e = 2 * self.partition.atom_set(a).pieces().len() as i64;
            bound = bound + &delta * &Rational::from_integer(e * j as i64);
        }
        let lo = Rational::max_of(&(&m - &bound), &Rational::zero()).clone();
        let hi = Rational::min_of(&(&m + &bound), &Rational::one()).clone();
        CylinderMass::Enclosed(Interval::new(lo, hi).unwrap())
    }

    /// Sample frequency of the cylinder among `samples` μ-distributed points.
    pub fn monte_carlo(&self, w: &[u8], samples: usize, seed: u64) -> Result<CylinderMass> {
        self.check_word(w)?;
        if samples == 0 {
            return Err(Error::Domain("Monte-Carlo needs samples".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut hits, mut unknown) = (0usize, 0usize);
        for _ in 0..samples {
            let x = sample_point(&self.measure, w.len() + 64, &mut rng)?;
            let code = code_orbit(&self.sys, &x, &self.partition, w.len(), 64)?;
            if code.first_unknown().is_some() {
                unknown += 1;
            } else if code.known_prefix() == w {
                hits += 1;
            }
        }
        let n = samples as f64;
        let half_width = ((2.0f64 / 0.01).ln() / (2.0 * n)).sqrt() + unknown as f64 / n;
        Ok(CylinderMass::Estimate { value: hits as f64 / n, half_width, samples })
    }

    /// Every cylinder of length `n` with positive mass.
    pub fn distribution(&self, n: usize) -> Result<CylinderDistribution> {
        if n == 0 {
            return Ok(CylinderDistribution {
                n,
                words: Some(vec![vec![]]),
                masses: vec![CylinderMass::Exact(Rational::one())],
                method: "trivial",
            });
        }
        if self.partition.is_symbol_partition() {
            return Ok(self.symbol_tree(n));
        }
        let exact_preimages = match self.sys.kind {
            MapKind::Shift(_) => true,
            _ => self.sys.preimage_interval_set(&IntervalSet::empty()).is_some(),
        };
        if exact_preimages {
            return self.pullback_levels(n);
        }
        if let Some(alpha) = self.irrational_alpha() {
            if self.single_arc_atoms() {
                return self.rotation_sweep(alpha, n);
            }
        }
        self.generic_tree(n)
    }

    fn symbol_tree(&self, n: usize) -> CylinderDistribution {
        let k = self.partition.len() as u8;
        let mut words = Vec::new();
        let mut masses = Vec::new();
        let mut stack: Vec<(Vec<u8>, Rational)> = vec![(vec![], Rational::one())];
        while let Some((w, _)) = stack.pop() {
            for a in (0..k).rev() {
                let mut v = w.clone();
                v.push(a);
                let m = self.measure.cylinder(&v);
                if !m.is_positive() {
                    continue;
                }
                if v.len() == n {
                    words.push(v);
                    masses.push(CylinderMass::Exact(m));
                } else {
                    stack.push((v, m));
                }
            }
        }
        CylinderDistribution { n, words: Some(words), masses, method: "product" }
    }

    fn pullback_levels(&self, n: usize) -> Result<CylinderDistribution> {
        let k = self.partition.len() as u8;
        let mut level: Vec<(Vec<u8>, PulledBack)> =
            (0..k).map(|a| (vec![a], self.atom(a))).filter(|(_, s)| self.mass(s).is_positive()).collect();
        for _ in 1..n {
            let mut next = Vec::with_capacity(level.len() * 2);
            for (w, s) in &level {
                for a in 0..k {
                    let c = CylinderOracle::pull(&self.sys, self.atom(a), s)
                        .ok_or_else(|| Error::Unsupported("no exact preimage".into()))?;
                    if self.mass(&c).is_positive() {
                        let mut v = Vec::with_capacity(w.len() + 1);
                        v.push(a);
                        v.extend_from_slice(w);
                        next.push((v, c));
                    }
                }
            }
            level = next;
        }
        level.sort_by(|a, b| a.0.cmp(&b.0));
        let masses = level.iter().map(|(_, s)| CylinderMass::Exact(self.mass(s))).collect();
        Ok(CylinderDistribution {
            n,
            words: Some(level.into_iter().map(|(w, _)| w).collect()),
            masses,
            method: "pullback",
        })
    }

    /// Each atom a single circle arc of length at most 1/2.
    fn single_arc_atoms(&self) -> bool {
        self.sys.space == SpaceDescriptor::Circle
            && (0..self.partition.len()).all(|a| {
                let s = self.partition.atom_set(a as u8);
                let p = s.pieces();
                let connected = p.len() == 1 || (p.len() == 2 && p[0].lo.is_zero() && p[1].hi == Rational::one());
                connected && s.length() <= Rational::pow2(-1)
            })
    }

    /// For an irrational rotation with single-arc atoms, the `n`-cylinders
    /// are exactly the arcs between consecutive cut points `b - jα`.
    fn rotation_sweep(&self, alpha: &Point, n: usize) -> Result<CylinderDistribution> {
        let bnd = self.partition.boundary();
        let mut r = self.bits + ceil_log2(n + 1) + 4;
        loop {
            let a = alpha.approx_rational(r);
            let delta = Rational::pow2(1 - r as i64);
            let mut cuts: Vec<Rational> = Vec::with_capacity(n * bnd.len());
            let mut ja = Rational::zero();
            for _ in 0..n {
                for b in &bnd {
                    cuts.push((b - &ja).fract());
                }
                ja = &ja + &a;
            }
            cuts.sort();
            let err = &delta * &Rational::from_integer(2 * n as i64);
            let m = cuts.len();
            let lens: Vec<Rational> = (0..m)
                .map(|i| if i + 1 < m { &cuts[i + 1] - &cuts[i] } else { &(&cuts[0] + &Rational::one()) - &cuts[i] })
                .collect();
            if lens.iter().all(|l| l > &err) {
                let masses = lens
                    .into_iter()
                    .map(|l| {
                        let lo = &l - &err;
                        let hi = Rational::min_of(&(&l + &err), &Rational::one()).clone();
                        CylinderMass::Enclosed(Interval::new(lo, hi).unwrap())
                    })
                    .collect();
                return Ok(CylinderDistribution { n, words: None, masses, method: "cut-points" });
            }
            if r as u64 > self.sys.precision_cap {
                return Err(Error::PrecisionBlowup { needed: r as u64, cap: self.sys.precision_cap });
            }
            r *= 2;
        }
    }

    fn generic_tree(&self, n: usize) -> Result<CylinderDistribution> {
        let k = self.partition.len() as u8;
        let mut words = Vec::new();
        let mut masses = Vec::new();
        let mut stack: Vec<Vec<u8>> = vec![vec![]];
        while let Some(w) = stack.pop() {
            for a in (0..k).rev() {
                let mut v = w.clone();
                v.push(a);
                let m = self.measure(&v)?;
                if !m.is_positive() {
                    continue;
                }
                if v.len() == n {
                    words.push(v);
                    masses.push(m);
                } else {
                    stack.push(v);
                }
            }
        }
        Ok(CylinderDistribution { n, words: Some(words), masses, method: "tree" })
    }
}

/// Draws a point distributed according to `mu`; sequences get `len` symbols.
pub fn sample_point(mu: &ZooMeasure, len: usize, rng: &mut ChaCha8Rng) -> Result<Point> {
    match mu {
        ZooMeasure::Lebesgue { space } => Point::random(space.clone(), rng.gen()),
        ZooMeasure::Dirac { space, at } => Point::rational(space.clone(), at.clone()),
        ZooMeasure::Markov { alphabet, transition, stationary } => {
            let pick = |probs: &[Rational], rng: &mut ChaCha8Rng| {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (i, p) in probs.iter().enumerate() {
                    acc += p.to_f64();
                    if u < acc {
                        return i as u8;
                    }
                }
                (probs.len() - 1) as u8
            };
            let mut w = vec![pick(stationary, rng)];
            while w.len() < len {
                let last = *w.last().unwrap() as usize;
                w.push(pick(&transition[last], rng));
            }
            Point::word(*alphabet, w)
        }
        ZooMeasure::Mixture(parts) => {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            for (wt, m) in parts {
                acc += wt.to_f64();
                if u < acc {
                    return sample_point(m, len, rng);
                }
            }
            sample_point(&parts[parts.len() - 1].1, len, rng)
        }
    }
}

/// The first `count` ideal points of `B(center, ε)`: the center, then dyadics
/// (or words) by increasing level.
pub fn ball_ideal_points(
    space: &SpaceDescriptor,
    center: &IdealPoint,
    eps: &Rational,
    count: usize,
) -> Vec<IdealPoint> {
    let mut out = vec![center.clone()];
    match (space, center) {
        (SpaceDescriptor::Cantor { alphabet }, IdealPoint::Word(c)) => {
            let k = *alphabet as usize;
            let mut l = 0usize;
            while Rational::pow2(-(l as i64)) >= *eps {
                l += 1;
            }
            let prefix: Vec<u8> = (0..l).map(|i| c.get(i).copied().unwrap_or(0)).collect();
            let mut extra = 0usize;
            while out.len() < count && extra < 24 {
                let total = k.pow(extra as u32);
                for idx in 0..total {
                    if out.len() >= count {
                        break;
                    }
                    let mut w = prefix.clone();
                    let mut t = idx;
                    let mut tail = vec![0u8; extra];
                    for s in tail.iter_mut().rev() {
                        *s = (t % k) as u8;
                        t /= k;
                    }
                    w.extend(tail);
                    let p = IdealPoint::Word(w);
                    if p != *center {
                        out.push(p);
                    }
                }
                extra += 1;
            }
        }
        (_, IdealPoint::Dyadic(c)) => {
            let circle = *space == SpaceDescriptor::Circle;
            for l in 1..=(64 + eps.recip().floor_log2().max(0) as u32) {
                if out.len() >= count {
                    break;
                }
                let scale = Rational::pow2(l as i64);
                let lo = ((c - eps) * &scale).floor();
                let hi = ((c + eps) * &scale).ceil();
                let mut k = lo;
                while k <= hi && out.len() < count {
                    if k.bit(0) {
                        let x = Rational::from_integer(k.clone()) * Rational::pow2(-(l as i64));
                        let (x, d) = if circle {
                            let y = x.fract();
                            let d = circle_dist(&y, c);
                            (y, d)
                        } else {
                            let d = (&x - c).abs();
                            (x, d)
                        };
                        let inside = circle || (!x.is_negative() && x <= Rational::one());
                        if inside && d < *eps && IdealPoint::Dyadic(x.clone()) != *center {
                            out.push(IdealPoint::Dyadic(x));
                        }
                    }
                    k += 1;
                }
            }
        }
        _ => {}
    }
    out.truncate(count.max(1));
    out
}

/// Reconstructs a symbolic word from an ε-pseudo-orbit: for each position,
/// round-robin over atoms, then over the ideal points of `B(s_{i_j}, ε)`,
/// emitting the first atom found to contain one of them.
pub fn reconstruct_symbols(
    xi: &ComputablePartition,
    eps: &Rational,
    pseudo_orbit: &[IdealPoint],
    budget: usize,
) -> Result<SymbolicWord> {
    if !eps.is_positive() {
        return Err(Error::Domain("ε must be positive".into()));
    }
    let mut out = Vec::with_capacity(pseudo_orbit.len());
    for (j, s) in pseudo_orbit.iter().enumerate() {
        let pts = ball_ideal_points(xi.space(), s, eps, budget);
        let found = pts.iter().find_map(|p| (0..xi.len() as u8).find(|&a| xi.classify_ideal(p) == Some(a)));
        match found {
            Some(a) => out.push(Some(a)),
            None => return Err(Error::Stalled(j)),
        }
    }
    Ok(SymbolicWord::new(xi.len() as u8, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::q;
    use proptest::prelude::*;
    use rand::Rng;

    fn circle(x: Rational) -> Point {
        Point::rational(SpaceDescriptor::Circle, x).unwrap()
    }

    fn halves() -> ComputablePartition {
        ComputablePartition::halves(SpaceDescriptor::Circle)
    }

    // Oracle: exact rational iteration with membership in [0, 1/2).
    fn exact_code(sys: &System, x: Rational, n: usize) -> String {
        let mut y = x;
        let mut s = String::new();
        for _ in 0..n {
            let half = q(1, 2);
            s.push(if y < half {
                '0'
            } else if y > half {
                '1'
            } else {
                '?'
            });
            y = sys.apply_exact(&y).unwrap();
        }
        s
    }

    #[test]
    fn coding_examples() {
        let d = System::doubling();
        assert_eq!(code_orbit(&d, &circle(q(1, 3)), &halves(), 6, 64).unwrap().to_string(), "010101");
        assert_eq!(code_orbit(&d, &circle(q(5, 16)), &halves(), 5, 64).unwrap().to_string(), "010?0");
        let r = System::rotation_rational(q(1, 4));
        assert_eq!(code_orbit(&r, &circle(q(1, 8)), &halves(), 4, 64).unwrap().to_string(), "0011");
        let w: SymbolicWord = "010?0".parse().unwrap();
        assert_eq!(w.first_unknown(), Some(3));
        assert_eq!(w.known_prefix(), vec![0, 1, 0]);
        assert_eq!(w.to_symbols(), Err(Error::UnknownSymbol(3)));
    }

    #[test]
    fn shift_coding_reads_symbols() {
        let x = Point::periodic(3, vec![2], vec![0, 1]).unwrap();
        let w = code_orbit(&System::shift(3), &x, &ComputablePartition::symbols(3), 7, 8).unwrap();
        assert_eq!(w.to_string(), "2010101");
    }

    #[test]
    fn random_point_refines() {
        let d = System::doubling();
        let x = Point::random(SpaceDescriptor::Circle, 3).unwrap();
        let w = code_orbit(&d, &x, &halves(), 4096, 64).unwrap();
        assert_eq!(w.unknown_count(), 0);
        // The coding of the doubling map is the binary expansion.
        let bits = x.approx_rational(4200);
        let scaled = (bits * Rational::pow2(4096)).floor();
        let digits: String = (0..4096).map(|i| if scaled.bit(4095 - i as u64) { '1' } else { '0' }).collect();
        assert_eq!(w.to_string(), digits);
    }

    #[test]
    fn partition_validation() {
        let s = SpaceDescriptor::UnitInterval;
        let a = Atom::Intervals(IntervalSet::single(Piece::new(q(0, 1), q(1, 2), true, true)));
        let b = Atom::Intervals(IntervalSet::single(Piece::new(q(1, 2), q(1, 1), true, true)));
        assert!(ComputablePartition::new(s.clone(), vec![a.clone(), b], "x").is_err());
        let c = Atom::Intervals(IntervalSet::single(Piece::new(q(3, 4), q(1, 1), false, true)));
        assert!(ComputablePartition::new(s, vec![a, c], "x").is_err());
        let p = ComputablePartition::cuts(SpaceDescriptor::Circle, vec![q(1, 3), q(2, 3)]).unwrap();
        assert_eq!(p.boundary(), vec![q(0, 1), q(1, 3), q(2, 3)]);
        assert_eq!(ComputablePartition::halves(SpaceDescriptor::UnitInterval).boundary(), vec![q(1, 2)]);
        assert_eq!(halves().boundary_neighbourhood_length(&q(1, 10)), q(2, 5));
    }

    #[test]
    fn cylinder_examples() {
        let d = System::doubling();
        let o = CylinderOracle::new(&d, &halves()).unwrap();
        assert_eq!(o.measure(&[0, 1, 1, 0]).unwrap(), CylinderMass::Exact(q(1, 16)));
        assert_eq!(o.measure(&[]).unwrap(), CylinderMass::Exact(q(1, 1)));
        let w: SymbolicWord = "01?".parse().unwrap();
        assert_eq!(o.measure_word(&w), Err(Error::UnknownSymbol(2)));
        let mk = ZooMeasure::markov(vec![vec![q(9, 10), q(1, 10)], vec![q(1, 2), q(1, 2)]]).unwrap();
        let sys = System::markov_shift(mk).unwrap();
        let o = CylinderOracle::new(&sys, &ComputablePartition::symbols(2)).unwrap();
        assert_eq!(o.measure(&[0, 0, 1]).unwrap(), CylinderMass::Exact(q(3, 40)));
    }

    #[test]
    fn non_symbol_cantor_partition() {
        // Atoms {[00]}, {[01], [1]} under the uniform shift: pullback sets.
        let atoms = vec![
            Atom::Cylinders(CylinderSet::cylinder(2, &[0, 0])),
            Atom::Cylinders(CylinderSet::from_words(2, [vec![0, 1], vec![1]])),
        ];
        let xi = ComputablePartition::new(SpaceDescriptor::cantor(2), atoms, "x").unwrap();
        let o = CylinderOracle::new(&System::shift(2), &xi).unwrap();
        // [00] ∩ T^{-1}[00] = [000].
        assert_eq!(o.measure(&[0, 0]).unwrap(), CylinderMass::Exact(q(1, 8)));
        let dist = o.distribution(5).unwrap();
        let total: Rational = dist.masses.iter().map(|m| m.exact().unwrap().clone()).sum();
        assert_eq!(total, q(1, 1));
    }

    #[test]
    fn rotation_enclosures_contain_cut_lengths() {
        let sys = System::golden_rotation();
        let o = CylinderOracle::new(&sys, &halves()).unwrap();
        let a = 2f64.sqrt() - 1.0;
        // Oracle: the cylinder of a word is the set of x whose f64 orbit codes it.
        let grid = 200_000;
        for w in [vec![0u8, 0, 1], vec![1, 0, 1, 0], vec![0, 1]] {
            let m = o.measure(&w).unwrap();
            let count = (0..grid)
                .filter(|&i| {
                    let x = (i as f64 + 0.5) / grid as f64;
                    w.iter().enumerate().all(|(j, &s)| (((x + j as f64 * a).fract() >= 0.5) as u8) == s)
                })
                .count();
            assert!((m.value_f64() - count as f64 / grid as f64).abs() < 1e-4, "{w:?}");
            assert!(m.error_f64() < 1e-15);
        }
        let dist = o.distribution(40).unwrap();
        assert_eq!(dist.method, "cut-points");
        assert_eq!(dist.masses.len(), 80);
        let total: f64 = dist.masses.iter().map(|m| m.value_f64()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_brackets_exact() {
        let d = System::doubling();
        let o = CylinderOracle::new(&d, &halves()).unwrap();
        match o.monte_carlo(&[1, 0], 4000, 7).unwrap() {
            CylinderMass::Estimate { value, half_width, samples } => {
                assert_eq!(samples, 4000);
                assert!((value - 0.25).abs() <= half_width);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn distribution_doubling_and_tent() {
        for sys in [System::doubling(), System::tent()] {
            let xi = ComputablePartition::halves(sys.space.clone());
            let o = CylinderOracle::new(&sys, &xi).unwrap();
            let d = o.distribution(8).unwrap();
            assert_eq!(d.masses.len(), 256);
            assert!(d.masses.iter().all(|m| m == &CylinderMass::Exact(Rational::pow2(-8))));
            assert_eq!(d.entropy_f64(), 8.0);
        }
    }

    #[test]
    fn reconstruction_examples() {
        let xi = halves();
        let d = System::doubling();
        let x = q(1, 3);
        let n = 40;
        let mut y = x.clone();
        let mut pseudo = Vec::new();
        for _ in 0..n {
            pseudo.push(IdealPoint::Dyadic(crate::space::round_nearest(&y, 8)));
            y = d.apply_exact(&y).unwrap();
        }
        let w = reconstruct_symbols(&xi, &q(1, 100), &pseudo, 16).unwrap();
        assert_eq!(w, code_orbit(&d, &circle(x), &xi, n, 32).unwrap());
        let w = reconstruct_symbols(&xi, &q(1, 20), &[IdealPoint::Dyadic(q(49, 100))], 4).unwrap();
        assert_eq!(w.to_string(), "0");
        // The center sits on the boundary: the dovetail finds a neighbour.
        let w = reconstruct_symbols(&xi, &q(1, 20), &[IdealPoint::Dyadic(q(1, 2))], 8).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(reconstruct_symbols(&xi, &q(1, 1000), &[IdealPoint::Dyadic(q(1, 2))], 1), Err(Error::Stalled(0)));
        let cant = ComputablePartition::symbols(2);
        let w = reconstruct_symbols(&cant, &q(1, 4), &[IdealPoint::Word(vec![1, 0, 1])], 3).unwrap();
        assert_eq!(w.to_string(), "1");
    }

    #[test]
    fn mismatch_density_bound() {
        let d = System::doubling();
        let xi = halves();
        let x = Point::random(SpaceDescriptor::Circle, 11).unwrap();
        let n = 3000;
        let eps = q(1, 50);
        let truth = code_orbit(&d, &x, &xi, n, 64).unwrap();
        let o = iterate_mids(&d, &x, n);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pseudo: Vec<IdealPoint> = o
            .into_iter()
            .map(|c| {
                let noise = Rational::new(rng.gen_range(-99..100), 100) * &eps;
                IdealPoint::Dyadic(crate::space::round_nearest(&(c + noise).fract(), 20))
            })
            .collect();
        let rec = reconstruct_symbols(&xi, &eps, &pseudo, 64).unwrap();
        let mismatches = (0..n).filter(|&j| rec.get(j) != truth.get(j)).count();
        let bound = xi.boundary_neighbourhood_length(&(&eps * &q(2, 1))).to_f64();
        assert!((mismatches as f64 / n as f64) < bound + 0.05, "{mismatches}");
    }

    fn iterate_mids(sys: &System, x: &Point, n: usize) -> Vec<Rational> {
        crate::dynamics::iterate(sys, x, n, 30)
            .unwrap()
            .enclosures
            .iter()
            .map(|e| e.interval().unwrap().lo().clone())
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn coding_matches_exact_arithmetic(a in 0i64..500, d in 1i64..500, which in 0usize..3, n in 1usize..30) {
            prop_assume!(a < d);
            let sys = [System::doubling(), System::rotation_rational(q(2, 7)), System::rotation_rational(q(5, 12))][which].clone();
            let w = code_orbit(&sys, &circle(q(a, d)), &halves(), n, 32).unwrap();
            prop_assert_eq!(w.to_string(), exact_code(&sys, q(a, d), n));
        }

        #[test]
        fn cylinder_additivity(w in prop::collection::vec(0u8..2, 0..7), which in 0usize..3) {
            let sys = [System::doubling(), System::tent(), System::rotation_rational(q(3, 8))][which].clone();
            let xi = ComputablePartition::halves(sys.space.clone());
            let o = CylinderOracle::new(&sys, &xi).unwrap();
            let parent = o.measure(&w).unwrap().exact().unwrap().clone();
            let children: Rational = (0..2u8).map(|a| {
                let mut v = w.clone();
                v.push(a);
                o.measure(&v).unwrap().exact().unwrap().clone()
            }).sum();
            prop_assert_eq!(parent, children);
        }

        #[test]
        fn markov_level_sums(n in 1usize..8) {
            let mk = ZooMeasure::markov(vec![vec![q(1, 3), q(2, 3)], vec![q(3, 4), q(1, 4)]]).unwrap();
            let sys = System::markov_shift(mk).unwrap();
            let o = CylinderOracle::new(&sys, &ComputablePartition::symbols(2)).unwrap();
            let d = o.distribution(n).unwrap();
            let total: Rational = d.masses.iter().map(|m| m.exact().unwrap().clone()).sum();
            prop_assert_eq!(total, q(1, 1));
        }

        #[test]
        fn small_eps_reproduces_coding(a in 1i64..200) {
            // Orbits of k/15 keep distance ≥ 1/30 from {0, 1/2} unless they hit it.
            let x = q(a, 15).fract();
            prop_assume!(!x.is_zero() && x != q(1, 2));
            let d = System::doubling();
            let truth = code_orbit(&d, &circle(x.clone()), &halves(), 24, 32).unwrap();
            let mut y = x;
            let mut pseudo = Vec::new();
            for _ in 0..24 {
                pseudo.push(IdealPoint::Dyadic(crate::space::round_nearest(&y, 9)));
                y = d.apply_exact(&y).unwrap();
            }
            let rec = reconstruct_symbols(&halves(), &q(1, 70), &pseudo, 8).unwrap();
            prop_assert_eq!(rec, truth);
        }
    }
}
