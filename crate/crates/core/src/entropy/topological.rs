use std::collections::{HashMap, HashSet};

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use super::{least_squares_slope, EntropyReport, Sample, TrendPoint};
use crate::dynamics::{bowen_dist, enclosure_dist, iterate, Enclosure, MapKind, System};
use crate::error::{Error, Result};
use crate::numerics::{Interval, Rational};
use crate::space::{circle_dist, first_difference, IdealPoint, Point, SpaceDescriptor};

/// Largest candidate resolution (bits) a spanning scan may use.
pub const MAX_SPANNING_LEVEL: u32 = 22;

const CHUNK: usize = 4096;

/// Extra bits of orbit precision in the spanning scan.
const SCAN_GUARD: u32 = 8;

/// `log₂` of a Lipschitz constant of the map on interval spaces.
pub fn lipschitz_log2(sys: &System) -> Option<u32> {
    match sys.kind {
        MapKind::Doubling | MapKind::Tent => Some(1),
        MapKind::Rotation(_) => Some(0),
        MapKind::Shift(_) => None,
    }
}

/// Output of [`spanning_separated`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpanningSet {
    pub n: usize,
    pub p: u32,
    pub points: Vec<IdealPoint>,
    /// Ideal points scanned.
    pub candidates: usize,
    /// Candidates dropped because no comparison could be decided.
    pub undecided: usize,
}

impl SpanningSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Upper bound on `N(X, n, 2^-p)`.
    pub fn upper_n(&self) -> usize {
        self.len()
    }

    /// Lower bound on `M(X, n, 2^-(p+2))`.
    pub fn lower_m(&self) -> usize {
        self.len()
    }
}

/// Cell indices of width `2^-(p+1)` along an orbit, keyed in a trie so that
/// the points whose cells all lie within one of a query's can be listed.
struct CellTrie {
    modulus: Option<i64>,
    children: HashMap<(u32, i64), u32>,
    leaves: HashMap<u32, Vec<usize>>,
    nodes: u32,
}

impl CellTrie {
    fn new(modulus: Option<i64>) -> Self {
        CellTrie { modulus, children: HashMap::new(), leaves: HashMap::new(), nodes: 1 }
    }

    fn insert(&mut self, cells: &[i64], id: usize) {
        let mut v = 0u32;
        for &c in cells {
            let next = self.nodes;
            v = *self.children.entry((v, c)).or_insert_with(|| next);
            if v == next {
                self.nodes += 1;
            }
        }
        self.leaves.entry(v).or_default().push(id);
    }

    fn near(&self, cells: &[i64]) -> Vec<usize> {
        let mut frontier = vec![0u32];
        for &c in cells {
            let mut next = Vec::new();
            for &v in &frontier {
                for d in -1..=1 {
                    let c = match self.modulus {
                        Some(m) => (c + d).rem_euclid(m),
                        None => c + d,
                    };
                    if let Some(&u) = self.children.get(&(v, c)) {
                        next.push(u);
                    }
                }
            }
            next.sort_unstable();
            next.dedup();
            frontier = next;
            if frontier.is_empty() {
                return Vec::new();
            }
        }
        frontier.iter().flat_map(|v| self.leaves.get(v).into_iter().flatten().copied()).collect()
    }
}

fn bowen_interval(space: &SpaceDescriptor, a: &[Enclosure], b: &[Enclosure]) -> Interval {
    let mut it = a.iter().zip(b).map(|(x, y)| enclosure_dist(space, x, y));
    let first = it.next().expect("orbits are nonempty");
    it.fold(first, |m, d| m.max(&d))
}

struct Orbit {
    point: Rational,
    enclosures: Vec<Enclosure>,
    cells: Vec<i64>,
}

fn cell_of(e: &Enclosure, scale: &Rational, modulus: Option<i64>) -> i64 {
    let c = (e.interval().unwrap().midpoint() * scale).floor().to_i64().unwrap();
    match modulus {
        Some(m) => c.rem_euclid(m),
        None => c,
    }
}

fn orbit_of(sys: &System, c: &Rational, n: usize, q: u32, scale: &Rational, modulus: Option<i64>) -> Result<Orbit> {
    let x = Point::rational(sys.space.clone(), c.clone())?;
    let enclosures = iterate(sys, &x, n, q)?.enclosures;
    let cells = enclosures.iter().map(|e| cell_of(e, scale, modulus)).collect();
    Ok(Orbit { point: c.clone(), enclosures, cells })
}

/// Dyadic ideal points by increasing level: `0` (and `1` on `[0, 1]`), then
/// the odd multiples of `2^-l` for `l = 1, …, level`.
fn dyadic_candidates(space: &SpaceDescriptor, level: u32) -> impl Iterator<Item = Rational> {
    let ends: Vec<Rational> = match space {
        SpaceDescriptor::UnitInterval => vec![Rational::zero(), Rational::one()],
        _ => vec![Rational::zero()],
    };
    ends.into_iter()
        .chain((1..=level).flat_map(|l| (0..1u64 << (l - 1)).map(move |m| Rational::dyadic(2 * m + 1, l as u64))))
}

fn sep_radius(p: u32) -> Rational {
    Rational::pow2(-(p as i64) - 2)
}

/// Greedy scan over ideal points: a candidate within `d_n < 2^-(p+1)` of a
/// kept point is dropped, one farther than `2^-(p+2)` from all kept points is
/// kept. Candidates have resolution `p + n·λ + 2`, `λ = log₂ Lip(T)`, so the
/// result is `(n, 2^-p)`-spanning and `(n, 2^-(p+2))`-separated.
///
/// On `k`-symbol sequences every word of length `n + p + 1` is kept: two
/// distinct ones are at `d_n ≥ 2^-(p+1)`, and every point is within
/// `2^-(p+1)` of one.
pub fn spanning_separated(sys: &System, n: usize, p: u32) -> Result<SpanningSet> {
    if n == 0 {
        return Err(Error::Domain("spanning sets need n ≥ 1".into()));
    }
    if let SpaceDescriptor::Cantor { alphabet } = sys.space {
        let len = n + p as usize + 1;
        let bits = (len as f64 * (alphabet as f64).log2()).ceil() as u64;
        if bits > MAX_SPANNING_LEVEL as u64 {
            return Err(Error::PrecisionBlowup { needed: bits, cap: MAX_SPANNING_LEVEL as u64 });
        }
        let total = (alphabet as usize).pow(len as u32);
        let k = alphabet as usize;
        let points = (0..total)
            .map(|mut idx| {
                let mut w = vec![0u8; len];
                for s in w.iter_mut().rev() {
                    *s = (idx % k) as u8;
                    idx /= k;
                }
                IdealPoint::Word(w)
            })
            .collect();
        return Ok(SpanningSet { n, p, points, candidates: total, undecided: 0 });
    }
    let lip = lipschitz_log2(sys).expect("interval systems have a Lipschitz bound");
    let level = p as u64 + n as u64 * lip as u64 + 2;
    if level > MAX_SPANNING_LEVEL as u64 {
        return Err(Error::PrecisionBlowup { needed: level, cap: MAX_SPANNING_LEVEL as u64 });
    }
    let circle = sys.space == SpaceDescriptor::Circle;
    let modulus = circle.then_some(1i64 << (p + 1));
    let scale = Rational::pow2(p as i64 + 1);
    let cover = Rational::pow2(-(p as i64) - 1);
    let sep = sep_radius(p);
    let q = p + SCAN_GUARD;

    let mut trie = CellTrie::new(modulus);
    let mut kept: Vec<Orbit> = Vec::new();
    let (mut candidates, mut undecided) = (0usize, 0usize);
    let all: Vec<Rational> = dyadic_candidates(&sys.space, level as u32).collect();
    for chunk in all.chunks(CHUNK) {
        let orbits: Vec<Orbit> =
            chunk.par_iter().map(|c| orbit_of(sys, c, n, q, &scale, modulus)).collect::<Result<_>>()?;
        for o in orbits {
            candidates += 1;
            let mut covered = false;
            let mut unsure = false;
            for id in trie.near(&o.cells) {
                let d = bowen_interval(&sys.space, &o.enclosures, &kept[id].enclosures);
                if d.hi() < &cover {
                    covered = true;
                    break;
                }
                if d.lo() <= &sep {
                    unsure = true;
                }
            }
            if covered {
                continue;
            }
            if unsure {
                undecided += 1;
                continue;
            }
            trie.insert(&o.cells, kept.len());
            kept.push(o);
        }
    }
    let points = kept.into_iter().map(|o| IdealPoint::Dyadic(o.point)).collect();
    Ok(SpanningSet { n, p, points, candidates, undecided })
}

/// Checks exactly that all pairwise `d_n` lower bounds exceed `2^-(p+2)`.
///
/// Pairs whose orbit cells differ by at least two somewhere are certified by
/// the cell gap, which exceeds `2^-(p+1)` minus the enclosure widths; all
/// other pairs are compared with interval enclosures. On sequence spaces the
/// closest pair is lexicographically adjacent.
pub fn verify_separated(sys: &System, set: &SpanningSet) -> Result<bool> {
    let (n, p) = (set.n, set.p);
    let sep = sep_radius(p);
    if let SpaceDescriptor::Cantor { .. } = sys.space {
        let mut words: Vec<&[u8]> = Vec::with_capacity(set.len());
        for pt in &set.points {
            match pt.as_word() {
                Some(w) if w.len() >= n => words.push(w),
                _ => return Ok(false),
            }
        }
        words.sort_unstable();
        for pair in words.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if first_difference(a, b).is_none() {
                return Ok(false);
            }
            let ea: Vec<Enclosure> = (0..n).map(|j| Enclosure::Cylinder(a[j..].to_vec())).collect();
            let eb: Vec<Enclosure> = (0..n).map(|j| Enclosure::Cylinder(b[j..].to_vec())).collect();
            if bowen_interval(&sys.space, &ea, &eb).lo() <= &sep {
                return Ok(false);
            }
        }
        return Ok(true);
    }
    let circle = sys.space == SpaceDescriptor::Circle;
    let modulus = circle.then_some(1i64 << (p + 1));
    let scale = Rational::pow2(p as i64 + 1);
    let max_width = Rational::pow2(-(p as i64) - 3);
    let pts: Vec<Rational> = match set.points.iter().map(|s| s.as_rational().cloned()).collect::<Option<Vec<_>>>() {
        Some(v) => v,
        None => return Ok(false),
    };
    let orbits: Vec<Orbit> =
        pts.par_iter().map(|c| orbit_of(sys, c, n, p + SCAN_GUARD, &scale, modulus)).collect::<Result<_>>()?;
    let mut trie = CellTrie::new(modulus);
    for (i, o) in orbits.iter().enumerate() {
        if o.enclosures.iter().any(|e| e.width() >= max_width) {
            return Ok(false);
        }
        for id in trie.near(&o.cells) {
            if bowen_interval(&sys.space, &o.enclosures, &orbits[id].enclosures).lo() <= &sep {
                return Ok(false);
            }
        }
        trie.insert(&o.cells, i);
    }
    Ok(true)
}

/// Topological entropy proxy: per `p`, the least-squares slope of
/// `log₂|S(n, p)|` against `n`; `rate` is the largest slope over `p`.
///
/// Samples are tagged `p=…`; trend points `slope p=…`.
pub fn h1_estimate(sys: &System, ps: &[u32], ns: &[usize]) -> Result<EntropyReport> {
    let grid = super::normalize_grid(ns)?;
    let mut ps = ps.to_vec();
    ps.sort_unstable();
    ps.dedup();
    if ps.is_empty() {
        return Err(Error::Domain("empty p-grid".into()));
    }
    let jobs: Vec<(u32, usize)> = ps.iter().flat_map(|&p| grid.iter().map(move |&n| (p, n))).collect();
    let sets: Vec<(SpanningSet, bool)> = jobs
        .par_iter()
        .map(|&(p, n)| {
            let s = spanning_separated(sys, n, p)?;
            let ok = verify_separated(sys, &s)?;
            Ok((s, ok))
        })
        .collect::<Result<_>>()?;
    let mut r = EntropyReport::new("h1", &sys.name, "spanning");
    let mut verified = true;
    for (s, ok) in &sets {
        verified &= ok;
        r.diagnostics.undecided += s.undecided;
        r.samples.push(Sample { param: format!("p={}", s.p), n: s.n, value: (s.len() as f64).log2(), error: 0.0 });
    }
    let mut slopes = Vec::new();
    for &p in &ps {
        let tag = format!("p={p}");
        let series = r.series(&tag);
        let xs: Vec<f64> = series.iter().map(|s| s.n as f64).collect();
        let ys: Vec<f64> = series.iter().map(|s| s.value).collect();
        let slope = if xs.len() < 2 { ys[0] / xs[0] } else { least_squares_slope(&xs, &ys) };
        slopes.push(slope);
        r.trend.push(TrendPoint { param: format!("slope {tag}"), value: slope });
    }
    r.rate = slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    r.rate_lower = slopes.iter().cloned().fold(f64::INFINITY, f64::min);
    r.diagnostics.verified = Some(verified);
    Ok(r)
}

/// A Bowen ball `B_n(s, 2^-p)` named by its ideal center.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct CoverEntry {
    pub center: IdealPoint,
    pub n: usize,
    pub p: u32,
}

/// A finite truncation of a null `s`-cover.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NullSCover {
    entries: Vec<CoverEntry>,
    pub s: f64,
}

impl NullSCover {
    pub fn new(entries: Vec<CoverEntry>, s: f64) -> Result<Self> {
        let mut seen = HashSet::new();
        for e in &entries {
            if e.n == 0 {
                return Err(Error::Domain("cover entries need depth n ≥ 1".into()));
            }
            if !seen.insert(e) {
                return Err(Error::Domain(format!("duplicate cover entry {e:?}")));
            }
        }
        if !s.is_finite() || s < 0.0 {
            return Err(Error::Domain(format!("bad exponent {s}")));
        }
        Ok(NullSCover { entries, s })
    }

    /// The balls `B_n(s_i, 2^-p)` over spanning sets `S(n, p)` for each depth.
    pub fn from_spanning(sys: &System, depths: &[usize], p: u32, s: f64) -> Result<Self> {
        let sets: Vec<SpanningSet> =
            depths.par_iter().map(|&n| spanning_separated(sys, n, p)).collect::<Result<_>>()?;
        let entries = sets
            .into_iter()
            .flat_map(|set| {
                let (n, p) = (set.n, set.p);
                set.points.into_iter().map(move |center| CoverEntry { center, n, p })
            })
            .collect();
        NullSCover::new(entries, s)
    }

    pub fn entries(&self) -> &[CoverEntry] {
        &self.entries
    }

    /// Entries as `(ideal index, n, p)` triples.
    pub fn triples(&self, space: &SpaceDescriptor) -> Vec<(BigUint, usize, u32)> {
        self.entries.iter().map(|e| (e.center.index(space), e.n, e.p)).collect()
    }

    /// Cumulative `Σ 2^{-s n}` over entries of depth at most `d`, per depth.
    pub fn weights_by_depth(&self) -> Vec<(usize, f64)> {
        let mut by: std::collections::BTreeMap<usize, f64> = std::collections::BTreeMap::new();
        for e in &self.entries {
            *by.entry(e.n).or_default() += (-self.s * e.n as f64).exp2();
        }
        let mut acc = 0.0;
        by.into_iter()
            .map(|(d, w)| {
                acc += w;
                (d, acc)
            })
            .collect()
    }

    pub fn weight(&self) -> f64 {
        self.weights_by_depth().last().map_or(0.0, |&(_, w)| w)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Status {
    Member,
    Unknown,
    Outside,
}

/// Result of [`verify_null_s_cover`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverCheck {
    /// Cumulative truncated weight per depth.
    pub depth_weights: Vec<(usize, f64)>,
    pub weight: f64,
    pub weight_ok: bool,
    /// Depths `k` at which some sample point is certainly not covered.
    pub failing_k: Vec<usize>,
    /// `(sample index, k)` pairs left undecided at the precision cap.
    pub unknown: Vec<(usize, usize)>,
    /// Sample points covered at every `k ≤ k_max`.
    pub covered_points: usize,
}

impl CoverCheck {
    pub fn verified(&self) -> bool {
        self.weight_ok && self.failing_k.is_empty()
    }

    /// Weight added at each depth.
    pub fn increments(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.depth_weights
            .iter()
            .map(|&(_, w)| {
                let d = w - prev;
                prev = w;
                d
            })
            .collect()
    }
}

fn center_point(space: &SpaceDescriptor, c: &IdealPoint) -> Result<Point> {
    match (space, c) {
        (SpaceDescriptor::Cantor { alphabet }, IdealPoint::Word(w)) => Point::word(*alphabet, w.clone()),
        (_, IdealPoint::Dyadic(q)) => Point::rational(space.clone(), q.clone()),
        _ => Err(Error::Unsupported(format!("cover center {c:?} in {space:?}"))),
    }
}

/// Whether `x` lies in some listed ball of depth `d`, trying centers in
/// order of first-coordinate distance.
fn depth_status(sys: &System, x: &Point, entries: &[&CoverEntry]) -> Result<Status> {
    let space = &sys.space;
    let mut ranked: Vec<(f64, &CoverEntry)> = Vec::new();
    match space {
        SpaceDescriptor::Cantor { .. } => {
            for e in entries {
                let w = e.center.as_word().unwrap_or(&[]);
                let l = e.p as usize + 1;
                let xp = x.prefix(l);
                let mut cw = w.to_vec();
                cw.resize(l.max(cw.len()), 0);
                if cw[..l] == xp[..] {
                    ranked.push((0.0, e));
                }
            }
        }
        _ => {
            let a = x.approx_rational(64);
            for e in entries {
                let c = e.center.as_rational().ok_or_else(|| Error::Domain("dyadic centers expected".into()))?;
                let d = match space {
                    SpaceDescriptor::Circle => circle_dist(&a, c),
                    _ => (&a - c).abs(),
                }
                .to_f64();
                if d < (-(e.p as f64)).exp2() + 1e-12 {
                    ranked.push((d, e));
                }
            }
        }
    }
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut status = Status::Outside;
    for (_, e) in ranked {
        let r = Rational::pow2(-(e.p as i64));
        let y = center_point(space, &e.center)?;
        let d = bowen_dist(sys, x, &y, e.n, e.p + 12)?;
        if d.hi() < &r {
            return Ok(Status::Member);
        }
        if d.lo() < &r {
            status = Status::Unknown;
        }
    }
    Ok(status)
}

/// Checks a truncated null `s`-cover: the weight `Σ 2^{-sn}` against
/// `weight_cap`, and for each sample point and `k ≤ k_max` membership in
/// some listed ball of depth `n ≥ k`.
pub fn verify_null_s_cover(
    cover: &NullSCover,
    sys: &System,
    sample: &[Point],
    k_max: usize,
    weight_cap: f64,
) -> Result<CoverCheck> {
    let depth_weights = cover.weights_by_depth();
    let weight = depth_weights.last().map_or(0.0, |&(_, w)| w);
    let mut depths: Vec<usize> = cover.entries.iter().map(|e| e.n).collect();
    depths.sort_unstable();
    depths.dedup();
    let per_point: Vec<Vec<Status>> = sample
        .par_iter()
        .map(|x| {
            sys.space.check_same(x.space())?;
            // Status at each depth, deepest first, stopping at the first member.
            let mut found: Vec<(usize, Status)> = Vec::new();
            for &d in depths.iter().rev() {
                let at: Vec<&CoverEntry> = cover.entries.iter().filter(|e| e.n == d).collect();
                let st = depth_status(sys, x, &at)?;
                found.push((d, st));
                if st == Status::Member {
                    break;
                }
            }
            Ok((1..=k_max)
                .map(|k| {
                    let relevant = found.iter().filter(|(d, _)| *d >= k).map(|&(_, s)| s);
                    let mut best = Status::Outside;
                    for s in relevant {
                        if s == Status::Member {
                            return Status::Member;
                        }
                        if s == Status::Unknown {
                            best = Status::Unknown;
                        }
                    }
                    best
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut failing = HashSet::new();
    let mut unknown = Vec::new();
    let mut covered_points = 0;
    for (i, st) in per_point.iter().enumerate() {
        if st.iter().all(|&s| s == Status::Member) {
            covered_points += 1;
        }
        for (k, &s) in st.iter().enumerate() {
            match s {
                Status::Outside => {
                    failing.insert(k + 1);
                }
                Status::Unknown => unknown.push((i, k + 1)),
                Status::Member => {}
            }
        }
    }
    let mut failing_k: Vec<usize> = failing.into_iter().collect();
    failing_k.sort_unstable();
    Ok(CoverCheck { depth_weights, weight, weight_ok: weight <= weight_cap, failing_k, unknown, covered_points })
}
