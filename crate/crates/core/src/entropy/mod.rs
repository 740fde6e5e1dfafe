//! Entropy estimators: Shannon block entropy, local information, symbolic and
//! pseudo-orbit complexity rates, and the spanning/separated and null-cover
//! machinery for topological entropy.

mod topological;

pub use topological::{
    h1_estimate, lipschitz_log2, spanning_separated, verify_null_s_cover, verify_separated, CoverCheck, CoverEntry,
    NullSCover, SpanningSet, MAX_SPANNING_LEVEL,
};

use std::collections::BTreeMap;

use num_traits::ToPrimitive;
use serde::Serialize;

use crate::complexity::{default_compressor, elias_len, PrefixFreeCompressor};
use crate::dynamics::{iterate, orbit_iter, Enclosure, MapKind, RotationAngle, System};
use crate::error::{Error, Result};
use crate::numerics::{log2_enclosure, Interval, Rational};
use crate::space::{IdealPoint, Point, SpaceDescriptor};
use crate::symbolic::{code_orbit, ComputablePartition, CylinderOracle};

/// Precision budget (bits) for symbolic coding inside the estimators.
pub const CODING_BUDGET: u32 = 64;

/// Extra bits of orbit precision used when quantizing to the `ε`-grid.
pub const GRID_GUARD_BITS: u32 = 24;

/// One value of a per-`n` series.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub param: String,
    pub n: usize,
    pub value: f64,
    /// Bound on the numerical or statistical error of `value`.
    pub error: f64,
}

/// A summary value indexed by a parameter rather than by `n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrendPoint {
    pub param: String,
    pub value: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    /// Position of the first `Unknown` symbol, when one truncated the word.
    pub truncated_at: Option<usize>,
    /// Grid values dropped by truncation or by a precision cap.
    pub skipped: Vec<usize>,
    pub precision_capped: bool,
    /// Undecided comparisons (enclosures too wide to decide).
    pub undecided: usize,
    /// Outcome of exact post-checks, when the method has one.
    pub verified: Option<bool>,
    pub notes: Vec<String>,
}

impl Diagnostics {
    /// One-line rendering for CSV output.
    pub fn summary(&self) -> String {
        let mut parts = Vec::new();
        if let Some(t) = self.truncated_at {
            parts.push(format!("truncated_at={t}"));
        }
        if !self.skipped.is_empty() {
            parts.push(format!("skipped={}", self.skipped.len()));
        }
        if self.precision_capped {
            parts.push("precision_capped".to_string());
        }
        if self.undecided > 0 {
            parts.push(format!("undecided={}", self.undecided));
        }
        if let Some(v) = self.verified {
            parts.push(format!("verified={v}"));
        }
        parts.extend(self.notes.iter().cloned());
        parts.join(";")
    }
}

/// Output of every estimator in this module.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyReport {
    pub method: String,
    pub system: String,
    pub param: String,
    pub samples: Vec<Sample>,
    pub trend: Vec<TrendPoint>,
    /// Extrapolated rate; the limsup proxy where upper and lower differ.
    pub rate: f64,
    /// The liminf proxy.
    pub rate_lower: f64,
    pub diagnostics: Diagnostics,
}

impl EntropyReport {
    fn new(method: &str, system: &str, param: impl Into<String>) -> Self {
        EntropyReport {
            method: method.to_string(),
            system: system.to_string(),
            param: param.into(),
            samples: Vec::new(),
            trend: Vec::new(),
            rate: f64::NAN,
            rate_lower: f64::NAN,
            diagnostics: Diagnostics::default(),
        }
    }

    /// Samples carrying the given parameter tag, in grid order.
    pub fn series(&self, param: &str) -> Vec<&Sample> {
        self.samples.iter().filter(|s| s.param == param).collect()
    }

    pub fn value_at(&self, param: &str, n: usize) -> Option<f64> {
        self.samples.iter().find(|s| s.param == param && s.n == n).map(|s| s.value)
    }
}

/// Sorted, deduplicated, nonempty grid without zeros.
fn normalize_grid(ns: &[usize]) -> Result<Vec<usize>> {
    let mut g: Vec<usize> = ns.to_vec();
    g.sort_unstable();
    g.dedup();
    if g.is_empty() {
        return Err(Error::Domain("empty n-grid".into()));
    }
    if g[0] == 0 {
        return Err(Error::Domain("n-grid values must be at least 1".into()));
    }
    Ok(g)
}

/// Max and min over the top quarter of a series in grid order.
pub fn top_quarter_bounds(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = values.len().div_ceil(4);
    let tail = &values[values.len() - m..];
    let hi = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = tail.iter().cloned().fold(f64::INFINITY, f64::min);
    (hi, lo)
}

/// Least-squares slope of `ys` against `xs`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return f64::NAN;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// `H_μ(ξ_n)` for `n` in the grid, and the conditional-entropy rate
/// `H(ξ_n) - H(ξ_{n-1})` at the largest `n`.
///
/// Samples: `H` is the block entropy, `dH` the increment from `n - 1`.
pub fn block_entropy(sys: &System, xi: &ComputablePartition, ns: &[usize]) -> Result<EntropyReport> {
    let oracle = CylinderOracle::new(sys, xi)?;
    block_entropy_with(&oracle, ns)
}

pub fn block_entropy_with(oracle: &CylinderOracle, ns: &[usize]) -> Result<EntropyReport> {
    let grid = normalize_grid(ns)?;
    let mut cache: BTreeMap<usize, (f64, f64, &'static str)> = BTreeMap::new();
    let mut entropy = |n: usize| -> Result<(f64, f64, &'static str)> {
        if let Some(v) = cache.get(&n) {
            return Ok(*v);
        }
        let d = oracle.distribution(n)?;
        let err: f64 = d
            .masses
            .iter()
            .map(|m| {
                let e = m.error_f64();
                if e == 0.0 {
                    return 0.0;
                }
                let v = (m.value_f64() - e).max(f64::MIN_POSITIVE);
                e * (v.log2().abs() + std::f64::consts::LOG2_E)
            })
            .sum();
        let v = (d.entropy_f64(), err, d.method);
        cache.insert(n, v);
        Ok(v)
    };
    let xi = oracle.partition();
    let mut r = EntropyReport::new("block", &oracle.system().name, xi.name());
    let mut methods = Vec::new();
    for &n in &grid {
        let (h, e, m) = entropy(n)?;
        let (h0, e0, _) = entropy(n - 1)?;
        r.samples.push(Sample { param: "H".into(), n, value: h, error: e });
        r.samples.push(Sample { param: "dH".into(), n, value: h - h0, error: e + e0 });
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    let n = *grid.last().unwrap();
    let dh = r.value_at("dH", n).unwrap();
    r.rate = dh;
    r.rate_lower = dh;
    r.trend.push(TrendPoint { param: "H/n".into(), value: r.value_at("H", n).unwrap() / n as f64 });
    r.diagnostics.notes.push(format!("oracle={}", methods.join("+")));
    Ok(r)
}

/// `I_μ(x|ξ_n) = -log₂ μ(ξ_n(x))`, enclosed to within `2^-40`.
pub fn local_info(sys: &System, x: &Point, xi: &ComputablePartition, n: usize) -> Result<Interval> {
    if n == 0 {
        return Ok(Interval::point(Rational::zero()));
    }
    let w = code_orbit(sys, x, xi, n, CODING_BUDGET)?.to_symbols()?;
    let oracle = CylinderOracle::new(sys, xi)?;
    let m = oracle.measure(&w)?;
    let m = m.exact().ok_or_else(|| Error::Unsupported(format!("no exact cylinder oracle for {}", sys.name)))?.clone();
    if m.is_zero() {
        return Err(Error::ZeroMeasure);
    }
    let l = log2_enclosure(&m, 40)?;
    let (lo, hi) = l.into_bounds();
    Interval::new(-hi, -lo)
}

/// Compression rate of the symbolic orbit for each `n` of the grid; the
/// limsup and liminf proxies are the max and min over the top quarter.
pub fn ksym_estimate(sys: &System, x: &Point, xi: &ComputablePartition, ns: &[usize]) -> Result<EntropyReport> {
    ksym_estimate_with(default_compressor().as_ref(), sys, x, xi, ns)
}

pub fn ksym_estimate_with(
    c: &dyn PrefixFreeCompressor,
    sys: &System,
    x: &Point,
    xi: &ComputablePartition,
    ns: &[usize],
) -> Result<EntropyReport> {
    let grid = normalize_grid(ns)?;
    let n_max = *grid.last().unwrap();
    let word = code_orbit(sys, x, xi, n_max, CODING_BUDGET)?;
    let known = word.known_prefix();
    let mut r = EntropyReport::new("ksym", &sys.name, format!("{}|{}|{}", xi.name(), x.label(), c.id()));
    r.diagnostics.truncated_at = word.first_unknown();
    let bits = c.prefix_bits(&known, xi.len() as u8)?;
    for &n in &grid {
        if n <= known.len() {
            r.samples.push(Sample { param: "K/n".into(), n, value: bits[n - 1] as f64 / n as f64, error: 0.0 });
        } else {
            r.diagnostics.skipped.push(n);
        }
    }
    if r.samples.is_empty() {
        return Err(Error::UnknownSymbol(known.len()));
    }
    let values: Vec<f64> = r.samples.iter().map(|s| s.value).collect();
    (r.rate, r.rate_lower) = top_quarter_bounds(&values);
    Ok(r)
}

/// Quantized pseudo-orbit of `x` on the `2^-p` grid.
///
/// On interval spaces the `j`-th index is `⌊2^p·hi_j⌋` for an enclosure
/// `[lo_j, hi_j]` of `T^j x` narrower than `2^-p`, so the grid point lies
/// within `2^-p` of `T^j x`. On sequence spaces it is the `(p+1)`-prefix of
/// `σ^j x`, the word whose cylinder is the open ball of radius `2^-p`.
#[derive(Clone, Debug, PartialEq)]
pub struct PseudoOrbit {
    pub p: u32,
    pub points: Vec<IdealPoint>,
    /// Residual symbols `r_j` for `j ≥ 1`, see [`brudno_code`].
    pub residuals: Vec<u8>,
    pub alphabet: u8,
    /// Length of the coded first index.
    pub head_bits: usize,
}

fn delta_len_for_bitlen(l: u64) -> usize {
    (l - 1) as usize + 2 * (63 - l.leading_zeros()) as usize + 1
}

/// Orders signed residuals `0, 1, -1, 2, -2, …`.
fn zigzag(d: i64) -> u64 {
    if d > 0 {
        2 * d as u64 - 1
    } else {
        2 * d.unsigned_abs()
    }
}

/// Residual coding of the `2^-p` pseudo-orbit: the first index absolutely,
/// then `r_j = i_j - g(i_{j-1})` where `g(i)` is the grid index of the image
/// of the `i`-th grid point, reduced mod `2^p` on the circle and ordered by
/// [`zigzag`]. Sequence spaces send the new symbol of each window.
pub fn brudno_code(sys: &System, x: &Point, p: u32, n: usize) -> Result<PseudoOrbit> {
    if n == 0 {
        return Err(Error::Domain("pseudo-orbits need n ≥ 1".into()));
    }
    if let SpaceDescriptor::Cantor { alphabet } = sys.space {
        let windows: Vec<Vec<u8>> = orbit_iter(sys, x, n, p)?
            .map(|e| match e {
                Enclosure::Cylinder(w) => w,
                _ => unreachable!(),
            })
            .collect();
        let head = IdealPoint::Word(windows[0].clone()).index(&sys.space);
        let head_bits = delta_len_for_bitlen((head + 1u32).bits());
        let residuals = windows[1..].iter().map(|w| w[p as usize]).collect();
        return Ok(PseudoOrbit {
            p,
            points: windows.into_iter().map(IdealPoint::Word).collect(),
            residuals,
            alphabet,
            head_bits,
        });
    }
    if p >= 62 {
        return Err(Error::PrecisionBlowup { needed: p as u64, cap: 61 });
    }
    let circle = sys.space == SpaceDescriptor::Circle;
    let m = 1i64 << p;
    let scale = Rational::pow2(p as i64);
    let o = iterate(sys, x, n, p + GRID_GUARD_BITS)?;
    let idx: Vec<i64> = o
        .enclosures
        .iter()
        .map(|e| {
            let f = (e.interval().unwrap().hi() * &scale).floor().to_i64().unwrap();
            if circle {
                f.rem_euclid(m)
            } else {
                f.clamp(0, m)
            }
        })
        .collect();
    let alpha = match &sys.kind {
        MapKind::Rotation(RotationAngle::Computable(a)) => Some(a.approx_rational(p + 40)),
        _ => None,
    };
    let image = |i: i64| -> i64 {
        let s = Rational::dyadic(i, p as u64);
        let t = match &alpha {
            Some(a) => (&s + a).fract(),
            None => sys.apply_exact(&s).expect("zoo interval maps are exact on dyadics"),
        };
        let g = (&t * &scale).floor().to_i64().unwrap();
        if circle {
            g.rem_euclid(m)
        } else {
            g
        }
    };
    let mut z = Vec::with_capacity(n.saturating_sub(1));
    for j in 1..n {
        let mut d = idx[j] - image(idx[j - 1]);
        if circle {
            d = d.rem_euclid(m);
            if d > m / 2 {
                d -= m;
            }
        }
        z.push(zigzag(d));
    }
    let max = z.iter().copied().max().unwrap_or(0);
    if max >= 255 {
        return Err(Error::Unsupported(format!("residual {max} exceeds the symbol range")));
    }
    let alphabet = (max as u8 + 1).max(2);
    Ok(PseudoOrbit {
        p,
        points: idx.iter().map(|&i| IdealPoint::Dyadic(Rational::dyadic(i, p as u64))).collect(),
        residuals: z.into_iter().map(|r| r as u8).collect(),
        alphabet,
        head_bits: elias_len(idx[0] as u64 + 1),
    })
}

impl PseudoOrbit {
    /// Description length of the first `m` grid points for every `m ≤ n`.
    pub fn prefix_bits(&self, c: &dyn PrefixFreeCompressor) -> Result<Vec<usize>> {
        let mut out = vec![self.head_bits + c.bits(&[], self.alphabet)?];
        out.extend(c.prefix_bits(&self.residuals, self.alphabet)?.into_iter().map(|b| self.head_bits + b));
        Ok(out)
    }
}

/// Brudno complexity proxies: for each `ε = 2^-p`, the rate of the residual
/// code per grid value `n`; limsup and liminf proxies over the top quarter,
/// then the `ε`-trend. `rate` and `rate_lower` are taken at the smallest `ε`.
///
/// Samples are tagged `eps=2^-p`; trend points `upper eps=2^-p` and
/// `lower eps=2^-p`.
pub fn brudno_estimate(sys: &System, x: &Point, ps: &[u32], ns: &[usize]) -> Result<EntropyReport> {
    brudno_estimate_with(default_compressor().as_ref(), sys, x, ps, ns)
}

pub fn brudno_estimate_with(
    c: &dyn PrefixFreeCompressor,
    sys: &System,
    x: &Point,
    ps: &[u32],
    ns: &[usize],
) -> Result<EntropyReport> {
    let grid = normalize_grid(ns)?;
    let mut ps = ps.to_vec();
    ps.sort_unstable();
    ps.dedup();
    if ps.is_empty() {
        return Err(Error::Domain("empty ε-grid".into()));
    }
    let n_max = *grid.last().unwrap();
    let mut r = EntropyReport::new("brudno", &sys.name, format!("{}|{}", x.label(), c.id()));
    for &p in &ps {
        let tag = format!("eps=2^-{p}");
        let po = brudno_code(sys, x, p, n_max)?;
        let bits = po.prefix_bits(c)?;
        let mut values = Vec::new();
        for &n in &grid {
            let v = bits[n - 1] as f64 / n as f64;
            values.push(v);
            r.samples.push(Sample { param: tag.clone(), n, value: v, error: 0.0 });
        }
        let (hi, lo) = top_quarter_bounds(&values);
        r.trend.push(TrendPoint { param: format!("upper {tag}"), value: hi });
        r.trend.push(TrendPoint { param: format!("lower {tag}"), value: lo });
        (r.rate, r.rate_lower) = (hi, lo);
    }
    Ok(r)
}

/// Upper proxies from a Brudno report, in increasing `p`.
pub fn brudno_upper_trend(r: &EntropyReport) -> Vec<f64> {
    r.trend.iter().filter(|t| t.param.starts_with("upper")).map(|t| t.value).collect()
}

/// Whether the upper proxies are non-decreasing as `ε` shrinks, up to `tol`.
pub fn monotone_within(values: &[f64], tol: f64) -> bool {
    values.windows(2).all(|w| w[1] >= w[0] - tol)
}
