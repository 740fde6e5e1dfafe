use super::{Interval, Rational};
use crate::error::{Error, Result};

/// Precision ceiling for the working width of [`log2_enclosure`].
const MAX_WORK_BITS: u64 = 1 << 16;

/// Enclosure of `log2 x` of width at most `2^-bits`.
///
/// Powers of two are returned exactly. Otherwise the fractional part of the
/// logarithm is produced one binary digit at a time: with `y ∈ [1,2)`, the
/// next digit is 1 iff `y² ≥ 2`. The squares are carried as dyadic intervals
/// rounded outward, and the working precision is doubled whenever a digit
/// cannot be decided.
pub fn log2_enclosure(x: &Rational, bits: u64) -> Result<Interval> {
    if !x.is_positive() {
        return Err(Error::Domain(format!("log2 of non-positive value {x}")));
    }
    let m = x.floor_log2();
    let y = x * &Rational::pow2(-m);
    let base = Rational::from_integer(m);
    if y == Rational::one() {
        return Ok(Interval::point(base));
    }
    let two = Rational::from_integer(2);
    let mut work = bits + 24;
    loop {
        let mut lo = y.round_down(work);
        let mut hi = y.round_up(work);
        let mut frac = Rational::zero();
        let mut decided = true;
        for i in 1..=bits + 1 {
            lo = (&lo * &lo).round_down(work);
            hi = (&hi * &hi).round_up(work);
            if lo >= two {
                frac = frac + Rational::pow2(-(i as i64));
                lo = &lo * &Rational::pow2(-1);
                hi = &hi * &Rational::pow2(-1);
            } else if hi >= two {
                decided = false;
                break;
            }
        }
        if decided {
            // Remaining fraction lies in [0, 2^-(bits+1)).
            let lo = &base + &frac;
            let hi = &lo + &Rational::pow2(-(bits as i64 + 1));
            return Interval::new(lo, hi);
        }
        work *= 2;
        if work > MAX_WORK_BITS {
            return Err(Error::PrecisionBlowup { needed: work, cap: MAX_WORK_BITS });
        }
    }
}

/// Enclosure of `log2` over a positive interval.
pub fn log2_interval(x: &Interval, bits: u64) -> Result<Interval> {
    let lo = log2_enclosure(x.lo(), bits)?;
    let hi = if x.is_degenerate() { lo.clone() } else { log2_enclosure(x.hi(), bits)? };
    Interval::new(lo.lo().clone(), hi.hi().clone())
}

/// `J(x) = x + 2·log2(x+1)` over an interval with `x ≥ 0`.
pub fn j_interval(x: &Interval, bits: u64) -> Result<Interval> {
    if x.lo().is_negative() {
        return Err(Error::Domain(format!("J undefined at {x}")));
    }
    let l = log2_interval(&x.add_scalar(&Rational::one()), bits + 2)?;
    Ok(x.add(&l.scale(&Rational::from_integer(2))))
}

/// `f(x) = log2 x + 1 + 2·log2(log2 x + 1)` over an interval with `x ≥ 1`.
pub fn f_interval(x: &Interval, bits: u64) -> Result<Interval> {
    if x.lo() < &Rational::one() {
        return Err(Error::Domain(format!("f undefined at {x}")));
    }
    let lx = log2_interval(x, bits + 3)?;
    let inner = lx.add_scalar(&Rational::one());
    let ll = log2_interval(&inner, bits + 3)?;
    Ok(inner.add(&ll.scale(&Rational::from_integer(2))))
}

fn tighten(eval: impl Fn(u64) -> Result<Interval>, target: u64) -> Result<Interval> {
    let goal = Rational::pow2(-(target as i64));
    let mut bits = target + 4;
    loop {
        let iv = eval(bits)?;
        if iv.width() <= goal {
            return Ok(iv);
        }
        bits *= 2;
    }
}

/// Enclosure of `f(x)` of width at most `2^-20`.
pub fn eval_f(x: &Rational) -> Result<Interval> {
    eval_f_prec(x, 20)
}

/// Enclosure of `f(x)` of width at most `2^-bits`.
pub fn eval_f_prec(x: &Rational, bits: u64) -> Result<Interval> {
    let p = Interval::point(x.clone());
    tighten(|b| f_interval(&p, b), bits)
}

/// Enclosure of `J(x)` of width at most `2^-20`.
pub fn eval_j(x: &Rational) -> Result<Interval> {
    let p = Interval::point(x.clone());
    tighten(|b| j_interval(&p, b), 20)
}

/// Floating-point `f`, for diagnostics and plotting only.
pub fn f_f64(x: f64) -> f64 {
    let l = x.log2();
    l + 1.0 + 2.0 * (l + 1.0).log2()
}

/// Floating-point `J`, for diagnostics only.
pub fn j_f64(x: f64) -> f64 {
    x + 2.0 * (x + 1.0).log2()
}
