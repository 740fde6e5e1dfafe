//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::time::Instant;

use effdyn::complexity::{
    decode_tuple, elias_decode, elias_encode, elias_len, encode_tuple, gap_apply, gap_encode_diff, rank_decode,
    rank_encode, two_part_bits, two_part_decode, two_part_encode, BestOf, CodeWord, GapPatch, Lz77, Lz78,
    PrefixFreeCompressor, C_AUDIT,
};
use effdyn::dynamics::System;
use effdyn::entropy::{
    block_entropy, brudno_estimate, brudno_upper_trend, h1_estimate, ksym_estimate, monotone_within,
    verify_null_s_cover, NullSCover,
};
use effdyn::measure::{almost_decidable_radius, ComputableMeasure, Region, ZooMeasure};
use effdyn::numerics::{f_f64, j_f64, q, Rational};
use effdyn::space::{IdealPoint, Point, SpaceDescriptor};
use effdyn::stats::{birkhoff_avg, dyadic_family, recurrence_stat, typicality_test, Target, Verdict};
use effdyn::symbolic::{ComputablePartition, CylinderOracle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Collects the checks of one criterion.
struct Checks {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Checks { failures: Vec::new(), notes: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        if ok {
            self.notes.push(what);
        } else {
            self.failures.push(what);
        }
    }

    fn fail(&mut self, what: impl Into<String>) {
        self.failures.push(what.into());
    }
}

fn circle_seed(seed: u64) -> Point {
    Point::random(SpaceDescriptor::Circle, seed).unwrap()
}

fn h2(p: f64) -> f64 {
    -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
}

fn block_entropies(c: &mut Checks) {
    let doubling = System::doubling();
    let halves = ComputablePartition::halves(SpaceDescriptor::Circle);
    let ns: Vec<usize> = (1..=16).collect();
    match block_entropy(&doubling, &halves, &ns) {
        Ok(r) => {
            let oracle = CylinderOracle::new(&doubling, &halves).unwrap();
            for n in 1..=16 {
                let d = oracle.distribution(n).unwrap();
                let exact = d.masses.len() == 1 << n
                    && d.masses.iter().all(|m| m.exact() == Some(&Rational::pow2(-(n as i64))));
                c.check(exact, format!("doubling cylinders of length {n} have mass 2^-{n}"));
                let dh = r.value_at("dH", n).unwrap_or(f64::NAN);
                c.check(dh == 1.0, format!("doubling dH({n}) = {dh}"));
            }
        }
        Err(e) => c.fail(format!("doubling block entropy: {e}")),
    }

    let p = vec![vec![q(9, 10), q(1, 10)], vec![q(1, 2), q(1, 2)]];
    let markov = System::markov_shift(ZooMeasure::markov(p).unwrap()).unwrap();
    let target = 5.0 / 6.0 * h2(0.9) + 1.0 / 6.0 * h2(0.5);
    match block_entropy(&markov, &ComputablePartition::symbols(2), &(1..=12).collect::<Vec<_>>()) {
        Ok(r) => c.check((r.rate - target).abs() <= 1e-6, format!("markov rate {:.9} vs {target:.9}", r.rate)),
        Err(e) => c.fail(format!("markov block entropy: {e}")),
    }

    let rotation = System::golden_rotation();
    match block_entropy(&rotation, &halves, &[1024, 2048, 4096]) {
        Ok(r) => c.check(r.rate <= 0.05, format!("rotation rate {:.5} at n=4096", r.rate)),
        Err(e) => c.fail(format!("rotation block entropy: {e}")),
    }
}

const KSYM_N: usize = 1 << 14;

fn ksym_grid() -> Vec<usize> {
    (10..=14).map(|e| 1 << e).collect()
}

fn ksym(c: &mut Checks) {
    let halves = ComputablePartition::halves(SpaceDescriptor::Circle);
    let doubling = System::doubling();
    let rates: Vec<(u64, Result<f64, String>)> = (0..6u64)
        .into_par_iter()
        .map(|s| {
            (
                s,
                ksym_estimate(&doubling, &circle_seed(s), &halves, &ksym_grid())
                    .map(|r| r.rate)
                    .map_err(|e| e.to_string()),
            )
        })
        .collect();
    for (s, r) in rates {
        match r {
            Ok(v) => c.check((0.85..=1.1).contains(&v), format!("doubling seed {s}: {v:.4}")),
            Err(e) => c.fail(format!("doubling seed {s}: {e}")),
        }
    }
    let rotation = System::golden_rotation();
    for s in 0..3u64 {
        match ksym_estimate(&rotation, &circle_seed(s), &halves, &ksym_grid()) {
            Ok(r) => c.check(r.rate <= 0.12, format!("rotation seed {s}: {:.4}", r.rate)),
            Err(e) => c.fail(format!("rotation seed {s}: {e}")),
        }
    }
    for (a, b) in [(1, 3), (1, 5), (1, 7), (5, 31)] {
        let x = Point::rational(SpaceDescriptor::Circle, q(a, b)).unwrap();
        match ksym_estimate(&doubling, &x, &halves, &[KSYM_N]) {
            Ok(r) => c.check(r.rate <= 0.05, format!("periodic {a}/{b}: {:.4}", r.rate)),
            Err(e) => c.fail(format!("periodic {a}/{b}: {e}")),
        }
    }
}

const BRUDNO_PS: [u32; 3] = [4, 6, 8];
const BRUDNO_N: usize = 1 << 12;

fn brudno_grid() -> Vec<usize> {
    (8..=12).map(|e| 1 << e).collect()
}

fn brudno(c: &mut Checks) {
    let doubling = System::doubling();
    let halves = ComputablePartition::halves(SpaceDescriptor::Circle);
    let results: Vec<_> = (0..4u64)
        .into_par_iter()
        .map(|s| {
            let x = circle_seed(s);
            let b = brudno_estimate(&doubling, &x, &BRUDNO_PS, &brudno_grid());
            let k = ksym_estimate(&doubling, &x, &halves, &ksym_grid());
            (s, b, k)
        })
        .collect();
    for (s, b, k) in results {
        let (b, k) = match (b, k) {
            (Ok(b), Ok(k)) => (b, k),
            (Err(e), _) | (_, Err(e)) => {
                c.fail(format!("seed {s}: {e}"));
                continue;
            }
        };
        let at6 = b.value_at("eps=2^-6", BRUDNO_N).unwrap_or(f64::NAN);
        c.check((0.85..=1.15).contains(&at6), format!("seed {s}: rate {at6:.4} at eps=2^-6"));
        let upper = brudno_upper_trend(&b);
        c.check(
            upper.len() == 3 && monotone_within(&upper, 0.05),
            format!("seed {s}: upper proxies {upper:.4?} over p=4,6,8"),
        );
        c.check((k.rate - at6).abs() <= 0.2, format!("seed {s}: |ksym {:.4} - brudno {at6:.4}| <= 0.2", k.rate));
    }
}

/// `(system, p grid, n grid, target, tolerance)`; a negative tolerance means
/// an upper bound of `target + |tol|` only.
fn h1_cases() -> Vec<(System, Vec<u32>, Vec<usize>, f64, f64)> {
    vec![
        (System::shift(2), vec![1, 2], (4..=12).collect(), 1.0, 0.05),
        (System::shift(3), vec![1], (2..=8).collect(), 3f64.log2(), 0.05),
        (System::doubling(), vec![2, 3], (4..=12).collect(), 1.0, 0.1),
        (System::golden_rotation(), vec![2, 3], (4..=12).collect(), 0.0, -0.05),
    ]
}

fn h1(c: &mut Checks) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    for (sys, ps, ns, target, tol) in h1_cases() {
        let t = Instant::now();
        match h1_estimate(&sys, &ps, &ns) {
            Ok(r) => {
                let ok = if tol >= 0.0 { (r.rate - target).abs() <= tol } else { r.rate <= target - tol };
                c.check(ok, format!("{}: {:.4} ({:.1}s)", sys.name, r.rate, t.elapsed().as_secs_f64()));
                c.check(r.diagnostics.verified == Some(true), format!("{}: separatedness verified", sys.name));
                out.push((sys.name.clone(), r.rate));
            }
            Err(e) => c.fail(format!("{}: {e}", sys.name)),
        }
    }
    out
}

fn ordering(c: &mut Checks, h1_values: &[(String, f64)]) {
    let cases: Vec<(System, Box<dyn Fn(u64) -> Point + Sync>)> = vec![
        (System::doubling(), Box::new(circle_seed)),
        (System::golden_rotation(), Box::new(circle_seed)),
        (System::shift(2), Box::new(|s| Point::random(SpaceDescriptor::cantor(2), s).unwrap())),
        (System::shift(3), Box::new(|s| Point::random(SpaceDescriptor::cantor(3), s).unwrap())),
    ];
    for (sys, point) in &cases {
        let Some(&(_, h)) = h1_values.iter().find(|(name, _)| *name == sys.name) else {
            c.fail(format!("{}: no h1 value", sys.name));
            continue;
        };
        let results: Vec<_> = (0..4u64)
            .into_par_iter()
            .map(|s| (s, brudno_estimate(sys, &point(s), &BRUDNO_PS, &brudno_grid())))
            .collect();
        for (s, r) in results {
            match r {
                Ok(r) => {
                    let upper = brudno_upper_trend(&r).into_iter().fold(f64::NEG_INFINITY, f64::max);
                    c.check(upper <= h + 0.15, format!("{} seed {s}: brudno {upper:.4} vs h1 {h:.4}", sys.name));
                }
                Err(e) => c.fail(format!("{} seed {s}: {e}", sys.name)),
            }
        }
    }
}

fn null_cover(c: &mut Checks) {
    let sys = System::doubling();
    let depths: Vec<usize> = (4..=10).collect();
    let cover = match NullSCover::from_spanning(&sys, &depths, 2, 1.2) {
        Ok(cv) => cv,
        Err(e) => return c.fail(format!("cover construction: {e}")),
    };
    let sample: Vec<Point> = (1000..1100).map(circle_seed).collect();
    match verify_null_s_cover(&cover, &sys, &sample, 6, 32.0) {
        Ok(chk) => {
            let inc = chk.increments();
            let ratio_ok = inc.windows(2).all(|w| w[1] < w[0] && w[1] / w[0] <= 2f64.powf(-0.2) + 1e-9);
            // Geometric tail beyond the deepest level.
            let tail = inc.last().copied().unwrap_or(0.0) * 2f64.powf(-0.2) / (1.0 - 2f64.powf(-0.2));
            c.check(
                ratio_ok && chk.weight_ok && chk.weight + tail <= 32.0,
                format!("s=1.2: weight {:.3}, tail bound {:.3}, increments {inc:.3?}", chk.weight, tail),
            );
            c.check(
                chk.verified() && chk.covered_points == 100,
                format!("s=1.2: {} of 100 points covered at every k <= 6", chk.covered_points),
            );
        }
        Err(e) => c.fail(format!("s=1.2 verification: {e}")),
    }
    match NullSCover::new(cover.entries().to_vec(), 0.8) {
        Ok(low) => {
            let w = low.weights_by_depth();
            let inc: Vec<f64> = w
                .iter()
                .scan(0.0, |prev, &(_, x)| {
                    let d = x - *prev;
                    *prev = x;
                    Some(d)
                })
                .collect();
            c.check(inc.windows(2).all(|p| p[1] > p[0]), format!("s=0.8: increments grow {inc:.3?}"));
        }
        Err(e) => c.fail(format!("s=0.8 cover: {e}")),
    }
}

fn discrepancy(c: &mut Checks) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = f64::NEG_INFINITY;
    let mut failures = 0;
    for i in 0..200 {
        let n = rng.gen_range(16..4096usize);
        let alpha: f64 = rng.gen_range(0.001..0.5);
        let v: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2u8)).collect();
        let budget = (alpha * n as f64).floor() as usize;
        let flips = rng.gen_range(0..=budget);
        let mut u = v.clone();
        let mut positions: Vec<usize> = (0..n).collect();
        for j in 0..flips {
            let t = rng.gen_range(j..n);
            positions.swap(j, t);
            u[positions[j]] ^= 1;
        }
        let patch = match gap_encode_diff(&v, &u, 2) {
            Ok(p) => p,
            Err(e) => {
                c.fail(format!("instance {i}: {e}"));
                continue;
            }
        };
        let bits_u = two_part_bits(&v, 2, &patch).unwrap();
        let bits_v = BestOf.bits(&v, 2).unwrap();
        let bound = n as f64 * alpha * f_f64(1.0 / alpha) + C_AUDIT as f64;
        let diff = (bits_u as f64 - bits_v as f64).abs();
        worst = worst.max(diff - bound);
        let round_trip = gap_apply(&v, 2, &patch).ok() == Some(u.clone())
            && two_part_decode(&two_part_encode(&v, &u, 2).unwrap()).ok() == Some(u.clone())
            && GapPatch::between(&v, &u).unwrap().diffs.len() == flips;
        if diff > bound || !round_trip {
            failures += 1;
            c.fail(format!(
                "instance {i}: n={n} alpha={alpha:.4} diff={diff} bound={bound:.2} round_trip={round_trip}"
            ));
        }
    }
    c.check(failures == 0, format!("200 instances, worst slack {:.2} bits", -worst));
}

fn radius(c: &mut Checks) {
    let unit = SpaceDescriptor::UnitInterval;
    let cases: Vec<(Vec<(Rational, Rational)>, Rational, (Rational, Rational))> = vec![
        (vec![(q(1, 2), q(3, 4))], q(1, 2), (q(1, 5), q(2, 5))),
        (vec![(q(1, 4), q(1, 10)), (q(1, 4), q(4, 5)), (q(1, 8), q(13, 20))], q(1, 2), (q(1, 8), q(1, 2))),
        (vec![(q(1, 3), q(1, 3)), (q(1, 3), q(2, 3))], q(1, 2), (q(1, 10), q(3, 10))),
        (vec![(q(1, 2), q(7, 8))], q(1, 4), (q(1, 2), q(3, 4))),
    ];
    let depth = 12;
    for (i, (atoms, center, window)) in cases.into_iter().enumerate() {
        let lebesgue_weight = Rational::one() - atoms.iter().map(|(w, _)| w.clone()).sum::<Rational>();
        let mut parts = vec![(lebesgue_weight, ZooMeasure::lebesgue(unit.clone()))];
        parts.extend(atoms.iter().map(|(w, a)| (w.clone(), ZooMeasure::dirac(unit.clone(), a.clone()))));
        let mu = ZooMeasure::mixture(parts).unwrap();
        let cpt = IdealPoint::Dyadic(center.clone());
        match almost_decidable_radius(&mu, &cpt, window, depth) {
            Ok((r, cert)) => {
                c.check(cert.stages.len() == depth, format!("case {i}: {} stages", cert.stages.len()));
                let (lo, hi) = cert.deepest();
                for (w, a) in &atoms {
                    let rho = (a - &center).abs();
                    c.check(
                        r != rho && !(lo <= &rho && &rho <= hi),
                        format!("case {i}: radius avoids sphere {rho} of atom weight {w}"),
                    );
                }
                for s in &cert.stages {
                    let exact = Rational::one() - mu.exact(&Region::annulus_complement(&cpt, &s.lo, &s.hi)).unwrap();
                    let bound = Rational::pow2(1 - s.stage as i64);
                    c.check(
                        exact < bound && s.annulus_upper() < bound && exact <= s.annulus_upper(),
                        format!("case {i} stage {}: annulus mass {exact} < 2^{}", s.stage, 1 - s.stage as i64),
                    );
                }
            }
            Err(e) => c.fail(format!("case {i}: {e}")),
        }
    }
}

fn statistics(c: &mut Checks) {
    let rotation = System::golden_rotation();
    let origin = Point::rational(SpaceDescriptor::Circle, Rational::zero()).unwrap();
    let half = Target::half_open(Rational::zero(), q(1, 2));
    match birkhoff_avg(&rotation, &origin, &half, 10_000) {
        Ok(cnt) => {
            let avg = cnt.average().to_f64();
            c.check((avg - 0.5).abs() <= 0.01, format!("rotation average {avg} ({} undecided)", cnt.undecided));
        }
        Err(e) => c.fail(format!("birkhoff: {e}")),
    }
    match recurrence_stat(&rotation, &origin, 70) {
        Ok(r) => c.check(r.to_f64() <= 0.0051, format!("recurrence at n=70: {:.6}", r.to_f64())),
        Err(e) => c.fail(format!("recurrence: {e}")),
    }
    let family = dyadic_family(&ZooMeasure::lebesgue(SpaceDescriptor::Circle), 4).unwrap();
    let third = Point::rational(SpaceDescriptor::Circle, q(1, 3)).unwrap();
    match typicality_test(&System::doubling(), &third, &family, 100_000, 0.02) {
        Ok(t) => c.check(
            t.verdict == Verdict::Fail && t.max_residual >= 0.1,
            format!("periodic control: {:?} with residual {:.4}", t.verdict, t.max_residual),
        ),
        Err(e) => c.fail(format!("typicality: {e}")),
    }
}

/// All complete codewords of length at most `max_len` accepted by `decode`
/// and reproduced by re-encoding.
fn codewords<T>(
    max_len: usize,
    decode: impl Fn(&CodeWord) -> Option<T> + Sync,
    encode: impl Fn(&T) -> Option<CodeWord> + Sync,
) -> Vec<CodeWord> {
    (0..=max_len)
        .into_par_iter()
        .flat_map_iter(|len| {
            let (decode, encode) = (&decode, &encode);
            (0u64..1 << len).filter_map(move |v| {
                let cw = CodeWord::from_u64(v, len);
                let t = decode(&cw)?;
                (encode(&t).as_ref() == Some(&cw)).then_some(cw)
            })
        })
        .collect()
}

fn hygiene(c: &mut Checks) {
    const L: usize = 20;
    let mut families: Vec<(&str, Vec<CodeWord>)> = vec![
        ("elias", codewords(L, |cw| elias_decode(cw).ok(), |&n| elias_encode(n).ok())),
        ("tuple", codewords(L, |cw| decode_tuple(cw).ok(), |t| encode_tuple(t).ok())),
        ("rank", codewords(L, |cw| rank_decode(cw).ok(), |&(n, r)| rank_encode(n, r).ok())),
    ];
    for comp in [&Lz78 as &dyn PrefixFreeCompressor, &Lz77, &BestOf] {
        families.push((comp.id(), codewords(L, |cw| comp.decode(cw).ok(), |(w, k)| comp.encode(w, *k).ok())));
    }
    for (name, cws) in &families {
        c.check(
            !cws.is_empty() && CodeWord::is_prefix_free(cws),
            format!("{name}: {} codewords prefix-free", cws.len()),
        );
        let kraft = CodeWord::kraft_sum(cws);
        c.check(kraft <= 1.0, format!("{name}: Kraft sum {kraft:.6}"));
    }
    let mut worst = f64::NEG_INFINITY;
    for n in 1..=1_000_000u64 {
        let slack = elias_len(n) as f64 - j_f64((n as f64).log2()) - 4.0;
        worst = worst.max(slack);
    }
    c.check(worst <= 1e-9, format!("|elias(n)| - J(log2 n) - 4 <= {worst:.3} for n <= 10^6"));
}

fn main() {
    let mut all_ok = true;
    let mut run = |id: usize, title: &str, f: &mut dyn FnMut(&mut Checks)| {
        let t = Instant::now();
        let mut c = Checks::new();
        f(&mut c);
        let ok = c.failures.is_empty();
        all_ok &= ok;
        let status = if ok { "PASS" } else { "FAIL" };
        println!("{status} criterion {id:>2} {title} ({:.1}s)", t.elapsed().as_secs_f64());
        for f in &c.failures {
            println!("       failed: {f}");
        }
        if std::env::var_os("ACCEPTANCE_VERBOSE").is_some() {
            for n in &c.notes {
                println!("       ok: {n}");
            }
        }
    };
    let mut h1_values = Vec::new();
    run(1, "block entropy rates", &mut block_entropies);
    run(2, "symbolic complexity rates", &mut ksym);
    run(3, "pseudo-orbit complexity", &mut brudno);
    run(4, "topological entropy h1", &mut |c| h1_values = h1(c));
    run(5, "pseudo-orbit complexity below h1", &mut |c| ordering(c, &h1_values));
    run(6, "null s-cover dichotomy", &mut null_cover);
    run(7, "discrepancy bound on patches", &mut discrepancy);
    run(8, "almost decidable radius", &mut radius);
    run(9, "Birkhoff, recurrence, typicality", &mut statistics);
    run(10, "code family hygiene", &mut hygiene);
    if !all_ok {
        std::process::exit(1);
    }
}
