//! Self-delimiting integer codes, prefix-free Lempel–Ziv compressors used as a
//! proxy for prefix complexity, gap patches and the deficiency statistic.

mod bits;
mod gap;
mod lz77;
mod lz78;

use std::sync::Arc;

pub use bits::{BitReader, BitWriter, CodeWord};
pub use gap::{
    gap_apply, gap_encode, gap_encode_diff, two_part_bits, two_part_decode, two_part_encode, GapPatch, C_AUDIT,
    C_AUDIT_MAX_LEN,
};
pub use lz77::{longest_previous_factor, suffix_array, Lz77};
pub use lz78::Lz78;

use crate::error::{Error, Result};
use crate::numerics::{log2_enclosure, Rational};
use crate::symbolic::SymbolicWord;

/// Largest word length a decoder accepts from a header.
pub const MAX_DECODE_LEN: u64 = 1 << 28;

/// Elias delta code of `n ≥ 1`.
pub fn elias_encode(n: u64) -> Result<CodeWord> {
    let mut w = BitWriter::new();
    w.elias(n)?;
    Ok(w.finish())
}

pub fn elias_decode(c: &CodeWord) -> Result<u64> {
    let mut r = BitReader::new(c);
    let n = r.elias()?;
    r.expect_end()?;
    Ok(n)
}

/// `|δ(n)| = ⌊log n⌋ + 2⌊log(⌊log n⌋ + 1)⌋ + 1`.
pub fn elias_len(n: u64) -> usize {
    assert!(n >= 1);
    let l = 63 - n.leading_zeros() as usize;
    let m = 63 - ((l + 1) as u64).leading_zeros() as usize;
    l + 2 * m + 1
}

/// Length of the truncated binary code of a value in `0..size`.
pub fn truncated_len(v: u64, size: u64) -> usize {
    if size <= 1 {
        return 0;
    }
    let b = 63 - size.leading_zeros() as u64;
    let u = (1u64 << (b + 1)) - size;
    if v < u {
        b as usize
    } else {
        b as usize + 1
    }
}

/// Self-delimiting code of a tuple: `δ(len + 1)` then `δ(k_i)` for each part.
pub fn encode_tuple(parts: &[u64]) -> Result<CodeWord> {
    let mut w = BitWriter::new();
    w.elias(parts.len() as u64 + 1)?;
    for &p in parts {
        w.elias(p)?;
    }
    Ok(w.finish())
}

pub fn decode_tuple(c: &CodeWord) -> Result<Vec<u64>> {
    let mut r = BitReader::new(c);
    let n = r.elias()? - 1;
    if n > r.remaining() as u64 {
        return Err(Error::Decode("tuple longer than its code".into()));
    }
    let out = (0..n).map(|_| r.elias()).collect::<Result<Vec<u64>>>()?;
    r.expect_end()?;
    Ok(out)
}

/// Code of the element of rank `rank` in a listed set `E_n`: `δ(n)` then `δ(rank + 1)`.
pub fn rank_encode(n: u64, rank: u64) -> Result<CodeWord> {
    let mut w = BitWriter::new();
    w.elias(n)?;
    w.elias(rank + 1)?;
    Ok(w.finish())
}

pub fn rank_decode(c: &CodeWord) -> Result<(u64, u64)> {
    let mut r = BitReader::new(c);
    let n = r.elias()?;
    let rank = r.elias()? - 1;
    r.expect_end()?;
    Ok((n, rank))
}

fn check_symbols(w: &[u8], k: u8) -> Result<()> {
    if k == 0 {
        return Err(Error::Domain("alphabet must be nonempty".into()));
    }
    match w.iter().position(|&s| s >= k) {
        Some(i) => Err(Error::Domain(format!("symbol {} at {i} outside alphabet {k}", w[i]))),
        None => Ok(()),
    }
}

/// A compressor whose image is a prefix-free set of codewords.
pub trait PrefixFreeCompressor: Send + Sync {
    fn id(&self) -> &'static str;
    fn write(&self, w: &[u8], k: u8, out: &mut BitWriter) -> Result<()>;
    /// Reads exactly one codeword.
    fn read(&self, r: &mut BitReader) -> Result<(Vec<u8>, u8)>;

    fn encode(&self, w: &[u8], k: u8) -> Result<CodeWord> {
        check_symbols(w, k)?;
        let mut out = BitWriter::new();
        self.write(w, k, &mut out)?;
        Ok(out.finish())
    }

    fn decode(&self, c: &CodeWord) -> Result<(Vec<u8>, u8)> {
        let mut r = BitReader::new(c);
        let v = self.read(&mut r)?;
        r.expect_end()?;
        Ok(v)
    }

    fn bits(&self, w: &[u8], k: u8) -> Result<usize> {
        Ok(self.encode(w, k)?.len())
    }

    /// Code length of every prefix `w[..m]`, `m = 1..=|w|`.
    fn prefix_bits(&self, w: &[u8], k: u8) -> Result<Vec<usize>> {
        (1..=w.len()).map(|m| self.bits(&w[..m], k)).collect()
    }
}

/// One selector bit, then the shorter of the LZ78 and LZ77 codes (LZ78 on ties).
#[derive(Clone, Copy, Debug, Default)]
pub struct BestOf;

impl PrefixFreeCompressor for BestOf {
    fn id(&self) -> &'static str {
        "best-of"
    }

    fn write(&self, w: &[u8], k: u8, out: &mut BitWriter) -> Result<()> {
        let a = Lz78.encode(w, k)?;
        let b = Lz77.encode(w, k)?;
        if a.len() <= b.len() {
            out.push(false);
            out.append(&a);
        } else {
            out.push(true);
            out.append(&b);
        }
        Ok(())
    }

    fn read(&self, r: &mut BitReader) -> Result<(Vec<u8>, u8)> {
        if r.bit()? {
            Lz77.read(r)
        } else {
            Lz78.read(r)
        }
    }

    fn bits(&self, w: &[u8], k: u8) -> Result<usize> {
        Ok(1 + Lz78.bits(w, k)?.min(Lz77.bits(w, k)?))
    }

    fn prefix_bits(&self, w: &[u8], k: u8) -> Result<Vec<usize>> {
        let a = Lz78.prefix_bits(w, k)?;
        let b = Lz77.prefix_bits(w, k)?;
        Ok(a.into_iter().zip(b).map(|(x, y)| 1 + x.min(y)).collect())
    }
}

/// The compressor used by the estimators.
pub fn default_compressor() -> Arc<dyn PrefixFreeCompressor> {
    Arc::new(BestOf)
}

pub fn compressor_by_id(id: &str) -> Option<Arc<dyn PrefixFreeCompressor>> {
    match id {
        "best-of" => Some(Arc::new(BestOf)),
        "lz78" => Some(Arc::new(Lz78)),
        "lz77" => Some(Arc::new(Lz77)),
        _ => None,
    }
}

/// `|encode(w)| / |w|` with the default compressor.
pub fn lz_rate(w: &[u8], k: u8) -> Result<Rational> {
    lz_rate_with(&BestOf, w, k)
}

pub fn lz_rate_with(c: &dyn PrefixFreeCompressor, w: &[u8], k: u8) -> Result<Rational> {
    if w.is_empty() {
        return Err(Error::Domain("rate of the empty word".into()));
    }
    Ok(Rational::new(c.bits(w, k)? as i64, w.len() as i64))
}

pub fn lz_rate_word(w: &SymbolicWord) -> Result<Rational> {
    lz_rate(&w.to_symbols()?, w.alphabet())
}

/// Outcome of [`deficiency_proxy`].
#[derive(Clone, Debug, PartialEq)]
pub struct Deficiency {
    /// `max_m (-log₂ μ[w_{1:m}] - |code(w_{1:m})|)`, `+∞` when some prefix has measure zero.
    pub value: f64,
    /// Prefix length attaining the maximum.
    pub argmax: usize,
    pub infinite: bool,
}

/// Screening statistic `max_m (-log₂ μ[w_{1:m}] - |code(w_{1:m})|)` over all
/// prefixes, with exact cylinder masses from `mu`.
pub fn deficiency_proxy(
    w: &[u8],
    k: u8,
    mu: &dyn Fn(&[u8]) -> Result<Rational>,
    compressor: &dyn PrefixFreeCompressor,
) -> Result<Deficiency> {
    if w.is_empty() {
        return Err(Error::Domain("deficiency of the empty word".into()));
    }
    check_symbols(w, k)?;
    let lens = compressor.prefix_bits(w, k)?;
    let mut best = Deficiency { value: f64::NEG_INFINITY, argmax: 0, infinite: false };
    for m in 1..=w.len() {
        let mass = mu(&w[..m])?;
        if !mass.is_positive() {
            return Ok(Deficiency { value: f64::INFINITY, argmax: m, infinite: true });
        }
        let info = log2_enclosure(&mass.recip(), 24)?.midpoint().to_f64();
        let d = info - lens[m - 1] as f64;
        if d > best.value {
            best.value = d;
            best.argmax = m;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{j_f64, q};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn coin(n: usize, seed: u64) -> Vec<u8> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(0..2u8)).collect()
    }

    // Oracle: the standard Elias delta construction as a string.
    fn delta_string(n: u64) -> String {
        let bin = format!("{n:b}");
        let nlen = format!("{:b}", bin.len());
        format!("{}{}{}", "0".repeat(nlen.len() - 1), nlen, &bin[1..])
    }

    #[test]
    fn elias_examples() {
        assert!(elias_encode(1).unwrap().len() <= 4);
        assert!(elias_encode(100).unwrap().len() <= 16);
        assert_eq!(elias_encode(100).unwrap().len(), 11);
        assert!(elias_encode(0).is_err());
        for n in 1..=10_000u64 {
            let c = elias_encode(n).unwrap();
            assert_eq!(elias_decode(&c).unwrap(), n);
            assert_eq!(c.len(), elias_len(n));
            if n < 600 {
                assert_eq!(c.to_string(), delta_string(n));
            }
        }
        assert_eq!(elias_decode(&elias_encode(u64::MAX).unwrap()).unwrap(), u64::MAX);
    }

    #[test]
    fn elias_length_bound() {
        for n in 1..=1_000_000u64 {
            assert!(elias_len(n) as f64 <= j_f64((n as f64).log2()) + 1.0 + 1e-9, "{n}");
        }
    }

    #[test]
    fn truncated_binary() {
        assert_eq!((0..5).map(|v| truncated_len(v, 5)).collect::<Vec<_>>(), vec![2, 2, 2, 3, 3]);
        assert_eq!(truncated_len(0, 1), 0);
        let mut w = BitWriter::new();
        for v in 0..7 {
            w.truncated(v, 7);
        }
        let c = w.finish();
        let mut r = BitReader::new(&c);
        for v in 0..7 {
            assert_eq!(r.truncated(7).unwrap(), v);
        }
        r.expect_end().unwrap();
    }

    #[test]
    fn rate_examples() {
        let zeros = vec![0u8; 4096];
        assert!(lz_rate(&zeros, 2).unwrap() <= q(8, 100));
        let alt: Vec<u8> = (0..4096).map(|i| (i % 2) as u8).collect();
        assert!(lz_rate(&alt, 2).unwrap() <= q(8, 100));
        let r = lz_rate(&coin(1 << 16, 2024), 2).unwrap().to_f64();
        assert!((0.9..=1.15).contains(&r), "{r}");
        // Golden value for this seed.
        assert_eq!(BestOf.bits(&coin(1 << 16, 2024), 2).unwrap(), GOLDEN_COIN_BITS);
        let w: SymbolicWord = "01?".parse().unwrap();
        assert_eq!(lz_rate_word(&w), Err(Error::UnknownSymbol(2)));
    }

    const GOLDEN_COIN_BITS: usize = 67128;

    #[test]
    fn tuple_chain_bound() {
        let parts = [1u64, 5, 100, 7, 65_536];
        let c = encode_tuple(&parts).unwrap();
        let sum: usize = parts.iter().map(|&p| elias_len(p)).sum();
        assert_eq!(c.len(), sum + elias_len(parts.len() as u64 + 1));
        assert_eq!(decode_tuple(&c).unwrap(), parts);
    }

    fn binom(n: u64, m: u64) -> u64 {
        (0..m).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
    }

    // Lexicographic rank among words of length n with m ones.
    fn rank_of(w: &[u8]) -> u64 {
        let n = w.len() as u64;
        let mut ones = w.iter().filter(|&&b| b == 1).count() as u64;
        let mut r = 0;
        for (i, &b) in w.iter().enumerate() {
            if b == 1 {
                r += binom(n - i as u64 - 1, ones);
                ones -= 1;
            }
        }
        r
    }

    #[test]
    fn stratified_rank_code() {
        let (n, m) = (14usize, 5u64);
        let listed: Vec<Vec<u8>> = (0u32..1 << n)
            .filter(|x| x.count_ones() as u64 == m)
            .map(|x| (0..n).map(|i| (x >> (n - 1 - i) & 1) as u8).collect())
            .collect();
        let size = listed.len() as f64;
        for (idx, w) in listed.iter().enumerate() {
            assert_eq!(rank_of(w), idx as u64);
            let c = rank_encode(n as u64, idx as u64).unwrap();
            assert_eq!(rank_decode(&c).unwrap(), (n as u64, idx as u64));
            assert!(c.len() as f64 <= j_f64(size.log2()) + elias_len(n as u64) as f64 + 1.0 + 1e-9);
        }
    }

    #[test]
    fn deficiency_examples() {
        let uniform = |w: &[u8]| Ok(Rational::pow2(-(w.len() as i64)));
        let d = deficiency_proxy(&[0u8; 1024], 2, &uniform, &BestOf).unwrap();
        assert!(d.value >= 900.0, "{d:?}");
        let w = coin(1 << 12, 77);
        let d = deficiency_proxy(&w, 2, &uniform, &BestOf).unwrap();
        assert!(d.value <= 0.2 * 4096.0, "{d:?}");
        let d = deficiency_proxy(&[1], 2, &uniform, &BestOf).unwrap();
        assert!(d.value.abs() <= 16.0 && d.argmax == 1);
        let zero_one = |w: &[u8]| Ok(if w.contains(&1) { Rational::zero() } else { Rational::one() });
        assert!(deficiency_proxy(&[0, 1], 2, &zero_one, &BestOf).unwrap().infinite);
    }

    #[test]
    fn prefix_bits_match_encoders() {
        for seed in 0..6 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let k = rng.gen_range(1..4u8);
            let len = rng.gen_range(1..300);
            let periodic = seed % 2 == 0;
            let w: Vec<u8> =
                (0..len).map(|i| if periodic { (i % 5 % k as usize) as u8 } else { rng.gen_range(0..k) }).collect();
            for c in [&Lz78 as &dyn PrefixFreeCompressor, &Lz77, &BestOf] {
                let fast = c.prefix_bits(&w, k).unwrap();
                for m in 1..=w.len() {
                    assert_eq!(fast[m - 1], c.encode(&w[..m], k).unwrap().len(), "{} m={m}", c.id());
                }
            }
        }
    }

    /// Every bit string of length ≤ `max` that decodes exactly to a word it
    /// is the encoding of.
    fn codewords_up_to(c: &dyn PrefixFreeCompressor, max: usize) -> Vec<CodeWord> {
        let mut out = Vec::new();
        for len in 0..=max {
            for v in 0u64..1 << len {
                let cw = CodeWord::from_u64(v, len);
                if let Ok((w, k)) = c.decode(&cw) {
                    if c.encode(&w, k).ok().as_ref() == Some(&cw) {
                        out.push(cw);
                    }
                }
            }
        }
        out
    }

    #[test]
    fn short_codewords_prefix_free() {
        for c in [&Lz78 as &dyn PrefixFreeCompressor, &Lz77, &BestOf] {
            let cws = codewords_up_to(c, 14);
            assert!(!cws.is_empty());
            assert!(CodeWord::is_prefix_free(&cws), "{}", c.id());
            assert!(CodeWord::kraft_sum(&cws) <= 1.0);
        }
    }

    #[test]
    fn exhaustive_small_inputs() {
        for c in [&Lz78 as &dyn PrefixFreeCompressor, &Lz77, &BestOf] {
            let mut cws = Vec::new();
            for len in 0..=10usize {
                for x in 0u32..1 << len {
                    let w: Vec<u8> = (0..len).map(|i| (x >> i & 1) as u8).collect();
                    let cw = c.encode(&w, 2).unwrap();
                    assert_eq!(c.decode(&cw).unwrap(), (w, 2));
                    cws.push(cw);
                }
            }
            assert!(CodeWord::is_prefix_free(&cws), "{}", c.id());
            assert!(CodeWord::kraft_sum(&cws) <= 1.0);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn round_trip(w in prop::collection::vec(0u8..4, 0..400), k in 4u8..6) {
            for c in [&Lz78 as &dyn PrefixFreeCompressor, &Lz77, &BestOf] {
                let cw = c.encode(&w, k).unwrap();
                prop_assert_eq!(c.decode(&cw).unwrap(), (w.clone(), k));
                prop_assert_eq!(cw.len(), c.bits(&w, k).unwrap());
            }
        }

        #[test]
        fn concatenations_split(a in prop::collection::vec(0u8..2, 0..200), b in prop::collection::vec(0u8..2, 0..200)) {
            // Prefix-freeness in use: two codewords back to back decode apart.
            let mut out = BitWriter::new();
            BestOf.write(&a, 2, &mut out).unwrap();
            BestOf.write(&b, 2, &mut out).unwrap();
            let cw = out.finish();
            let mut r = BitReader::new(&cw);
            prop_assert_eq!(BestOf.read(&mut r).unwrap().0, a);
            prop_assert_eq!(BestOf.read(&mut r).unwrap().0, b);
            prop_assert!(r.expect_end().is_ok());
        }

        #[test]
        fn random_codewords_prefix_free(ws in prop::collection::vec(prop::collection::vec(0u8..3, 0..60), 2..40)) {
            let mut ws = ws;
            ws.sort();
            ws.dedup();
            let cws: Vec<CodeWord> = ws.iter().map(|w| BestOf.encode(w, 3).unwrap()).collect();
            prop_assert!(CodeWord::is_prefix_free(&cws));
            prop_assert!(CodeWord::kraft_sum(&cws) <= 1.0);
        }
    }
}
