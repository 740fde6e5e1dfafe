use super::bits::{BitReader, BitWriter};
use super::{elias_len, truncated_len, PrefixFreeCompressor, MAX_DECODE_LEN};
use crate::error::{Error, Result};

/// LZ77 over the longest previous factor.
///
/// Header `δ(n+1) δ(k)`. At position `i` a token starts with a flag bit
/// (omitted at `i = 0`, which is always a literal): `0` then the symbol in
/// truncated binary over `k`, or `1` then the source `j < i` in
/// `⌈log₂ i⌉` plain binary digits and `δ(len)`; the copy may overlap position `i`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Lz77;

/// Suffix array by prefix doubling.
pub fn suffix_array(w: &[u8]) -> Vec<usize> {
    let n = w.len();
    let mut sa: Vec<usize> = (0..n).collect();
    let mut rank: Vec<usize> = w.iter().map(|&c| c as usize).collect();
    let mut tmp = vec![0usize; n];
    let mut h = 1;
    if n <= 1 {
        return sa;
    }
    loop {
        let key = |i: usize, rank: &[usize]| (rank[i], if i + h < n { rank[i + h] + 1 } else { 0 });
        sa.sort_unstable_by_key(|&i| key(i, &rank));
        tmp[sa[0]] = 0;
        for r in 1..n {
            tmp[sa[r]] = tmp[sa[r - 1]] + (key(sa[r - 1], &rank) != key(sa[r], &rank)) as usize;
        }
        std::mem::swap(&mut rank, &mut tmp);
        if rank[sa[n - 1]] == n - 1 {
            break;
        }
        h *= 2;
    }
    sa
}

/// Kasai: `lcp[r]` is the common prefix length of suffixes `sa[r-1]` and `sa[r]`.
fn lcp_array(w: &[u8], sa: &[usize]) -> Vec<usize> {
    let n = w.len();
    let mut rank = vec![0; n];
    for (r, &i) in sa.iter().enumerate() {
        rank[i] = r;
    }
    let mut lcp = vec![0; n];
    let mut h = 0usize;
    for i in 0..n {
        if rank[i] > 0 {
            let j = sa[rank[i] - 1];
            while i + h < n && j + h < n && w[i + h] == w[j + h] {
                h += 1;
            }
            lcp[rank[i]] = h;
            h = h.saturating_sub(1);
        } else {
            h = 0;
        }
    }
    lcp
}

/// Range-minimum queries over the LCP array.
struct SparseTable {
    levels: Vec<Vec<u32>>,
}

impl SparseTable {
    fn new(a: &[usize]) -> Self {
        let mut levels = vec![a.iter().map(|&x| x as u32).collect::<Vec<u32>>()];
        let mut span = 1;
        while 2 * span <= a.len() {
            let prev = levels.last().unwrap();
            let next = (0..prev.len() - span).map(|i| prev[i].min(prev[i + span])).collect();
            levels.push(next);
            span *= 2;
        }
        SparseTable { levels }
    }

    /// Minimum over `lo..=hi`.
    fn min(&self, lo: usize, hi: usize) -> usize {
        let len = hi - lo + 1;
        let l = (usize::BITS - 1 - len.leading_zeros()) as usize;
        self.levels[l][lo].min(self.levels[l][hi + 1 - (1 << l)]) as usize
    }
}

/// For each `i`, the longest `ℓ` with `w[i..i+ℓ] = w[j..j+ℓ]` for some
/// `j < i`, and such a `j` (overlap allowed). `(0, 0)` when there is none.
pub fn longest_previous_factor(w: &[u8]) -> Vec<(usize, usize)> {
    let n = w.len();
    if n == 0 {
        return Vec::new();
    }
    let sa = suffix_array(w);
    let lcp = lcp_array(w, &sa);
    let rmq = SparseTable::new(&lcp);
    // Nearest ranks on either side holding a smaller text position.
    let mut psv = vec![usize::MAX; n];
    let mut nsv = vec![usize::MAX; n];
    let mut stack: Vec<usize> = Vec::new();
    for r in 0..n {
        while let Some(&top) = stack.last() {
            if sa[top] > sa[r] {
                nsv[top] = r;
                stack.pop();
            } else {
                break;
            }
        }
        psv[r] = stack.last().copied().unwrap_or(usize::MAX);
        stack.push(r);
    }
    let mut out = vec![(0, 0); n];
    for r in 0..n {
        let i = sa[r];
        let mut best = (0, 0);
        if psv[r] != usize::MAX {
            let l = rmq.min(psv[r] + 1, r);
            if l > best.0 {
                best = (l, sa[psv[r]]);
            }
        }
        if nsv[r] != usize::MAX {
            let l = rmq.min(r + 1, nsv[r]);
            if l > best.0 {
                best = (l, sa[nsv[r]]);
            }
        }
        out[i] = best;
    }
    out
}

/// `⌈log₂ i⌉`.
fn source_bits(i: usize) -> usize {
    (usize::BITS - (i - 1).leading_zeros()) as usize
}

enum Token {
    Literal(u8),
    Copy { src: usize, len: usize },
}

struct Planner<'a> {
    w: &'a [u8],
    k: u8,
    lpf: Vec<(usize, usize)>,
    lit_prefix: Vec<usize>,
}

impl<'a> Planner<'a> {
    fn new(w: &'a [u8], k: u8) -> Self {
        let mut lit_prefix = vec![0; w.len() + 1];
        for (i, &s) in w.iter().enumerate() {
            lit_prefix[i + 1] = lit_prefix[i] + 1 + truncated_len(s as u64, k as u64);
        }
        Planner { w, k, lpf: longest_previous_factor(w), lit_prefix }
    }

    /// Greedy token at `i` for the prefix of length `m`, with its bit cost.
    fn token(&self, i: usize, m: usize) -> (Token, usize) {
        let lit = || (Token::Literal(self.w[i]), (i > 0) as usize + truncated_len(self.w[i] as u64, self.k as u64));
        if i == 0 {
            return lit();
        }
        let (l, src) = self.lpf[i];
        let len = l.min(m - i);
        if len == 0 {
            return lit();
        }
        let copy = 1 + source_bits(i) + elias_len(len as u64);
        if copy < self.lit_prefix[i + len] - self.lit_prefix[i] {
            (Token::Copy { src, len }, copy)
        } else {
            lit()
        }
    }

    fn bits(&self, m: usize) -> usize {
        let mut bits = elias_len(m as u64 + 1) + elias_len(self.k as u64);
        let mut i = 0;
        while i < m {
            let (t, c) = self.token(i, m);
            bits += c;
            i += match t {
                Token::Literal(_) => 1,
                Token::Copy { len, .. } => len,
            };
        }
        bits
    }
}

impl PrefixFreeCompressor for Lz77 {
    fn id(&self) -> &'static str {
        "lz77"
    }

    fn write(&self, w: &[u8], k: u8, out: &mut BitWriter) -> Result<()> {
        let n = w.len();
        out.elias(n as u64 + 1)?;
        out.elias(k as u64)?;
        let plan = Planner::new(w, k);
        let mut i = 0;
        while i < n {
            let (t, _) = plan.token(i, n);
            match t {
                Token::Literal(s) => {
                    if i > 0 {
                        out.push(false);
                    }
                    out.truncated(s as u64, k as u64);
                    i += 1;
                }
                Token::Copy { src, len } => {
                    out.push(true);
                    out.push_bits(src as u64, source_bits(i));
                    out.elias(len as u64)?;
                    i += len;
                }
            }
        }
        Ok(())
    }

    fn read(&self, r: &mut BitReader) -> Result<(Vec<u8>, u8)> {
        let n = r.elias()? - 1;
        if n > MAX_DECODE_LEN {
            return Err(Error::Decode(format!("declared length {n} too large")));
        }
        let k = r.elias()?;
        if k > 255 {
            return Err(Error::Decode("alphabet too large".into()));
        }
        let n = n as usize;
        let mut out: Vec<u8> = Vec::new();
        while out.len() < n {
            let i = out.len();
            if i > 0 && r.bit()? {
                let src = r.bits(source_bits(i))? as usize;
                if src >= i {
                    return Err(Error::Decode("copy source ahead of the cursor".into()));
                }
                let len = r.elias()? as usize;
                if len > n - i {
                    return Err(Error::Decode("copy overruns the declared length".into()));
                }
                for j in 0..len {
                    out.push(out[src + j]);
                }
            } else {
                out.push(r.truncated(k)? as u8);
            }
        }
        Ok((out, k as u8))
    }

    fn bits(&self, w: &[u8], k: u8) -> Result<usize> {
        super::check_symbols(w, k)?;
        Ok(Planner::new(w, k).bits(w.len()))
    }

    fn prefix_bits(&self, w: &[u8], k: u8) -> Result<Vec<usize>> {
        super::check_symbols(w, k)?;
        let plan = Planner::new(w, k);
        Ok((1..=w.len()).map(|m| plan.bits(m)).collect())
    }
}
