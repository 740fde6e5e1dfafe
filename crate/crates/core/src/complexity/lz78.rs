use super::bits::{BitReader, BitWriter};
use super::{elias_len, truncated_len, PrefixFreeCompressor, MAX_DECODE_LEN};
use crate::error::{Error, Result};

/// LZ78 with slot-coded phrases.
///
/// Header `δ(n+1) δ(k) δ(t+1)`, where `t` is the length of the final
/// unfinished phrase. Each complete phrase extends a trie node by one symbol;
/// the pair (node, symbol) is one of the `F = nodes·(k-1) + 1` unused child
/// slots, sent as its rank in (node, symbol) order in truncated binary over
/// `F`. An unfinished final phrase is sent as its node `v ∈ 1..nodes` in
/// truncated binary over `nodes - 1`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Lz78;

/// Counts of free slots, with rank and select.
struct Fenwick {
    t: Vec<u32>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Fenwick { t: vec![0; n + 1] }
    }

    fn add(&mut self, i: usize, d: i32) {
        let mut i = i + 1;
        while i < self.t.len() {
            self.t[i] = (self.t[i] as i32 + d) as u32;
            i += i & i.wrapping_neg();
        }
    }

    /// Sum over `0..i`.
    fn prefix(&self, i: usize) -> u32 {
        let mut s = 0;
        let mut i = i;
        while i > 0 {
            s += self.t[i];
            i &= i - 1;
        }
        s
    }

    /// Smallest index whose inclusive prefix sum exceeds `k`.
    fn select(&self, mut k: u32) -> usize {
        let mut pos = 0;
        let mut step = (self.t.len() - 1).next_power_of_two();
        while step > 0 {
            if pos + step < self.t.len() && self.t[pos + step] <= k {
                pos += step;
                k -= self.t[pos];
            }
            step >>= 1;
        }
        pos
    }
}

struct Trie {
    k: usize,
    child: Vec<u32>,
    parent: Vec<u32>,
    symbol: Vec<u8>,
    depth: Vec<u32>,
    free: Fenwick,
}

impl Trie {
    fn new(k: usize, cap_nodes: usize) -> Self {
        let mut t = Trie {
            k,
            child: vec![0; cap_nodes * k],
            parent: vec![0],
            symbol: vec![0],
            depth: vec![0],
            free: Fenwick::new(cap_nodes * k),
        };
        for s in 0..k {
            t.free.add(s, 1);
        }
        t
    }

    fn nodes(&self) -> usize {
        self.parent.len()
    }

    fn free_slots(&self) -> u64 {
        (self.nodes() * (self.k - 1) + 1) as u64
    }

    fn add(&mut self, node: usize, s: u8) -> Result<usize> {
        let id = self.nodes();
        if (id + 1) * self.k > self.child.len() {
            return Err(Error::Decode("trie exceeds the declared length".into()));
        }
        let slot = node * self.k + s as usize;
        self.child[slot] = id as u32;
        self.free.add(slot, -1);
        self.parent.push(node as u32);
        self.symbol.push(s);
        self.depth.push(self.depth[node] + 1);
        for a in 0..self.k {
            self.free.add(id * self.k + a, 1);
        }
        Ok(id)
    }

    fn path(&self, mut v: usize, out: &mut Vec<u8>) {
        let start = out.len();
        while v != 0 {
            out.push(self.symbol[v]);
            v = self.parent[v] as usize;
        }
        out[start..].reverse();
    }
}

/// Per complete phrase: (rank, slot count). Plus the pending node and node count.
struct Parse {
    phrases: Vec<(u64, u64)>,
    tail: Option<(usize, usize, usize)>,
}

fn parse(w: &[u8], k: u8, mut on_symbol: impl FnMut(usize, &Trie, u64, usize)) -> Parse {
    let mut trie = Trie::new(k as usize, w.len() + 1);
    let mut phrases = Vec::new();
    let mut phrase_bits = 0u64;
    let mut cur = 0usize;
    for (i, &s) in w.iter().enumerate() {
        let slot = cur * trie.k + s as usize;
        let next = trie.child[slot] as usize;
        if next != 0 {
            cur = next;
        } else {
            let f = trie.free_slots();
            let rank = trie.free.prefix(slot) as u64;
            phrase_bits += truncated_len(rank, f) as u64;
            phrases.push((rank, f));
            trie.add(cur, s).unwrap();
            cur = 0;
        }
        on_symbol(i, &trie, phrase_bits, cur);
    }
    let tail = (cur != 0).then(|| (cur, trie.nodes(), trie.depth[cur] as usize));
    Parse { phrases, tail }
}

impl PrefixFreeCompressor for Lz78 {
    fn id(&self) -> &'static str {
        "lz78"
    }

    fn write(&self, w: &[u8], k: u8, out: &mut BitWriter) -> Result<()> {
        let p = parse(w, k, |_, _, _, _| {});
        let t = p.tail.map_or(0, |(_, _, d)| d);
        out.elias(w.len() as u64 + 1)?;
        out.elias(k as u64)?;
        out.elias(t as u64 + 1)?;
        for (rank, f) in p.phrases {
            out.truncated(rank, f);
        }
        if let Some((v, nodes, _)) = p.tail {
            out.truncated(v as u64 - 1, nodes as u64 - 1);
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
        let t = r.elias()? - 1;
        if t > n {
            return Err(Error::Decode("tail longer than the word".into()));
        }
        let (n, t) = (n as usize, t as usize);
        // With k ≥ 2 every phrase costs at least one bit.
        let cap = if k >= 2 { n.min(r.remaining()) + 2 } else { n + 2 };
        let mut trie = Trie::new(k as usize, cap);
        let mut out = Vec::with_capacity(n);
        while out.len() < n - t {
            let rank = r.truncated(trie.free_slots())?;
            let slot = trie.free.select(rank as u32);
            let (node, s) = (slot / trie.k, (slot % trie.k) as u8);
            if out.len() + trie.depth[node] as usize + 1 > n - t {
                return Err(Error::Decode("phrase overruns the declared length".into()));
            }
            trie.path(node, &mut out);
            out.push(s);
            trie.add(node, s)?;
        }
        if t > 0 {
            if trie.nodes() < 2 {
                return Err(Error::Decode("tail without phrases".into()));
            }
            let v = r.truncated(trie.nodes() as u64 - 1)? as usize + 1;
            if trie.depth[v] as usize != t {
                return Err(Error::Decode("tail length mismatch".into()));
            }
            trie.path(v, &mut out);
        }
        Ok((out, k as u8))
    }

    fn bits(&self, w: &[u8], k: u8) -> Result<usize> {
        Ok(self.prefix_bits_inner(w, k, false)?.pop().unwrap_or_else(|| elias_len(1) + elias_len(k as u64) + 1))
    }

    fn prefix_bits(&self, w: &[u8], k: u8) -> Result<Vec<usize>> {
        self.prefix_bits_inner(w, k, true)
    }
}

impl Lz78 {
    fn prefix_bits_inner(&self, w: &[u8], k: u8, all: bool) -> Result<Vec<usize>> {
        super::check_symbols(w, k)?;
        let mut out = Vec::with_capacity(if all { w.len() } else { 1 });
        let n = w.len();
        parse(w, k, |i, trie, phrase_bits, cur| {
            if !all && i + 1 != n {
                return;
            }
            let m = i + 1;
            let (t, tail) = if cur == 0 {
                (0, 0)
            } else {
                (trie.depth[cur] as u64, truncated_len(cur as u64 - 1, trie.nodes() as u64 - 1))
            };
            out.push(elias_len(m as u64 + 1) + elias_len(k as u64) + elias_len(t + 1) + phrase_bits as usize + tail);
        });
        Ok(out)
    }
}
