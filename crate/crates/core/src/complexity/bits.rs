use std::fmt;

use crate::error::{Error, Result};

/// A finite bit string, packed most significant bit first.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct CodeWord {
    words: Vec<u64>,
    len: usize,
}

impl CodeWord {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bit(&self, i: usize) -> bool {
        assert!(i < self.len);
        self.words[i / 64] >> (63 - i % 64) & 1 == 1
    }

    /// The low `len` bits of `v`, most significant first.
    pub fn from_u64(v: u64, len: usize) -> CodeWord {
        let mut w = BitWriter::new();
        w.push_bits(v, len);
        w.finish()
    }

    pub fn is_prefix_of(&self, other: &CodeWord) -> bool {
        self.len <= other.len && (0..self.len).all(|i| self.bit(i) == other.bit(i))
    }

    /// No codeword is a prefix of another; equal codewords count as a violation.
    pub fn is_prefix_free(set: &[CodeWord]) -> bool {
        let mut v: Vec<String> = set.iter().map(|c| c.to_string()).collect();
        v.sort();
        v.windows(2).all(|p| !p[1].starts_with(p[0].as_str()))
    }

    pub fn kraft_sum(set: &[CodeWord]) -> f64 {
        set.iter().map(|c| (-(c.len as f64)).exp2()).sum()
    }
}

impl fmt::Display for CodeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = (0..self.len).map(|i| if self.bit(i) { '1' } else { '0' }).collect();
        f.write_str(&s)
    }
}

impl fmt::Debug for CodeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len <= 128 {
            write!(f, "CodeWord({self})")
        } else {
            write!(f, "CodeWord({} bits)", self.len)
        }
    }
}

#[derive(Default)]
pub struct BitWriter {
    code: CodeWord,
}

impl BitWriter {
    pub fn new() -> Self {
        BitWriter::default()
    }

    pub fn len(&self) -> usize {
        self.code.len
    }

    pub fn is_empty(&self) -> bool {
        self.code.len == 0
    }

    pub fn push(&mut self, b: bool) {
        let i = self.code.len;
        if i.is_multiple_of(64) {
            self.code.words.push(0);
        }
        if b {
            self.code.words[i / 64] |= 1 << (63 - i % 64);
        }
        self.code.len += 1;
    }

    /// Low `n` bits of `v`, most significant first.
    pub fn push_bits(&mut self, v: u64, n: usize) {
        for i in (0..n).rev() {
            self.push(v >> i & 1 == 1);
        }
    }

    pub fn append(&mut self, c: &CodeWord) {
        for i in 0..c.len {
            self.push(c.bit(i));
        }
    }

    /// Elias delta code of `n ≥ 1`.
    pub fn elias(&mut self, n: u64) -> Result<()> {
        if n == 0 {
            return Err(Error::Domain("Elias codes need n ≥ 1".into()));
        }
        let nbits = 64 - n.leading_zeros() as u64;
        let lbits = 64 - nbits.leading_zeros() as usize;
        self.push_bits(0, lbits - 1);
        self.push_bits(nbits, lbits);
        self.push_bits(n, nbits as usize - 1);
        Ok(())
    }

    /// Truncated binary code of `v ∈ 0..size`.
    pub fn truncated(&mut self, v: u64, size: u64) {
        assert!(v < size.max(1));
        if size <= 1 {
            return;
        }
        let b = 63 - size.leading_zeros() as u64;
        let u = (1u64 << (b + 1)) - size;
        if v < u {
            self.push_bits(v, b as usize);
        } else {
            self.push_bits(v + u, b as usize + 1);
        }
    }

    pub fn finish(self) -> CodeWord {
        self.code
    }
}

pub struct BitReader<'a> {
    code: &'a CodeWord,
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(code: &'a CodeWord) -> Self {
        BitReader { code, pos: 0 }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.code.len - self.pos
    }

    pub fn bit(&mut self) -> Result<bool> {
        if self.pos >= self.code.len {
            return Err(Error::Decode("unexpected end of code".into()));
        }
        self.pos += 1;
        Ok(self.code.bit(self.pos - 1))
    }

    pub fn bits(&mut self, n: usize) -> Result<u64> {
        if n > 64 || self.remaining() < n {
            return Err(Error::Decode("unexpected end of code".into()));
        }
        let mut v = 0u64;
        for _ in 0..n {
            v = v << 1 | self.bit()? as u64;
        }
        Ok(v)
    }

    pub fn elias(&mut self) -> Result<u64> {
        let mut zeros = 0;
        while !self.bit()? {
            zeros += 1;
            if zeros > 6 {
                return Err(Error::Decode("Elias length prefix too long".into()));
            }
        }
        let nbits = (1 << zeros) | self.bits(zeros)?;
        if nbits > 64 {
            return Err(Error::Decode("Elias value exceeds 64 bits".into()));
        }
        let low = self.bits(nbits as usize - 1)?;
        Ok(if nbits == 64 { 1 << 63 | low } else { 1 << (nbits - 1) | low })
    }

    pub fn truncated(&mut self, size: u64) -> Result<u64> {
        if size <= 1 {
            return Ok(0);
        }
        let b = 63 - size.leading_zeros() as usize;
        let u = (1u64 << (b + 1)) - size;
        let v = self.bits(b)?;
        if v < u {
            Ok(v)
        } else {
            let v = v << 1 | self.bit()? as u64;
            Ok(v - u)
        }
    }

    pub fn expect_end(&self) -> Result<()> {
        if self.pos == self.code.len {
            Ok(())
        } else {
            Err(Error::Decode(format!("{} trailing bits", self.remaining())))
        }
    }
}
