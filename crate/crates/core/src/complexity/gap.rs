use super::bits::{BitReader, BitWriter, CodeWord};
use super::{BestOf, PrefixFreeCompressor};
use crate::error::{Error, Result};

/// Longest word covered by [`C_AUDIT`].
pub const C_AUDIT_MAX_LEN: usize = 1 << 16;

/// Patch overhead beyond `Σ f(k_j)`: the flag bit plus `|δ(p)| ≤ f(p)` for
/// `p ≤ 2^16`, i.e. `1 + ⌈f(2^16)⌉`.
pub const C_AUDIT: usize = 27;

/// Positions where `u` differs from `v`, with the symbols of `u` there.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GapPatch {
    pub diffs: Vec<(usize, u8)>,
}

impl GapPatch {
    pub fn between(v: &[u8], u: &[u8]) -> Result<GapPatch> {
        if v.len() != u.len() {
            return Err(Error::Domain("patched words must have equal length".into()));
        }
        Ok(GapPatch { diffs: (0..v.len()).filter(|&i| v[i] != u[i]).map(|i| (i, u[i])).collect() })
    }

    /// Gaps `k_1 = i_1 + 1`, `k_j = i_j - i_{j-1}`.
    pub fn gaps(&self) -> Vec<u64> {
        let mut prev: Option<usize> = None;
        self.diffs
            .iter()
            .map(|&(i, _)| {
                let g = match prev {
                    None => i + 1,
                    Some(p) => i - p,
                };
                prev = Some(i);
                g as u64
            })
            .collect()
    }
}

/// Patch format: `0` when nothing changes; otherwise `1`, `δ(p)`, then per
/// difference `δ(k_j)` and, when `k > 2`, the new symbol in truncated binary
/// over the `k - 1` symbols other than the old one.
pub fn gap_encode(v: &[u8], k: u8, patch: &GapPatch) -> Result<CodeWord> {
    let mut prev: Option<usize> = None;
    for &(i, s) in &patch.diffs {
        if i >= v.len() {
            return Err(Error::PositionOutOfRange { pos: i, len: v.len() });
        }
        if prev.is_some_and(|p| p >= i) {
            return Err(Error::Domain("diff positions must increase strictly".into()));
        }
        if s >= k || s == v[i] {
            return Err(Error::Domain(format!("replacement {s} at {i} is not a new symbol")));
        }
        prev = Some(i);
    }
    let mut w = BitWriter::new();
    if patch.diffs.is_empty() {
        w.push(false);
        return Ok(w.finish());
    }
    w.push(true);
    w.elias(patch.diffs.len() as u64)?;
    for (&(i, s), g) in patch.diffs.iter().zip(patch.gaps()) {
        w.elias(g)?;
        if k > 2 {
            let r = if s < v[i] { s } else { s - 1 };
            w.truncated(r as u64, k as u64 - 1);
        }
    }
    Ok(w.finish())
}

/// Patch turning `v` into `u`.
pub fn gap_encode_diff(v: &[u8], u: &[u8], k: u8) -> Result<CodeWord> {
    gap_encode(v, k, &GapPatch::between(v, u)?)
}

pub(crate) fn read_patch(r: &mut BitReader, v: &[u8], k: u8) -> Result<Vec<u8>> {
    let mut u = v.to_vec();
    if !r.bit()? {
        return Ok(u);
    }
    let p = r.elias()?;
    let mut pos: Option<usize> = None;
    for _ in 0..p {
        let g = r.elias()? as usize;
        let i = pos.map_or(g - 1, |q| q + g);
        if i >= v.len() {
            return Err(Error::PositionOutOfRange { pos: i, len: v.len() });
        }
        u[i] = if k > 2 {
            let s = r.truncated(k as u64 - 1)? as u8;
            if s < v[i] {
                s
            } else {
                s + 1
            }
        } else {
            1 - v[i]
        };
        pos = Some(i);
    }
    Ok(u)
}

/// Applies a patch produced by [`gap_encode`].
pub fn gap_apply(v: &[u8], k: u8, patch: &CodeWord) -> Result<Vec<u8>> {
    let mut r = BitReader::new(patch);
    let u = read_patch(&mut r, v, k)?;
    r.expect_end()?;
    Ok(u)
}

/// Length of the description `code(v) ‖ patch` of `u`.
pub fn two_part_bits(v: &[u8], k: u8, patch: &CodeWord) -> Result<usize> {
    Ok(BestOf.bits(v, k)? + patch.len())
}

/// The description `code(v) ‖ patch` itself.
pub fn two_part_encode(v: &[u8], u: &[u8], k: u8) -> Result<CodeWord> {
    let mut w = BitWriter::new();
    BestOf.write(v, k, &mut w)?;
    w.append(&gap_encode_diff(v, u, k)?);
    Ok(w.finish())
}

pub fn two_part_decode(c: &CodeWord) -> Result<Vec<u8>> {
    let mut r = BitReader::new(c);
    let (v, k) = BestOf.read(&mut r)?;
    let u = read_patch(&mut r, &v, k)?;
    r.expect_end()?;
    Ok(u)
}
