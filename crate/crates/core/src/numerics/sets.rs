use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Interval, Rational};

/// One connected piece of an [`IntervalSet`].
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Piece {
    pub lo: Rational,
    pub hi: Rational,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Piece {
    pub fn new(lo: Rational, hi: Rational, lo_closed: bool, hi_closed: bool) -> Self {
        Piece { lo, hi, lo_closed, hi_closed }
    }

    pub fn open(lo: Rational, hi: Rational) -> Self {
        Piece::new(lo, hi, false, false)
    }

    pub fn closed(lo: Rational, hi: Rational) -> Self {
        Piece::new(lo, hi, true, true)
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }

    pub fn contains(&self, x: &Rational) -> bool {
        let above = if self.lo_closed { x >= &self.lo } else { x > &self.lo };
        let below = if self.hi_closed { x <= &self.hi } else { x < &self.hi };
        above && below
    }

    /// Every point of `[lo, hi]` lies in the piece.
    pub fn contains_closed(&self, lo: &Rational, hi: &Rational) -> bool {
        self.contains(lo) && self.contains(hi)
    }

    fn intersect(&self, o: &Piece) -> Piece {
        let (lo, lo_closed) = match self.lo.cmp(&o.lo) {
            std::cmp::Ordering::Less => (o.lo.clone(), o.lo_closed),
            std::cmp::Ordering::Greater => (self.lo.clone(), self.lo_closed),
            std::cmp::Ordering::Equal => (self.lo.clone(), self.lo_closed && o.lo_closed),
        };
        let (hi, hi_closed) = match self.hi.cmp(&o.hi) {
            std::cmp::Ordering::Less => (self.hi.clone(), self.hi_closed),
            std::cmp::Ordering::Greater => (o.hi.clone(), o.hi_closed),
            std::cmp::Ordering::Equal => (self.hi.clone(), self.hi_closed && o.hi_closed),
        };
        Piece { lo, hi, lo_closed, hi_closed }
    }

    fn affine(&self, a: &Rational, b: &Rational) -> Piece {
        let x = &(a * &self.lo) + b;
        let y = &(a * &self.hi) + b;
        if a.is_negative() {
            Piece::new(y, x, self.hi_closed, self.lo_closed)
        } else {
            Piece::new(x, y, self.lo_closed, self.hi_closed)
        }
    }
}

impl fmt::Debug for Piece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_closed { '[' } else { '(' },
            self.lo,
            self.hi,
            if self.hi_closed { ']' } else { ')' }
        )
    }
}

/// A finite union of intervals with rational endpoints, kept sorted, disjoint
/// and merged.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct IntervalSet {
    pieces: Vec<Piece>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet { pieces: Vec::new() }
    }

    pub fn from_pieces(pieces: impl IntoIterator<Item = Piece>) -> Self {
        let mut s = IntervalSet { pieces: pieces.into_iter().filter(|p| !p.is_empty()).collect() };
        s.normalize();
        s
    }

    pub fn single(p: Piece) -> Self {
        Self::from_pieces([p])
    }

    /// `[0, 1]`.
    pub fn unit() -> Self {
        Self::single(Piece::closed(Rational::zero(), Rational::one()))
    }

    /// `[0, 1)`, the circle's fundamental domain.
    pub fn circle() -> Self {
        Self::single(Piece::new(Rational::zero(), Rational::one(), true, false))
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    fn normalize(&mut self) {
        self.pieces.sort_by(|a, b| a.lo.cmp(&b.lo).then(b.lo_closed.cmp(&a.lo_closed)));
        let mut out: Vec<Piece> = Vec::with_capacity(self.pieces.len());
        for p in self.pieces.drain(..) {
            if let Some(last) = out.last_mut() {
                let touches = p.lo < last.hi || (p.lo == last.hi && (p.lo_closed || last.hi_closed));
                if touches {
                    if p.hi > last.hi {
                        last.hi = p.hi;
                        last.hi_closed = p.hi_closed;
                    } else if p.hi == last.hi {
                        last.hi_closed |= p.hi_closed;
                    }
                    continue;
                }
            }
            out.push(p);
        }
        self.pieces = out;
    }

    pub fn contains(&self, x: &Rational) -> bool {
        self.pieces.iter().any(|p| p.contains(x))
    }

    /// Every point of `iv` lies in the set.
    pub fn contains_interval(&self, iv: &Interval) -> bool {
        self.pieces.iter().any(|p| p.contains_closed(iv.lo(), iv.hi()))
    }

    pub fn contains_piece(&self, c: &Piece) -> bool {
        self.pieces.iter().any(|p| {
            let left = p.lo < c.lo || (p.lo == c.lo && (p.lo_closed || !c.lo_closed));
            let right = p.hi > c.hi || (p.hi == c.hi && (p.hi_closed || !c.hi_closed));
            left && right
        })
    }

    pub fn meets_piece(&self, c: &Piece) -> bool {
        self.pieces.iter().any(|p| !p.intersect(c).is_empty())
    }

    /// Topological closure in the line.
    pub fn closure(&self) -> IntervalSet {
        IntervalSet::from_pieces(self.pieces.iter().map(|p| Piece::closed(p.lo.clone(), p.hi.clone())))
    }

    /// Some point of `iv` lies in the set.
    pub fn meets_interval(&self, iv: &Interval) -> bool {
        let probe = Piece::closed(iv.lo().clone(), iv.hi().clone());
        self.pieces.iter().any(|p| !p.intersect(&probe).is_empty())
    }

    pub fn union(&self, o: &IntervalSet) -> IntervalSet {
        IntervalSet::from_pieces(self.pieces.iter().chain(o.pieces.iter()).cloned())
    }

    pub fn intersection(&self, o: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        for a in &self.pieces {
            for b in &o.pieces {
                let c = a.intersect(b);
                if !c.is_empty() {
                    out.push(c);
                }
            }
        }
        IntervalSet::from_pieces(out)
    }

    /// Complement inside the given universe.
    pub fn complement_in(&self, universe: &IntervalSet) -> IntervalSet {
        let (Some(first), Some(last)) = (self.pieces.first(), universe.pieces.last()) else {
            return universe.clone();
        };
        let lo_end = Rational::min_of(&first.lo, &universe.pieces[0].lo).clone() - Rational::one();
        let hi_end = Rational::max_of(&self.pieces[self.pieces.len() - 1].hi, &last.hi).clone() + Rational::one();
        let mut gaps = Vec::new();
        let mut cursor = (lo_end, true);
        for p in &self.pieces {
            gaps.push(Piece::new(cursor.0, p.lo.clone(), cursor.1, !p.lo_closed));
            cursor = (p.hi.clone(), !p.hi_closed);
        }
        gaps.push(Piece::new(cursor.0, hi_end, cursor.1, true));
        universe.intersection(&IntervalSet::from_pieces(gaps))
    }

    /// Total length.
    pub fn length(&self) -> Rational {
        self.pieces.iter().map(|p| &p.hi - &p.lo).sum()
    }

    /// Image under `x ↦ a·x + b`, `a ≠ 0`.
    pub fn affine(&self, a: &Rational, b: &Rational) -> IntervalSet {
        assert!(!a.is_zero());
        IntervalSet::from_pieces(self.pieces.iter().map(|p| p.affine(a, b)))
    }

    pub fn translate(&self, b: &Rational) -> IntervalSet {
        self.affine(&Rational::one(), b)
    }

    /// Reduces every piece mod 1 into `[0, 1)`, splitting at integers.
    pub fn wrap_unit(&self) -> IntervalSet {
        let mut out = Vec::new();
        for p in &self.pieces {
            let mut k = p.lo.floor();
            loop {
                let base = Rational::from_integer(k.clone());
                let top = &base + &Rational::one();
                let window = Piece::new(base.clone(), top.clone(), true, false);
                let c = p.intersect(&window);
                if !c.is_empty() {
                    out.push(c.affine(&Rational::one(), &-&base));
                }
                if p.hi < top || (p.hi == top && !p.hi_closed) {
                    break;
                }
                k += 1;
            }
        }
        IntervalSet::from_pieces(out)
    }

    /// The set together with its translate by +1, merged: a subset of `[0, 2)`
    /// in which every arc of the circle of length < 1 appears connected.
    pub fn periodic_extension(&self) -> IntervalSet {
        self.union(&self.translate(&Rational::one()))
    }

    /// Endpoints of all pieces.
    pub fn endpoints(&self) -> Vec<Rational> {
        let mut v: Vec<Rational> = self.pieces.iter().flat_map(|p| [p.lo.clone(), p.hi.clone()]).collect();
        v.sort();
        v.dedup();
        v
    }
}

impl fmt::Debug for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pieces.is_empty() {
            return write!(f, "∅");
        }
        for (i, p) in self.pieces.iter().enumerate() {
            if i > 0 {
                write!(f, " ∪ ")?;
            }
            write!(f, "{p:?}")?;
        }
        Ok(())
    }
}

/// A finite union of cylinders `[w]` in the sequence space over `k` symbols,
/// kept as an antichain of prefixes.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CylinderSet {
    alphabet: u8,
    words: Vec<Vec<u8>>,
}

impl CylinderSet {
    pub fn empty(alphabet: u8) -> Self {
        CylinderSet { alphabet, words: Vec::new() }
    }

    /// The whole space: the cylinder of the empty word.
    pub fn full(alphabet: u8) -> Self {
        CylinderSet { alphabet, words: vec![Vec::new()] }
    }

    pub fn cylinder(alphabet: u8, w: &[u8]) -> Self {
        CylinderSet { alphabet, words: vec![w.to_vec()] }
    }

    pub fn from_words(alphabet: u8, words: impl IntoIterator<Item = Vec<u8>>) -> Self {
        let mut s = CylinderSet { alphabet, words: words.into_iter().collect() };
        s.normalize();
        s
    }

    pub fn alphabet(&self) -> u8 {
        self.alphabet
    }

    pub fn words(&self) -> &[Vec<u8>] {
        &self.words
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    fn normalize(&mut self) {
        self.words.sort();
        self.words.dedup();
        // After sorting, a word's prefixes precede it; drop covered words.
        let mut out: Vec<Vec<u8>> = Vec::with_capacity(self.words.len());
        for w in self.words.drain(..) {
            if out.iter().any(|u| w.starts_with(u)) {
                continue;
            }
            out.push(w);
        }
        self.words = out;
    }

    /// Whether the cylinder `[prefix]` lies inside the set.
    pub fn contains_cylinder(&self, prefix: &[u8]) -> bool {
        self.words.iter().any(|u| prefix.starts_with(u))
    }

    /// Whether the cylinder `[prefix]` meets the set.
    pub fn meets_cylinder(&self, prefix: &[u8]) -> bool {
        self.words.iter().any(|u| prefix.starts_with(u) || u.starts_with(prefix))
    }

    pub fn union(&self, o: &CylinderSet) -> CylinderSet {
        CylinderSet::from_words(self.alphabet, self.words.iter().chain(o.words.iter()).cloned())
    }

    pub fn intersection(&self, o: &CylinderSet) -> CylinderSet {
        let mut out = Vec::new();
        for u in &self.words {
            for v in &o.words {
                if u.starts_with(v) {
                    out.push(u.clone());
                } else if v.starts_with(u) {
                    out.push(v.clone());
                }
            }
        }
        CylinderSet::from_words(self.alphabet, out)
    }

    /// Preimage under the left shift: `σ^{-1}[w] = ∪_a [a w]`.
    pub fn shift_preimage(&self) -> CylinderSet {
        let mut out = Vec::new();
        for w in &self.words {
            for a in 0..self.alphabet {
                let mut v = Vec::with_capacity(w.len() + 1);
                v.push(a);
                v.extend_from_slice(w);
                out.push(v);
            }
        }
        CylinderSet::from_words(self.alphabet, out)
    }

    /// Complement, as a union of cylinders no longer than the longest word.
    pub fn complement(&self) -> CylinderSet {
        let mut out = Vec::new();
        let mut stack = vec![Vec::<u8>::new()];
        while let Some(p) = stack.pop() {
            if self.contains_cylinder(&p) {
                continue;
            }
            if !self.meets_cylinder(&p) {
                out.push(p);
                continue;
            }
            for a in 0..self.alphabet {
                let mut q = p.clone();
                q.push(a);
                stack.push(q);
            }
        }
        CylinderSet::from_words(self.alphabet, out)
    }
}

impl fmt::Debug for CylinderSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> =
            self.words.iter().map(|w| format!("[{}]", w.iter().map(|d| d.to_string()).collect::<String>())).collect();
        write!(f, "{}", if parts.is_empty() { "∅".to_string() } else { parts.join(" ∪ ") })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::q;
    use proptest::prelude::*;

    #[test]
    fn merge_and_length() {
        let s = IntervalSet::from_pieces([
            Piece::open(q(1, 10), q(1, 2)),
            Piece::open(q(2, 5), q(4, 5)),
            Piece::new(q(4, 5), q(9, 10), true, false),
        ]);
        assert_eq!(s.pieces().len(), 1);
        assert_eq!(s.length(), q(4, 5));
        let gap = IntervalSet::from_pieces([Piece::open(q(0, 1), q(1, 2)), Piece::open(q(1, 2), q(1, 1))]);
        assert_eq!(gap.pieces().len(), 2);
        assert!(!gap.contains(&q(1, 2)));
    }

    #[test]
    fn wrap_splits_at_integers() {
        let s = IntervalSet::single(Piece::open(q(3, 4), q(5, 4))).wrap_unit();
        assert_eq!(s.pieces().len(), 2);
        assert!(s.contains(&q(0, 1)));
        assert!(!s.contains(&q(1, 4)));
        assert_eq!(s.length(), q(1, 2));
    }

    #[test]
    fn complement_of_halves() {
        let halves = IntervalSet::from_pieces([
            Piece::new(q(0, 1), q(1, 2), true, false),
            Piece::new(q(1, 2), q(1, 1), false, true),
        ]);
        let c = halves.complement_in(&IntervalSet::unit());
        assert_eq!(c, IntervalSet::single(Piece::closed(q(1, 2), q(1, 2))));
    }

    #[test]
    fn cylinder_ops() {
        let a = CylinderSet::from_words(2, [vec![0], vec![0, 1], vec![1, 1]]);
        assert_eq!(a.words().len(), 2);
        assert!(a.contains_cylinder(&[0, 0, 1]));
        assert!(!a.contains_cylinder(&[1]));
        assert!(a.meets_cylinder(&[1]));
        let c = a.complement();
        assert_eq!(c, CylinderSet::cylinder(2, &[1, 0]));
        let p = CylinderSet::cylinder(2, &[1]).shift_preimage();
        assert_eq!(p.words(), &[vec![0, 1], vec![1, 1]]);
        let i = a.intersection(&p);
        assert_eq!(i.words(), &[vec![0, 1], vec![1, 1]]);
    }

    fn arb_set() -> impl Strategy<Value = IntervalSet> {
        prop::collection::vec((0i64..32, 0i64..8, any::<bool>(), any::<bool>()), 0..5).prop_map(|v| {
            IntervalSet::from_pieces(v.into_iter().map(|(a, w, c1, c2)| Piece::new(q(a, 32), q(a + w, 32), c1, c2)))
        })
    }

    proptest! {
        #[test]
        fn membership_laws(a in arb_set(), b in arb_set(), x in 0i64..=128) {
            let x = q(x, 96);
            prop_assert_eq!(a.union(&b).contains(&x), a.contains(&x) || b.contains(&x));
            prop_assert_eq!(a.intersection(&b).contains(&x), a.contains(&x) && b.contains(&x));
            let u = IntervalSet::unit();
            prop_assert_eq!(a.complement_in(&u).contains(&x), u.contains(&x) && !a.contains(&x));
        }

        #[test]
        fn inclusion_exclusion(a in arb_set(), b in arb_set()) {
            prop_assert_eq!(
                &a.union(&b).length() + &a.intersection(&b).length(),
                &a.length() + &b.length()
            );
        }
    }
}
