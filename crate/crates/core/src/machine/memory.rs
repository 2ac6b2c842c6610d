//! Finite partial maps from addresses to words.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use super::word::{Addr, Word};

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct MemorySegment(BTreeMap<Addr, Word>);

/// Two segments claimed the same address.
#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("address {0} is defined in both segments")]
pub struct Overlap(pub Addr);

impl MemorySegment {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every address of `range` mapped to `w`.
    pub fn filled(range: RangeInclusive<Addr>, w: Word) -> Self {
        range.map(|a| (a, w)).collect()
    }

    pub fn get(&self, a: Addr) -> Option<&Word> {
        self.0.get(&a)
    }

    pub fn contains(&self, a: Addr) -> bool {
        self.0.contains_key(&a)
    }

    pub fn insert(&mut self, a: Addr, w: Word) -> Option<Word> {
        self.0.insert(a, w)
    }

    /// Overwrites an address already in the domain. Returns false otherwise.
    pub fn update(&mut self, a: Addr, w: Word) -> bool {
        match self.0.get_mut(&a) {
            Some(slot) => {
                *slot = w;
                true
            }
            None => false,
        }
    }

    pub fn remove(&mut self, a: Addr) -> Option<Word> {
        self.0.remove(&a)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Addr, &Word)> + '_ {
        self.0.iter().map(|(a, w)| (*a, w))
    }

    pub fn domain(&self) -> impl Iterator<Item = Addr> + '_ {
        self.0.keys().copied()
    }

    pub fn min_addr(&self) -> Option<Addr> {
        self.0.keys().next().copied()
    }

    pub fn max_addr(&self) -> Option<Addr> {
        self.0.keys().next_back().copied()
    }

    /// The domain is exactly `[lo, hi]` for some `lo <= hi`.
    pub fn contiguous_range(&self) -> Option<(Addr, Addr)> {
        let (lo, hi) = (self.min_addr()?, self.max_addr()?);
        (hi - lo + 1 == self.0.len() as u64).then_some((lo, hi))
    }

    pub fn is_disjoint(&self, other: &MemorySegment) -> bool {
        let (small, big) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        small.domain().all(|a| !big.contains(a))
    }

    pub fn disjoint_union(&self, other: &MemorySegment) -> Result<MemorySegment, Overlap> {
        let mut out = self.clone();
        out.absorb(other.clone())?;
        Ok(out)
    }

    /// In-place disjoint union.
    pub fn absorb(&mut self, other: MemorySegment) -> Result<(), Overlap> {
        if let Some(a) = other.domain().find(|a| self.contains(*a)) {
            return Err(Overlap(a));
        }
        self.0.extend(other.0);
        Ok(())
    }

    /// Removes and returns the cells whose address lies in `range`.
    pub fn split_off_range(&mut self, range: RangeInclusive<Addr>) -> MemorySegment {
        let taken: BTreeMap<Addr, Word> = self.0.range(range).map(|(a, w)| (*a, *w)).collect();
        for a in taken.keys() {
            self.0.remove(a);
        }
        MemorySegment(taken)
    }

    pub fn restricted(&self, range: RangeInclusive<Addr>) -> MemorySegment {
        MemorySegment(self.0.range(range).map(|(a, w)| (*a, *w)).collect())
    }
}

impl FromIterator<(Addr, Word)> for MemorySegment {
    fn from_iter<I: IntoIterator<Item = (Addr, Word)>>(iter: I) -> Self {
        MemorySegment(iter.into_iter().collect())
    }
}

impl Extend<(Addr, Word)> for MemorySegment {
    fn extend<I: IntoIterator<Item = (Addr, Word)>>(&mut self, iter: I) {
        self.0.extend(iter)
    }
}
