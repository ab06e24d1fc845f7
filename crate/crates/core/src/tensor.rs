//! Partially observed binary relational tensor.
//!
//! Entry `(i, j, t)` records whether a relation of type `t` runs from object
//! `i` to object `j`. Keys absent from the tensor are unobserved; they are not
//! zeros. Relations are directed, so `(i, j)` and `(j, i)` are distinct pairs.

use alloc::vec::Vec;
use core::ops::Range;

use hashbrown::{HashMap, HashSet};

use crate::{Error, Result};

/// One observed cell of the tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Entry {
    pub i: usize,
    pub j: usize,
    pub t: usize,
    pub value: bool,
}

impl Entry {
    pub fn new(i: usize, j: usize, t: usize, value: bool) -> Self {
        Self { i, j, t, value }
    }

    #[inline]
    pub fn key(&self) -> (usize, usize, usize) {
        (self.i, self.j, self.t)
    }

    #[inline]
    pub fn fiber(&self) -> FiberKey {
        FiberKey::new(self.i, self.j)
    }

    #[inline]
    pub fn y(&self) -> f64 {
        if self.value {
            1.0
        } else {
            0.0
        }
    }
}

/// Ordered object pair addressing a tube fiber.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FiberKey {
    pub i: usize,
    pub j: usize,
}

impl FiberKey {
    pub fn new(i: usize, j: usize) -> Self {
        Self { i, j }
    }
}

/// Content of a single tensor cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkValue {
    Absent,
    Present,
    Missing,
}

impl LinkValue {
    pub fn from_bool(value: bool) -> Self {
        if value {
            LinkValue::Present
        } else {
            LinkValue::Absent
        }
    }

    pub fn is_missing(self) -> bool {
        self == LinkValue::Missing
    }

    /// Observed label, or `None` when missing.
    pub fn observed(self) -> Option<bool> {
        match self {
            LinkValue::Absent => Some(false),
            LinkValue::Present => Some(true),
            LinkValue::Missing => None,
        }
    }
}

/// The length-`T` tube fiber of one object pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkPattern(Vec<LinkValue>);

impl LinkPattern {
    pub fn values(&self) -> &[LinkValue] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn observed_count(&self) -> usize {
        self.0.iter().filter(|v| !v.is_missing()).count()
    }
}

impl core::ops::Index<usize> for LinkPattern {
    type Output = LinkValue;

    fn index(&self, t: usize) -> &LinkValue {
        &self.0[t]
    }
}

/// Sparse `N x N x T` binary tensor with an explicit observation mask.
///
/// Entries are kept sorted by `(i, j, t)`, so every fiber occupies a
/// contiguous run and iteration order is canonical. Immutable once built.
#[derive(Debug, Clone)]
pub struct RelationalTensor {
    n_objects: usize,
    n_relations: usize,
    entries: Vec<Entry>,
    index: HashMap<(usize, usize, usize), usize>,
    fibers: HashMap<FiberKey, Range<usize>>,
}

impl PartialEq for RelationalTensor {
    fn eq(&self, other: &Self) -> bool {
        self.n_objects == other.n_objects
            && self.n_relations == other.n_relations
            && self.entries == other.entries
    }
}

impl RelationalTensor {
    /// Builds a tensor from `(i, j, t, value)` observations.
    ///
    /// Repeated keys with the same value are merged; repeated keys with
    /// different values are a [`Error::Conflict`].
    pub fn build(
        n_objects: usize,
        n_relations: usize,
        triples: impl IntoIterator<Item = (usize, usize, usize, u8)>,
    ) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, j, t, value) in triples {
            check_index(n_objects, n_relations, i, j, t)?;
            let value = match value {
                0 => false,
                1 => true,
                value => return Err(Error::NonBinary { i, j, t, value }),
            };
            entries.push(Entry { i, j, t, value });
        }
        Self::from_entries(n_objects, n_relations, entries)
    }

    /// Builds a tensor from already-typed entries, with the same validation
    /// as [`RelationalTensor::build`].
    pub fn from_entries(
        n_objects: usize,
        n_relations: usize,
        mut entries: Vec<Entry>,
    ) -> Result<Self> {
        if n_objects == 0 || n_relations == 0 {
            return Err(Error::InvalidConfig(alloc::format!(
                "tensor dimensions must be positive, got {n_objects}x{n_objects}x{n_relations}"
            )));
        }
        for e in &entries {
            check_index(n_objects, n_relations, e.i, e.j, e.t)?;
        }
        entries.sort_unstable();
        // Sorting puts equal keys next to each other, with `false` first.
        let mut deduped: Vec<Entry> = Vec::with_capacity(entries.len());
        for e in entries {
            match deduped.last() {
                Some(prev) if prev.key() == e.key() => {
                    if prev.value != e.value {
                        return Err(Error::Conflict {
                            i: e.i,
                            j: e.j,
                            t: e.t,
                        });
                    }
                }
                _ => deduped.push(e),
            }
        }
        Ok(Self::from_sorted(n_objects, n_relations, deduped))
    }

    /// Tensor with no observations.
    pub fn empty(n_objects: usize, n_relations: usize) -> Result<Self> {
        Self::from_entries(n_objects, n_relations, Vec::new())
    }

    fn from_sorted(n_objects: usize, n_relations: usize, entries: Vec<Entry>) -> Self {
        let mut index = HashMap::with_capacity(entries.len());
        let mut fibers: HashMap<FiberKey, Range<usize>> = HashMap::new();
        for (pos, e) in entries.iter().enumerate() {
            index.insert(e.key(), pos);
            fibers
                .entry(e.fiber())
                .and_modify(|r| r.end = pos + 1)
                .or_insert(pos..pos + 1);
        }
        Self {
            n_objects,
            n_relations,
            entries,
            index,
            fibers,
        }
    }

    #[inline]
    pub fn n_objects(&self) -> usize {
        self.n_objects
    }

    #[inline]
    pub fn n_relations(&self) -> usize {
        self.n_relations
    }

    /// Observed entries in `(i, j, t)` order.
    #[inline]
    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    #[inline]
    pub fn observed_count(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn check(&self, i: usize, j: usize, t: usize) -> Result<()> {
        check_index(self.n_objects, self.n_relations, i, j, t)
    }

    pub fn value_at(&self, i: usize, j: usize, t: usize) -> Result<LinkValue> {
        self.check(i, j, t)?;
        Ok(self
            .index
            .get(&(i, j, t))
            .map_or(LinkValue::Missing, |&pos| {
                LinkValue::from_bool(self.entries[pos].value)
            }))
    }

    pub fn is_observed(&self, i: usize, j: usize, t: usize) -> Result<bool> {
        Ok(!self.value_at(i, j, t)?.is_missing())
    }

    /// Link pattern of the ordered pair `key`.
    pub fn fiber(&self, key: FiberKey) -> Result<LinkPattern> {
        self.check(key.i, key.j, 0)?;
        let mut values = alloc::vec![LinkValue::Missing; self.n_relations];
        for e in self.fiber_entries(key) {
            values[e.t] = LinkValue::from_bool(e.value);
        }
        Ok(LinkPattern(values))
    }

    /// Observed entries of one fiber, ordered by relation.
    pub fn fiber_entries(&self, key: FiberKey) -> &[Entry] {
        self.fibers
            .get(&key)
            .map_or(&[][..], |r| &self.entries[r.clone()])
    }

    /// Pairs with at least one observed relation, in sorted order.
    pub fn observed_fibers(&self) -> Vec<FiberKey> {
        let mut keys: Vec<FiberKey> = Vec::with_capacity(self.fibers.len());
        let mut last = None;
        for e in &self.entries {
            let k = e.fiber();
            if last != Some(k) {
                keys.push(k);
                last = Some(k);
            }
        }
        keys
    }

    pub fn fiber_count(&self) -> usize {
        self.fibers.len()
    }

    /// Matrix view of relation `t`.
    pub fn slice(&self, t: usize) -> Result<SliceView<'_>> {
        self.check(0, 0, t)?;
        let entries = self.entries.iter().filter(|e| e.t == t).collect();
        Ok(SliceView {
            tensor: self,
            t,
            entries,
        })
    }

    /// Splits the tensor by moving every observation of the named fibers into
    /// a second tensor. Keys with no observations are accepted and ignored.
    pub fn hide_fibers(&self, keys: impl IntoIterator<Item = FiberKey>) -> Result<(Self, Self)> {
        let mut hidden = HashSet::new();
        for k in keys {
            self.check(k.i, k.j, 0)?;
            hidden.insert(k);
        }
        Ok(self.partition(|e| !hidden.contains(&e.fiber())))
    }

    /// Splits entries into `(kept, rest)` by `keep`.
    pub fn partition(&self, mut keep: impl FnMut(&Entry) -> bool) -> (Self, Self) {
        let (kept, rest): (Vec<Entry>, Vec<Entry>) = self.entries.iter().partition(|e| keep(e));
        (
            Self::from_sorted(self.n_objects, self.n_relations, kept),
            Self::from_sorted(self.n_objects, self.n_relations, rest),
        )
    }

    /// Entries satisfying `keep`.
    pub fn filter(&self, keep: impl FnMut(&Entry) -> bool) -> Self {
        self.partition(keep).0
    }

    /// Union of two tensors of the same shape. Overlapping keys must agree.
    pub fn union(&self, other: &Self) -> Result<Self> {
        if self.n_objects != other.n_objects || self.n_relations != other.n_relations {
            return Err(Error::DimensionMismatch(alloc::format!(
                "union of {}x{}x{} and {}x{}x{} tensors",
                self.n_objects,
                self.n_objects,
                self.n_relations,
                other.n_objects,
                other.n_objects,
                other.n_relations
            )));
        }
        let mut entries = self.entries.clone();
        entries.extend_from_slice(&other.entries);
        Self::from_entries(self.n_objects, self.n_relations, entries)
    }

    /// Same observation mask with every label negated.
    pub fn with_flipped_labels(&self) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|e| Entry {
                value: !e.value,
                ..*e
            })
            .collect();
        Self::from_sorted(self.n_objects, self.n_relations, entries)
    }
}

fn check_index(n_objects: usize, n_relations: usize, i: usize, j: usize, t: usize) -> Result<()> {
    if i >= n_objects || j >= n_objects || t >= n_relations {
        return Err(Error::IndexOutOfRange {
            i,
            j,
            t,
            n_objects,
            n_relations,
        });
    }
    Ok(())
}

/// The `N x N` matrix of one relation type, sharing the tensor's mask.
#[derive(Debug, Clone)]
pub struct SliceView<'a> {
    tensor: &'a RelationalTensor,
    t: usize,
    entries: Vec<&'a Entry>,
}

impl<'a> SliceView<'a> {
    pub fn relation(&self) -> usize {
        self.t
    }

    pub fn observed_count(&self) -> usize {
        self.entries.len()
    }

    pub fn value_at(&self, i: usize, j: usize) -> Result<LinkValue> {
        self.tensor.value_at(i, j, self.t)
    }

    pub fn entries(&self) -> impl Iterator<Item = &'a Entry> + '_ {
        self.entries.iter().copied()
    }

    /// Standalone single-relation tensor holding this slice.
    pub fn to_tensor(&self) -> RelationalTensor {
        let entries = self.entries.iter().map(|e| Entry { t: 0, ..**e }).collect();
        RelationalTensor::from_sorted(self.tensor.n_objects, 1, entries)
    }
}
