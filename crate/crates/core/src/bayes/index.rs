use alloc::vec;
use alloc::vec::Vec;

use crate::tensor::{Entry, RelationalTensor};

/// Which factor matrix a row update targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Block {
    /// `U`, indexed by the first object.
    Sender,
    /// `V`, indexed by the second object.
    Receiver,
    /// `R`, indexed by relation type.
    Relation,
}

#[derive(Debug, Clone)]
struct Groups {
    offsets: Vec<usize>,
    members: Vec<usize>,
}

impl Groups {
    fn build(entries: &[Entry], n_groups: usize, key: impl Fn(&Entry) -> usize) -> Self {
        let mut offsets = vec![0usize; n_groups + 1];
        for e in entries {
            offsets[key(e) + 1] += 1;
        }
        for k in 0..n_groups {
            offsets[k + 1] += offsets[k];
        }
        let mut fill = offsets.clone();
        let mut members = vec![0usize; entries.len()];
        for (pos, e) in entries.iter().enumerate() {
            let slot = &mut fill[key(e)];
            members[*slot] = pos;
            *slot += 1;
        }
        Self { offsets, members }
    }

    fn group(&self, k: usize) -> &[usize] {
        &self.members[self.offsets[k]..self.offsets[k + 1]]
    }
}

/// Observed entries grouped by sender, receiver and relation, so each row
/// update touches only its own observations.
#[derive(Debug, Clone)]
pub struct ObservationIndex {
    n_objects: usize,
    n_relations: usize,
    entries: Vec<Entry>,
    by_sender: Groups,
    by_receiver: Groups,
    by_relation: Groups,
}

impl ObservationIndex {
    pub fn new(tensor: &RelationalTensor) -> Self {
        let entries = tensor.entries().to_vec();
        let n = tensor.n_objects();
        let t = tensor.n_relations();
        Self {
            by_sender: Groups::build(&entries, n, |e| e.i),
            by_receiver: Groups::build(&entries, n, |e| e.j),
            by_relation: Groups::build(&entries, t, |e| e.t),
            n_objects: n,
            n_relations: t,
            entries,
        }
    }

    pub fn n_objects(&self) -> usize {
        self.n_objects
    }

    pub fn n_relations(&self) -> usize {
        self.n_relations
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    /// Number of rows in `block`.
    pub fn rows(&self, block: Block) -> usize {
        match block {
            Block::Sender | Block::Receiver => self.n_objects,
            Block::Relation => self.n_relations,
        }
    }

    /// Observations that involve row `row` of `block`, in tensor order.
    pub fn row_entries(&self, block: Block, row: usize) -> impl Iterator<Item = &Entry> + '_ {
        let groups = match block {
            Block::Sender => &self.by_sender,
            Block::Receiver => &self.by_receiver,
            Block::Relation => &self.by_relation,
        };
        groups.group(row).iter().map(move |&p| &self.entries[p])
    }
}

impl From<&RelationalTensor> for ObservationIndex {
    fn from(tensor: &RelationalTensor) -> Self {
        Self::new(tensor)
    }
}
