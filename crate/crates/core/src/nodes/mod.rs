//! PMem-aware data-node layouts and their node-local micro-operations.
//!
//! A [`Node`] is a handle (arena reference plus [`Layout`]); all state lives in
//! the arena. Reads used for bookkeeping go through uninstrumented peeks, while
//! search primitives and the scans the operations themselves require (median
//! selection, extremum scans, copying entries out of a node) use instrumented
//! loads so that `lines_read` reflects them.

mod dump;
mod entry;
mod layout;
mod ops;
mod search;
mod structural;
mod writeset;

#[cfg(test)]
mod tests;

pub use dump::{parse_dump, DumpLine};
pub use entry::*;
pub use layout::{capacity, capacity_of, CapacityClass, Layout, LayoutKind, NODE_SIZES};
pub use ops::{InsertOutcome, Slot};
pub use search::{SearchMethod, SearchResult};
pub use structural::{BalanceDirection, SplitOutcome, SplitStrategy};

pub(crate) use writeset::WriteSet;

use crate::error::{Error, Result};
use crate::pstore::{Arena, FaStrategy, PRef, LINE_SIZE};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Node {
    pub pref: PRef,
    pub layout: Layout,
}

impl Node {
    /// Wraps an existing region. The region must be exactly one node long.
    pub fn at(pref: PRef, layout: Layout) -> Result<Node> {
        if pref.len != layout.node_size {
            return Err(Error::InvalidArgument(format!(
                "region of {} bytes cannot hold a {}-byte node",
                pref.len, layout.node_size
            )));
        }
        Ok(Node { pref, layout })
    }

    /// Allocates a node without initialising it. On a persistent arena the
    /// allocation runs inside its own transaction unless one is already open.
    pub fn allocate(arena: &mut Arena, layout: Layout) -> Result<Node> {
        let own = !arena.is_volatile() && !arena.in_tx();
        if own {
            arena.tx_begin()?;
        }
        match arena.allocate(layout.node_size, LINE_SIZE as u64) {
            Ok(pref) => {
                if own {
                    arena.tx_commit()?;
                }
                Ok(Node { pref, layout })
            }
            Err(e) => {
                if own {
                    arena.tx_abort()?;
                }
                Err(e)
            }
        }
    }

    /// Allocates an empty, unlinked node and persists its header.
    pub fn create(arena: &mut Arena, layout: Layout, fa: FaStrategy) -> Result<Node> {
        let own = fa == FaStrategy::Tx && !arena.is_volatile() && !arena.in_tx();
        if own {
            arena.tx_begin()?;
        }
        let res = (|| {
            let node = Node::allocate(arena, layout)?;
            let mut ws = WriteSet::new();
            node.image_writes(&mut ws, &[], PRef::NULL, PRef::NULL);
            ws.apply(arena, fa)?;
            Ok(node)
        })();
        finish_own_tx(arena, own, res)
    }

    /// Overwrites the node with a well-formed image holding `entries`, using
    /// uninstrumented writes. Sorted nodes sort the input; other layouts keep
    /// the given physical order. Intended for fixtures.
    pub fn bulk_fill(
        &self,
        arena: &mut Arena,
        entries: &[Entry],
        next: PRef,
        prev: PRef,
    ) -> Result<()> {
        if entries.len() > self.layout.capacity {
            return Err(Error::CapacityExceeded {
                needed: entries.len(),
                capacity: self.layout.capacity,
            });
        }
        let mut ws = WriteSet::new();
        self.image_writes(&mut ws, entries, next, prev);
        for (abs, bytes) in ws.into_writes() {
            arena.poke(abs, &bytes)?;
        }
        Ok(())
    }

    pub fn capacity(&self) -> usize {
        self.layout.capacity
    }

    pub fn kind(&self) -> LayoutKind {
        self.layout.kind
    }

    #[inline]
    pub(crate) fn abs(&self, off: u64) -> u64 {
        self.pref.offset + off
    }

    // ---- uninstrumented readers ----

    pub fn len(&self, a: &Arena) -> usize {
        match self.layout.count_off {
            Some(c) => a.peek_u64(self.abs(c) as usize) as usize,
            None => self.bitmap(a).iter().map(|w| w.count_ones() as usize).sum(),
        }
    }

    pub fn is_empty(&self, a: &Arena) -> bool {
        self.len(a) == 0
    }

    pub fn is_full(&self, a: &Arena) -> bool {
        self.len(a) >= self.layout.capacity
    }

    pub fn bitmap(&self, a: &Arena) -> Vec<u64> {
        (0..self.layout.bitmap_words())
            .map(|w| a.peek_u64(self.abs(self.layout.bitmap_word_off(w)) as usize))
            .collect()
    }

    /// Logical-rank to physical-position bytes `[0, len)` (Indirection only).
    pub fn slots(&self, a: &Arena) -> Vec<u8> {
        match self.layout.aux_off {
            Some(off) if self.layout.kind == LayoutKind::Indirection => {
                a.peek(self.abs(off) as usize, self.len(a)).to_vec()
            }
            _ => Vec::new(),
        }
    }

    pub fn fingerprint_at(&self, a: &Arena, pos: usize) -> u8 {
        a.peek(self.abs(self.layout.aux_at(pos)) as usize, 1)[0]
    }

    pub fn key_at(&self, a: &Arena, pos: usize) -> u64 {
        a.peek_u64(self.abs(self.layout.key_off(pos)) as usize)
    }

    pub fn value_at(&self, a: &Arena, pos: usize) -> Value {
        Value::from_bytes(a.peek(self.abs(self.layout.value_off(pos)) as usize, VALUE_BYTES))
    }

    pub fn next(&self, a: &Arena) -> PRef {
        PRef::from_bytes(a.peek(self.abs(self.layout.next_off) as usize, 16))
    }

    pub fn prev(&self, a: &Arena) -> PRef {
        PRef::from_bytes(a.peek(self.abs(self.layout.prev_off) as usize, 16))
    }

    /// Valid physical positions; in key order for Sorted and Indirection,
    /// ascending physical order otherwise.
    pub fn positions(&self, a: &Arena) -> Vec<usize> {
        match self.layout.kind {
            LayoutKind::Sorted | LayoutKind::Unsorted => (0..self.len(a)).collect(),
            LayoutKind::Indirection => self.slots(a).into_iter().map(usize::from).collect(),
            LayoutKind::BitmapOnly | LayoutKind::Hashing => set_bits(&self.bitmap(a)).collect(),
        }
    }

    /// Valid entries in [`positions`](Self::positions) order.
    pub fn entries(&self, a: &Arena) -> Vec<Entry> {
        self.positions(a)
            .into_iter()
            .map(|p| Entry::new(self.key_at(a, p), self.value_at(a, p)))
            .collect()
    }

    pub fn sorted_entries(&self, a: &Arena) -> Vec<Entry> {
        let mut e = self.entries(a);
        if !self.layout.kind.is_ordered() {
            e.sort_unstable_by_key(|e| e.key);
        }
        e
    }

    pub fn min_key(&self, a: &Arena) -> Option<u64> {
        self.positions(a)
            .into_iter()
            .map(|p| self.key_at(a, p))
            .min()
    }

    pub fn max_key(&self, a: &Arena) -> Option<u64> {
        self.positions(a)
            .into_iter()
            .map(|p| self.key_at(a, p))
            .max()
    }

    /// The node's bytes as stored (little-endian integers, IEEE-754 doubles).
    pub fn raw_bytes(&self, a: &Arena) -> Vec<u8> {
        a.peek(self.pref.offset as usize, self.pref.len as usize)
            .to_vec()
    }

    /// Installs a raw image previously obtained from [`raw_bytes`](Self::raw_bytes).
    pub fn load_raw(&self, arena: &mut Arena, bytes: &[u8]) -> Result<()> {
        if bytes.len() as u64 != self.pref.len {
            return Err(Error::InvalidArgument(format!(
                "raw image of {} bytes for a {}-byte node",
                bytes.len(),
                self.pref.len
            )));
        }
        arena.poke(self.pref.offset, bytes)
    }

    /// Checks the layout invariants, returning a description of the first
    /// violation.
    pub fn validate(&self, a: &Arena) -> Result<()> {
        let bad = |m: String| Err(Error::Corruption(m));
        let l = &self.layout;
        let n = self.len(a);
        if n > l.capacity {
            return bad(format!("count {n} exceeds capacity {}", l.capacity));
        }
        if l.kind.has_bitmap() {
            let bm = self.bitmap(a);
            if set_bits(&bm).any(|p| p >= l.capacity) {
                return bad("bitmap bit set beyond capacity".into());
            }
        }
        let keys: Vec<u64> = self
            .positions(a)
            .into_iter()
            .map(|p| self.key_at(a, p))
            .collect();
        match l.kind {
            LayoutKind::Sorted => {
                if keys.windows(2).any(|w| w[0] >= w[1]) {
                    return bad("sorted keys not strictly increasing".into());
                }
            }
            LayoutKind::Indirection => {
                let bm = self.bitmap(a);
                let slots = self.slots(a);
                if slots
                    .iter()
                    .any(|&s| (s as usize) >= l.capacity || !bit(&bm, s as usize))
                {
                    return bad("slot points at an invalid position".into());
                }
                if keys.windows(2).any(|w| w[0] >= w[1]) {
                    return bad("keys via slots not strictly increasing".into());
                }
            }
            LayoutKind::Hashing => {
                for p in self.positions(a) {
                    if self.fingerprint_at(a, p) != fingerprint(self.key_at(a, p)) {
                        return bad(format!("stale fingerprint at valid position {p}"));
                    }
                }
            }
            LayoutKind::Unsorted | LayoutKind::BitmapOnly => {}
        }
        let mut uniq = keys.clone();
        uniq.sort_unstable();
        uniq.dedup();
        if uniq.len() != keys.len() {
            return bad("duplicate keys".into());
        }
        Ok(())
    }

    /// Emits the writes for a complete node image holding `entries` at
    /// positions `0..k` (sorted first for Sorted and for Indirection slots).
    pub(crate) fn image_writes(
        &self,
        ws: &mut WriteSet,
        entries: &[Entry],
        next: PRef,
        prev: PRef,
    ) {
        let l = &self.layout;
        let mut e = entries.to_vec();
        if l.kind == LayoutKind::Sorted {
            e.sort_unstable_by_key(|x| x.key);
        }
        let k = e.len();
        if k > 0 {
            ws.put(self.abs(l.key_off(0)), &keys_bytes(&e));
            ws.put(self.abs(l.value_off(0)), &values_bytes(&e));
        }
        match l.kind {
            LayoutKind::Hashing if k > 0 => {
                let fps: Vec<u8> = e.iter().map(|x| fingerprint(x.key)).collect();
                ws.put(self.abs(l.aux_at(0)), &fps);
            }
            LayoutKind::Indirection if k > 0 => {
                let mut order: Vec<usize> = (0..k).collect();
                order.sort_unstable_by_key(|&i| e[i].key);
                let slots: Vec<u8> = order.into_iter().map(|i| i as u8).collect();
                ws.put(self.abs(l.aux_at(0)), &slots);
            }
            _ => {}
        }
        let mut links = [0u8; 32];
        links[..16].copy_from_slice(&next.to_bytes());
        links[16..].copy_from_slice(&prev.to_bytes());
        ws.put(self.abs(l.next_off), &links);
        match l.count_off {
            Some(c) => ws.put_u64(self.abs(c), k as u64),
            None => {
                let mut words = vec![0u64; l.bitmap_words()];
                for i in 0..k {
                    words[i / 64] |= 1 << (i % 64);
                }
                let bytes: Vec<u8> = words.iter().flat_map(|w| w.to_le_bytes()).collect();
                ws.put(self.abs(l.bitmap_off), &bytes);
            }
        }
    }

    /// Sets both sibling links.
    pub fn set_links(
        &self,
        arena: &mut Arena,
        next: PRef,
        prev: PRef,
        fa: FaStrategy,
    ) -> Result<()> {
        let mut ws = WriteSet::new();
        let mut links = [0u8; 32];
        links[..16].copy_from_slice(&next.to_bytes());
        links[16..].copy_from_slice(&prev.to_bytes());
        ws.put(self.abs(self.layout.next_off), &links);
        ws.apply(arena, fa)
    }

    pub fn set_next(&self, arena: &mut Arena, next: PRef, fa: FaStrategy) -> Result<()> {
        let mut ws = WriteSet::new();
        ws.put(self.abs(self.layout.next_off), &next.to_bytes());
        ws.apply(arena, fa)
    }

    pub fn set_prev(&self, arena: &mut Arena, prev: PRef, fa: FaStrategy) -> Result<()> {
        let mut ws = WriteSet::new();
        ws.put(self.abs(self.layout.prev_off), &prev.to_bytes());
        ws.apply(arena, fa)
    }
}

pub(crate) fn finish_own_tx<T>(arena: &mut Arena, own: bool, res: Result<T>) -> Result<T> {
    if !own {
        return res;
    }
    match res {
        Ok(v) => {
            arena.tx_commit()?;
            Ok(v)
        }
        Err(e) => {
            arena.tx_abort()?;
            Err(e)
        }
    }
}

#[inline]
pub(crate) fn bit(words: &[u64], pos: usize) -> bool {
    words[pos / 64] >> (pos % 64) & 1 == 1
}

pub(crate) fn set_bits(words: &[u64]) -> impl Iterator<Item = usize> + '_ {
    words.iter().enumerate().flat_map(|(w, &word)| {
        let mut x = word;
        std::iter::from_fn(move || {
            if x == 0 {
                return None;
            }
            let b = x.trailing_zeros() as usize;
            x &= x - 1;
            Some(w * 64 + b)
        })
    })
}

/// First clear bit below `cap`.
pub(crate) fn first_zero(words: &[u64], cap: usize) -> Option<usize> {
    words
        .iter()
        .enumerate()
        .find(|(_, w)| **w != u64::MAX)
        .map(|(i, w)| i * 64 + w.trailing_ones() as usize)
        .filter(|p| *p < cap)
}

pub(crate) fn keys_bytes(e: &[Entry]) -> Vec<u8> {
    e.iter().flat_map(|x| x.key.to_le_bytes()).collect()
}

pub(crate) fn values_bytes(e: &[Entry]) -> Vec<u8> {
    e.iter().flat_map(|x| *x.value.as_bytes()).collect()
}
