use std::fmt;
use std::str::FromStr;

use super::{
    fingerprint, finish_own_tx, first_zero, keys_bytes, values_bytes, Entry, LayoutKind, Node,
    WriteSet,
};
use crate::error::{Error, Result};
use crate::pstore::{Arena, FaStrategy, PRef};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SplitStrategy {
    /// Transfer the greater entries into a fresh node.
    Move,
    /// Byte-copy the whole node, then split validity between the two bitmaps.
    Copy,
}

impl SplitStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            SplitStrategy::Move => "move",
            SplitStrategy::Copy => "copy",
        }
    }
}

impl fmt::Display for SplitStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SplitStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "move" => Ok(SplitStrategy::Move),
            "copy" => Ok(SplitStrategy::Copy),
            _ => Err(Error::Parse(format!("unknown split strategy `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplitOutcome {
    pub left: Node,
    pub right: Node,
    /// Largest key kept by the left node.
    pub separator: u64,
}

/// Which end of the donor's key range moves to the receiver.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BalanceDirection {
    /// Receiver holds smaller keys; the donor's smallest entries move.
    ToLower,
    /// Receiver holds larger keys; the donor's largest entries move.
    ToHigher,
}

impl Node {
    /// Instrumented copy of the entry at a physical position.
    fn load_entry(&self, a: &mut Arena, pos: usize) -> Entry {
        Entry::new(self.load_key(a, pos), self.load_value(a, pos))
    }

    /// Splits a full node. The left node keeps the `⌊M/2⌋` smallest entries;
    /// the right node is freshly allocated and linked after it.
    pub fn split(
        &self,
        arena: &mut Arena,
        strategy: SplitStrategy,
        fa: FaStrategy,
    ) -> Result<SplitOutcome> {
        let l = self.layout;
        if strategy == SplitStrategy::Copy && !l.kind.has_bitmap() {
            return Err(Error::InvalidLayout(format!(
                "copy split needs a bitmap; {} nodes would write their entries twice",
                l.kind
            )));
        }
        let n = self.len(arena);
        if n < l.capacity {
            return Err(Error::Precondition(format!(
                "split of a node holding {n} of {} entries",
                l.capacity
            )));
        }
        let own = fa == FaStrategy::Tx && !arena.is_volatile() && !arena.in_tx();
        if own {
            arena.tx_begin()?;
        }
        let res = self.split_inner(arena, strategy, fa, n);
        finish_own_tx(arena, own, res)
    }

    fn split_inner(
        &self,
        arena: &mut Arena,
        strategy: SplitStrategy,
        fa: FaStrategy,
        n: usize,
    ) -> Result<SplitOutcome> {
        let l = self.layout;
        let h = n / 2;
        let positions = self.positions(arena);
        let separator = match l.kind {
            LayoutKind::Sorted => self.load_key(arena, h - 1),
            LayoutKind::Indirection => self.load_key(arena, positions[h - 1]),
            _ => {
                let mut keys: Vec<u64> =
                    positions.iter().map(|&p| self.load_key(arena, p)).collect();
                *keys.select_nth_unstable(h - 1).1
            }
        };
        let right = Node::allocate(arena, l)?;
        let old_next = self.next(arena);
        let mut ws = WriteSet::new();
        // Greater entries, in key order for ordered layouts, physical order otherwise.
        let movers: Vec<usize> = match l.kind {
            LayoutKind::Sorted | LayoutKind::Indirection => positions[h..].to_vec(),
            _ => positions
                .iter()
                .copied()
                .filter(|&p| self.key_at(arena, p) > separator)
                .collect(),
        };
        match strategy {
            SplitStrategy::Move => {
                let moved: Vec<Entry> = movers.iter().map(|&p| self.load_entry(arena, p)).collect();
                right.image_writes(&mut ws, &moved, old_next, self.pref);
                if l.kind == LayoutKind::Unsorted {
                    // Keep the left node dense: fill holes below h with small entries above it.
                    let holes = movers.iter().copied().filter(|&p| p < h);
                    let fillers: Vec<usize> = (h..n)
                        .filter(|&p| self.key_at(arena, p) <= separator)
                        .collect();
                    for (hole, filler) in holes.zip(fillers) {
                        let e = self.load_entry(arena, filler);
                        self.put_pair(&mut ws, hole, e.key, &e.value);
                    }
                }
            }
            SplitStrategy::Copy => {
                let mut img = arena
                    .peek(self.pref.offset as usize, l.node_size as usize)
                    .to_vec();
                self.load_bytes_instrumented(arena);
                let mut words = vec![0u64; l.bitmap_words()];
                for &p in &movers {
                    words[p / 64] |= 1 << (p % 64);
                }
                for (w, word) in words.iter().enumerate() {
                    let o = l.bitmap_word_off(w) as usize;
                    img[o..o + 8].copy_from_slice(&word.to_le_bytes());
                }
                if l.kind == LayoutKind::Indirection {
                    let o = l.aux_at(0) as usize;
                    for (r, &p) in movers.iter().enumerate() {
                        img[o + r] = p as u8;
                    }
                }
                let no = l.next_off as usize;
                img[no..no + 16].copy_from_slice(&old_next.to_bytes());
                img[no + 16..no + 32].copy_from_slice(&self.pref.to_bytes());
                ws.put(right.pref.offset, &img);
            }
        }
        ws.barrier();
        // Publish: shrink the left node, then link the right one in.
        match l.count_off {
            Some(c) => ws.put_u64(self.abs(c), h as u64),
            None => {
                let mut bm = self.bitmap(arena);
                let before = bm.clone();
                for &p in &movers {
                    bm[p / 64] &= !(1 << (p % 64));
                }
                for (w, (old, new)) in before.iter().zip(&bm).enumerate() {
                    if old != new {
                        ws.put_u64(self.abs(l.bitmap_word_off(w)), *new);
                    }
                }
            }
        }
        ws.put(self.abs(l.next_off), &right.pref.to_bytes());
        if !old_next.is_null() {
            ws.put(old_next.offset + l.prev_off, &right.pref.to_bytes());
        }
        ws.apply(arena, fa)?;
        Ok(SplitOutcome {
            left: *self,
            right,
            separator,
        })
    }

    /// Touches every line of the node through instrumented loads.
    fn load_bytes_instrumented(&self, arena: &mut Arena) {
        let mut buf = vec![0u8; self.layout.node_size as usize];
        arena
            .load_at(self.pref.offset, &mut buf)
            .expect("node in bounds");
    }

    /// Physical positions of the `count` boundary entries of the donor, in
    /// the order they move (ascending keys for `ToLower`, descending for
    /// `ToHigher`). Unordered layouts rescan for the next extremum before
    /// every move.
    fn boundary_positions(
        &self,
        arena: &mut Arena,
        count: usize,
        dir: BalanceDirection,
    ) -> Vec<usize> {
        let positions = self.positions(arena);
        let n = positions.len();
        match self.layout.kind {
            LayoutKind::Sorted | LayoutKind::Indirection => match dir {
                BalanceDirection::ToLower => positions[..count].to_vec(),
                BalanceDirection::ToHigher => {
                    positions[n - count..].iter().rev().copied().collect()
                }
            },
            _ => {
                let mut left = positions;
                let mut out = Vec::with_capacity(count);
                for _ in 0..count {
                    let mut best = 0;
                    let mut best_key = self.load_key(arena, left[0]);
                    for (i, &p) in left.iter().enumerate().skip(1) {
                        let k = self.load_key(arena, p);
                        let better = match dir {
                            BalanceDirection::ToLower => k < best_key,
                            BalanceDirection::ToHigher => k > best_key,
                        };
                        if better {
                            best = i;
                            best_key = k;
                        }
                    }
                    out.push(left.swap_remove(best));
                }
                out
            }
        }
    }

    /// Moves `count` boundary entries from `donor` (self) to `receiver`, a
    /// key-range neighbour on the side given by `dir`.
    pub fn balance_into(
        &self,
        arena: &mut Arena,
        receiver: &Node,
        count: usize,
        dir: BalanceDirection,
        fa: FaStrategy,
    ) -> Result<()> {
        let l = self.layout;
        if receiver.layout != l {
            return Err(Error::InvalidArgument(
                "balance between different layouts".into(),
            ));
        }
        let dn = self.len(arena);
        let rn = receiver.len(arena);
        if count == 0 || count > dn || rn + count > l.capacity {
            return Err(Error::Precondition(format!(
                "cannot move {count} entries from a node of {dn} into one of {rn} (capacity {})",
                l.capacity
            )));
        }
        let own = fa == FaStrategy::Tx && !arena.is_volatile() && !arena.in_tx();
        if own {
            arena.tx_begin()?;
        }
        let res = self.balance_inner(arena, receiver, count, dir, fa, dn, rn);
        finish_own_tx(arena, own, res)
    }

    #[allow(clippy::too_many_arguments)]
    fn balance_inner(
        &self,
        arena: &mut Arena,
        receiver: &Node,
        count: usize,
        dir: BalanceDirection,
        fa: FaStrategy,
        dn: usize,
        rn: usize,
    ) -> Result<()> {
        let l = self.layout;
        let chosen = self.boundary_positions(arena, count, dir);
        let mut moved: Vec<Entry> = chosen.iter().map(|&p| self.load_entry(arena, p)).collect();
        moved.sort_unstable_by_key(|e| e.key);
        let mut ws = WriteSet::new();

        // Receiver data, then receiver publish.
        match l.kind {
            LayoutKind::Sorted => match dir {
                BalanceDirection::ToLower => {
                    ws.put(receiver.abs(l.key_off(rn)), &keys_bytes(&moved));
                    ws.put(receiver.abs(l.value_off(rn)), &values_bytes(&moved));
                }
                BalanceDirection::ToHigher => {
                    let mut all = moved.clone();
                    all.extend(receiver.entries(arena));
                    ws.put(receiver.abs(l.key_off(0)), &keys_bytes(&all));
                    ws.put(receiver.abs(l.value_off(0)), &values_bytes(&all));
                }
            },
            LayoutKind::Unsorted => {
                ws.put(receiver.abs(l.key_off(rn)), &keys_bytes(&moved));
                ws.put(receiver.abs(l.value_off(rn)), &values_bytes(&moved));
            }
            _ => {}
        }
        let mut new_positions = Vec::new();
        if l.kind.has_bitmap() {
            let mut bm = receiver.bitmap(arena);
            let before = bm.clone();
            for e in &moved {
                let p = first_zero(&bm, l.capacity).ok_or(Error::NodeFull(l.capacity))?;
                bm[p / 64] |= 1 << (p % 64);
                receiver.put_pair(&mut ws, p, e.key, &e.value);
                if l.kind == LayoutKind::Hashing {
                    ws.put(receiver.abs(l.aux_at(p)), &[fingerprint(e.key)]);
                }
                new_positions.push(p as u8);
            }
            ws.barrier();
            if l.kind == LayoutKind::Indirection {
                match dir {
                    BalanceDirection::ToLower => ws.put(receiver.abs(l.aux_at(rn)), &new_positions),
                    BalanceDirection::ToHigher => {
                        let mut slots = new_positions.clone();
                        slots.extend(receiver.slots(arena));
                        ws.put(receiver.abs(l.aux_at(0)), &slots);
                    }
                }
            }
            put_changed_words(&mut ws, receiver, &before, &bm);
        } else {
            ws.barrier();
            ws.put_u64(receiver.abs(l.count_off.unwrap()), (rn + count) as u64);
        }
        ws.barrier();

        // Donor data, then donor publish.
        let remaining = dn - count;
        match l.kind {
            LayoutKind::Sorted => {
                if dir == BalanceDirection::ToLower && remaining > 0 {
                    let kb = arena
                        .peek(self.abs(l.key_off(count)) as usize, remaining * 8)
                        .to_vec();
                    let vb = arena
                        .peek(self.abs(l.value_off(count)) as usize, remaining * 16)
                        .to_vec();
                    ws.put(self.abs(l.key_off(0)), &kb);
                    ws.put(self.abs(l.value_off(0)), &vb);
                    ws.barrier();
                }
                ws.put_u64(self.abs(l.count_off.unwrap()), remaining as u64);
            }
            LayoutKind::Unsorted => {
                let holes = chosen.iter().copied().filter(|&p| p < remaining);
                let fillers: Vec<usize> = (remaining..dn).filter(|p| !chosen.contains(p)).collect();
                for (hole, filler) in holes.zip(fillers) {
                    let e = self.load_entry(arena, filler);
                    self.put_pair(&mut ws, hole, e.key, &e.value);
                }
                ws.barrier();
                ws.put_u64(self.abs(l.count_off.unwrap()), remaining as u64);
            }
            _ => {
                let before = self.bitmap(arena);
                let mut bm = before.clone();
                for &p in &chosen {
                    bm[p / 64] &= !(1 << (p % 64));
                }
                if l.kind == LayoutKind::Indirection && dir == BalanceDirection::ToLower {
                    let slots = self.slots(arena);
                    ws.put(self.abs(l.aux_at(0)), &slots[count..]);
                }
                put_changed_words(&mut ws, self, &before, &bm);
            }
        }
        ws.apply(arena, fa)
    }

    /// Balance as measured in isolation: the donor must be full and the
    /// receiver hold `⌊M/2⌋ - 1` entries; `⌊M/4⌋` entries move.
    pub fn balance(
        &self,
        arena: &mut Arena,
        receiver: &Node,
        dir: BalanceDirection,
        fa: FaStrategy,
    ) -> Result<()> {
        let m = self.layout.capacity;
        let (dn, rn) = (self.len(arena), receiver.len(arena));
        if dn != m || rn + 1 != m / 2 {
            return Err(Error::Precondition(format!(
                "balance expects a full donor and a receiver at {} entries, got {dn} and {rn}",
                m / 2 - 1
            )));
        }
        self.balance_into(arena, receiver, m / 4, dir, fa)
    }

    /// Appends every entry of `right` to `self`. Links are left untouched;
    /// `right` may be freed afterwards.
    pub fn merge_from(&self, arena: &mut Arena, right: &Node, fa: FaStrategy) -> Result<()> {
        let l = self.layout;
        if right.layout != l {
            return Err(Error::InvalidArgument(
                "merge between different layouts".into(),
            ));
        }
        let (ln, rn) = (self.len(arena), right.len(arena));
        if ln + rn > l.capacity {
            return Err(Error::CapacityExceeded {
                needed: ln + rn,
                capacity: l.capacity,
            });
        }
        if let (Some(lmax), Some(rmin)) = (self.max_key(arena), right.min_key(arena)) {
            if lmax >= rmin {
                return Err(Error::Precondition(format!(
                    "merge needs left keys below right keys ({lmax} >= {rmin})"
                )));
            }
        }
        let moved: Vec<Entry> = right
            .positions(arena)
            .into_iter()
            .map(|p| right.load_entry(arena, p))
            .collect();
        let mut ws = WriteSet::new();
        match l.count_off {
            Some(c) => {
                if !moved.is_empty() {
                    ws.put(self.abs(l.key_off(ln)), &keys_bytes(&moved));
                    ws.put(self.abs(l.value_off(ln)), &values_bytes(&moved));
                }
                ws.barrier();
                ws.put_u64(self.abs(c), (ln + rn) as u64);
            }
            None => {
                let before = self.bitmap(arena);
                let mut bm = before.clone();
                let mut slots = Vec::with_capacity(rn);
                for e in &moved {
                    let p = first_zero(&bm, l.capacity).ok_or(Error::NodeFull(l.capacity))?;
                    bm[p / 64] |= 1 << (p % 64);
                    self.put_pair(&mut ws, p, e.key, &e.value);
                    if l.kind == LayoutKind::Hashing {
                        ws.put(self.abs(l.aux_at(p)), &[fingerprint(e.key)]);
                    }
                    slots.push(p as u8);
                }
                ws.barrier();
                if l.kind == LayoutKind::Indirection {
                    ws.put(self.abs(l.aux_at(ln)), &slots);
                }
                put_changed_words(&mut ws, self, &before, &bm);
            }
        }
        ws.apply(arena, fa)
    }

    /// Removes `right` (the node after `self`) from the sibling chain.
    pub fn unlink_next(&self, arena: &mut Arena, right: &Node, fa: FaStrategy) -> Result<()> {
        let after: PRef = right.next(arena);
        let mut ws = WriteSet::new();
        ws.put(self.abs(self.layout.next_off), &after.to_bytes());
        if !after.is_null() {
            ws.put(after.offset + self.layout.prev_off, &self.pref.to_bytes());
        }
        ws.apply(arena, fa)
    }
}

fn put_changed_words(ws: &mut WriteSet, node: &Node, before: &[u64], after: &[u64]) {
    for (w, (old, new)) in before.iter().zip(after).enumerate() {
        if old != new {
            ws.put_u64(node.abs(node.layout.bitmap_word_off(w)), *new);
        }
    }
}
