use super::{
    bit, fingerprint, first_zero, set_bits, LayoutKind, Node, Value, WriteSet, KEY_BYTES,
    VALUE_BYTES,
};
use crate::error::{Error, Result};
use crate::pstore::{Arena, FaStrategy};

/// Where a key lives, or would go, in a node. Produced by
/// [`Node::locate`] without instrumentation so that mutations can be measured
/// without their position lookup.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    Found { pos: usize, rank: usize },
    Vacant { rank: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InsertOutcome {
    Inserted,
    Updated,
}

impl Node {
    /// Uninstrumented lookup. `rank` is the logical rank for Sorted and
    /// Indirection; for the other layouts it is the index into
    /// [`positions`](Node::positions) (or the count on a miss).
    pub fn locate(&self, a: &Arena, key: u64) -> Slot {
        match self.layout.kind {
            LayoutKind::Sorted => {
                let n = self.len(a);
                let (mut lo, mut hi) = (0, n);
                while lo < hi {
                    let mid = (lo + hi) / 2;
                    if self.key_at(a, mid) < key {
                        lo = mid + 1;
                    } else {
                        hi = mid;
                    }
                }
                if lo < n && self.key_at(a, lo) == key {
                    Slot::Found { pos: lo, rank: lo }
                } else {
                    Slot::Vacant { rank: lo }
                }
            }
            LayoutKind::Indirection => {
                let slots = self.slots(a);
                let rank = slots.partition_point(|&s| self.key_at(a, s as usize) < key);
                match slots.get(rank) {
                    Some(&s) if self.key_at(a, s as usize) == key => Slot::Found {
                        pos: s as usize,
                        rank,
                    },
                    _ => Slot::Vacant { rank },
                }
            }
            LayoutKind::Unsorted => {
                let n = self.len(a);
                match (0..n).find(|&p| self.key_at(a, p) == key) {
                    Some(p) => Slot::Found { pos: p, rank: p },
                    None => Slot::Vacant { rank: n },
                }
            }
            LayoutKind::BitmapOnly | LayoutKind::Hashing => {
                let bm = self.bitmap(a);
                let mut n = 0;
                for (i, p) in set_bits(&bm).enumerate() {
                    if self.key_at(a, p) == key {
                        return Slot::Found { pos: p, rank: i };
                    }
                    n += 1;
                }
                Slot::Vacant { rank: n }
            }
        }
    }

    pub fn get(&self, a: &Arena, key: u64) -> Option<Value> {
        match self.locate(a, key) {
            Slot::Found { pos, .. } => Some(self.value_at(a, pos)),
            Slot::Vacant { .. } => None,
        }
    }

    pub fn insert(
        &self,
        arena: &mut Arena,
        key: u64,
        value: Value,
        fa: FaStrategy,
    ) -> Result<InsertOutcome> {
        let slot = self.locate(arena, key);
        self.insert_at(arena, key, value, slot, fa)
    }

    /// Inserts at a position obtained from [`locate`](Node::locate). A `Found`
    /// slot rewrites the value in place.
    pub fn insert_at(
        &self,
        arena: &mut Arena,
        key: u64,
        value: Value,
        slot: Slot,
        fa: FaStrategy,
    ) -> Result<InsertOutcome> {
        let rank = match slot {
            Slot::Found { pos, .. } => {
                self.update_value_at(arena, pos, value, fa)?;
                return Ok(InsertOutcome::Updated);
            }
            Slot::Vacant { rank } => rank,
        };
        let l = self.layout;
        let n = self.len(arena);
        if n >= l.capacity {
            return Err(Error::NodeFull(l.capacity));
        }
        let mut ws = WriteSet::new();
        match l.kind {
            LayoutKind::Sorted => {
                let keys_from = self.abs(l.key_off(rank)) as usize;
                let vals_from = self.abs(l.value_off(rank)) as usize;
                let tail = n - rank;
                let mut kb = Vec::with_capacity((tail + 1) * KEY_BYTES);
                kb.extend_from_slice(&key.to_le_bytes());
                kb.extend_from_slice(arena.peek(keys_from, tail * KEY_BYTES));
                let mut vb = Vec::with_capacity((tail + 1) * VALUE_BYTES);
                vb.extend_from_slice(value.as_bytes());
                vb.extend_from_slice(arena.peek(vals_from, tail * VALUE_BYTES));
                ws.put(keys_from as u64, &kb);
                ws.put(vals_from as u64, &vb);
                ws.barrier();
                ws.put_u64(self.abs(l.count_off.unwrap()), n as u64 + 1);
            }
            LayoutKind::Unsorted => {
                self.put_pair(&mut ws, n, key, &value);
                ws.barrier();
                ws.put_u64(self.abs(l.count_off.unwrap()), n as u64 + 1);
            }
            LayoutKind::BitmapOnly | LayoutKind::Hashing | LayoutKind::Indirection => {
                let mut bm = self.bitmap(arena);
                let p = first_zero(&bm, l.capacity).ok_or(Error::NodeFull(l.capacity))?;
                self.put_pair(&mut ws, p, key, &value);
                if l.kind == LayoutKind::Hashing {
                    ws.put(self.abs(l.aux_at(p)), &[fingerprint(key)]);
                }
                ws.barrier();
                if l.kind == LayoutKind::Indirection {
                    let slots = self.slots(arena);
                    let mut sb = Vec::with_capacity(n - rank + 1);
                    sb.push(p as u8);
                    sb.extend_from_slice(&slots[rank..]);
                    ws.put(self.abs(l.aux_at(rank)), &sb);
                }
                bm[p / 64] |= 1 << (p % 64);
                ws.put_u64(self.abs(l.bitmap_word_off(p / 64)), bm[p / 64]);
            }
        }
        ws.apply(arena, fa)?;
        Ok(InsertOutcome::Inserted)
    }

    /// Rewrites the value stored at a valid physical position.
    pub fn update_value_at(
        &self,
        arena: &mut Arena,
        pos: usize,
        value: Value,
        fa: FaStrategy,
    ) -> Result<()> {
        let mut ws = WriteSet::new();
        ws.put(self.abs(self.layout.value_off(pos)), value.as_bytes());
        ws.apply(arena, fa)
    }

    pub fn erase(&self, arena: &mut Arena, key: u64, fa: FaStrategy) -> Result<()> {
        match self.locate(arena, key) {
            Slot::Found { pos, rank } => self.erase_at(arena, pos, rank, fa),
            Slot::Vacant { .. } => Err(Error::KeyNotFound(key)),
        }
    }

    /// Erases the entry at a position obtained from [`locate`](Node::locate).
    ///
    /// Hashing nodes overwrite the fingerprint of the freed position with the
    /// complement of the old one, after the bitmap word is durable.
    pub fn erase_at(
        &self,
        arena: &mut Arena,
        pos: usize,
        rank: usize,
        fa: FaStrategy,
    ) -> Result<()> {
        let l = self.layout;
        let n = self.len(arena);
        let valid = match l.kind {
            LayoutKind::Sorted | LayoutKind::Unsorted => pos < n,
            _ => pos < l.capacity && bit(&self.bitmap(arena), pos),
        };
        if !valid {
            return Err(Error::InvalidArgument(format!(
                "erase at invalid position {pos}"
            )));
        }
        let mut ws = WriteSet::new();
        match l.kind {
            LayoutKind::Sorted => {
                let tail = n - rank - 1;
                let kb = arena
                    .peek(self.abs(l.key_off(rank + 1)) as usize, tail * KEY_BYTES)
                    .to_vec();
                let vb = arena
                    .peek(self.abs(l.value_off(rank + 1)) as usize, tail * VALUE_BYTES)
                    .to_vec();
                ws.put(self.abs(l.key_off(rank)), &kb);
                ws.put(self.abs(l.value_off(rank)), &vb);
                ws.barrier();
                ws.put_u64(self.abs(l.count_off.unwrap()), n as u64 - 1);
            }
            LayoutKind::Unsorted => {
                let last = n - 1;
                if pos != last {
                    let (k, v) = (self.key_at(arena, last), self.value_at(arena, last));
                    self.put_pair(&mut ws, pos, k, &v);
                    ws.barrier();
                }
                ws.put_u64(self.abs(l.count_off.unwrap()), n as u64 - 1);
            }
            LayoutKind::BitmapOnly | LayoutKind::Hashing | LayoutKind::Indirection => {
                let bm = self.bitmap(arena);
                ws.put_u64(
                    self.abs(l.bitmap_word_off(pos / 64)),
                    bm[pos / 64] & !(1 << (pos % 64)),
                );
                if l.kind == LayoutKind::Indirection {
                    let slots = self.slots(arena);
                    ws.put(self.abs(l.aux_at(rank)), &slots[rank + 1..]);
                }
                if l.kind == LayoutKind::Hashing {
                    ws.barrier();
                    ws.put(self.abs(l.aux_at(pos)), &[!self.fingerprint_at(arena, pos)]);
                }
            }
        }
        ws.apply(arena, fa)
    }

    pub(crate) fn put_pair(&self, ws: &mut WriteSet, pos: usize, key: u64, value: &Value) {
        ws.put(self.abs(self.layout.key_off(pos)), &key.to_le_bytes());
        ws.put(self.abs(self.layout.value_off(pos)), value.as_bytes());
    }
}
