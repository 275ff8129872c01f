use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::nodes::{Entry, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BufferKind {
    /// Key-ordered vector; inserts shift the tail.
    SortedVector,
    /// Append-only vector with a hash index; sorted only when moved out.
    UnsortedHash,
}

impl BufferKind {
    pub const ALL: [BufferKind; 2] = [BufferKind::SortedVector, BufferKind::UnsortedHash];

    pub fn name(&self) -> &'static str {
        match self {
            BufferKind::SortedVector => "sorted",
            BufferKind::UnsortedHash => "hash",
        }
    }
}

impl fmt::Display for BufferKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BufferKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sorted" | "sorted_vector" => Ok(BufferKind::SortedVector),
            "hash" | "unsorted" | "unsorted_hash" => Ok(BufferKind::UnsortedHash),
            _ => Err(Error::Parse(format!("unknown buffer kind `{s}`"))),
        }
    }
}

/// Volatile write buffer that fills one level-0 run.
#[derive(Clone, Debug)]
pub struct DramBuffer {
    kind: BufferKind,
    capacity: usize,
    entries: Vec<Entry>,
    index: HashMap<u64, usize>,
    /// Entries shifted by sorted inserts since creation.
    shifted: u64,
}

impl DramBuffer {
    pub fn new(kind: BufferKind, capacity: usize) -> Self {
        DramBuffer {
            kind,
            capacity,
            entries: Vec::with_capacity(capacity),
            index: HashMap::new(),
            shifted: 0,
        }
    }

    pub fn kind(&self) -> BufferKind {
        self.kind
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() == self.capacity
    }

    /// Entries moved by ordered insertion so far; always 0 for the hash
    /// organisation.
    pub fn shifted(&self) -> u64 {
        self.shifted
    }

    /// Inserts or, for a present key, replaces the value in place.
    pub fn insert(&mut self, key: u64, value: Value) -> Result<()> {
        match self.kind {
            BufferKind::SortedVector => match self.entries.binary_search_by_key(&key, |e| e.key) {
                Ok(i) => self.entries[i].value = value,
                Err(i) => {
                    if self.is_full() {
                        return Err(Error::BufferFull(self.capacity));
                    }
                    self.shifted += (self.entries.len() - i) as u64;
                    self.entries.insert(i, Entry::new(key, value));
                }
            },
            BufferKind::UnsortedHash => match self.index.get(&key) {
                Some(&i) => self.entries[i].value = value,
                None => {
                    if self.is_full() {
                        return Err(Error::BufferFull(self.capacity));
                    }
                    self.index.insert(key, self.entries.len());
                    self.entries.push(Entry::new(key, value));
                }
            },
        }
        Ok(())
    }

    pub fn get(&self, key: u64) -> Option<Value> {
        match self.kind {
            BufferKind::SortedVector => self
                .entries
                .binary_search_by_key(&key, |e| e.key)
                .ok()
                .map(|i| self.entries[i].value),
            BufferKind::UnsortedHash => self.index.get(&key).map(|&i| self.entries[i].value),
        }
    }

    /// Entries in storage order (key order for the sorted organisation).
    pub fn iter(&self) -> impl Iterator<Item = &Entry> {
        self.entries.iter()
    }

    /// Entries in key order.
    pub fn sorted(&self) -> Vec<Entry> {
        let mut out = self.entries.clone();
        if self.kind == BufferKind::UnsortedHash {
            out.sort_unstable_by_key(|e| e.key);
        }
        out
    }

    pub fn clear(&mut self) {
        self.entries.clear();
        self.index.clear();
    }
}
