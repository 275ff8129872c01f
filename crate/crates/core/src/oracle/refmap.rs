use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::nodes::Value;

/// One logical step of a generated workload.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Op {
    Insert(u64, Value),
    Search(u64),
    Erase(u64),
    Split,
    Balance,
    Merge,
}

impl Op {
    pub fn opcode(&self) -> &'static str {
        match self {
            Op::Insert(..) => "insert",
            Op::Search(_) => "search",
            Op::Erase(_) => "erase",
            Op::Split => "split",
            Op::Balance => "balance",
            Op::Merge => "merge",
        }
    }

    pub fn key(&self) -> Option<u64> {
        match self {
            Op::Insert(k, _) | Op::Search(k) | Op::Erase(k) => Some(*k),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OpOutcome {
    Inserted,
    Updated,
    Found(Value),
    NotFound,
    Erased,
    Unchanged,
}

/// Plain ordered map with exact semantics and no capacity limit.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RefMap {
    entries: BTreeMap<u64, Value>,
}

impl RefMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn apply(&mut self, op: &Op) -> Result<OpOutcome> {
        match *op {
            Op::Insert(k, v) => Ok(match self.entries.insert(k, v) {
                Some(_) => OpOutcome::Updated,
                None => OpOutcome::Inserted,
            }),
            Op::Search(k) => Ok(match self.entries.get(&k) {
                Some(v) => OpOutcome::Found(*v),
                None => OpOutcome::NotFound,
            }),
            Op::Erase(k) => match self.entries.remove(&k) {
                Some(_) => Ok(OpOutcome::Erased),
                None => Err(Error::KeyNotFound(k)),
            },
            Op::Split | Op::Balance | Op::Merge => Ok(OpOutcome::Unchanged),
        }
    }

    pub fn get(&self, key: u64) -> Option<Value> {
        self.entries.get(&key).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, Value)> + '_ {
        self.entries.iter().map(|(k, v)| (*k, *v))
    }

    /// Sorted `(key, value)` pairs.
    pub fn to_vec(&self) -> Vec<(u64, Value)> {
        self.iter().collect()
    }

    /// True if `pairs`, in any order, holds exactly this map's contents.
    pub fn matches<I: IntoIterator<Item = (u64, Value)>>(&self, pairs: I) -> bool {
        let mut got: Vec<(u64, Value)> = pairs.into_iter().collect();
        if got.len() != self.entries.len() {
            return false;
        }
        got.sort_unstable_by_key(|p| p.0);
        got.iter()
            .zip(self.entries.iter())
            .all(|(a, b)| a.0 == *b.0 && a.1 == *b.1)
    }
}
