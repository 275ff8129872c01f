use std::fmt;
use std::str::FromStr;

use super::{fingerprint, set_bits, LayoutKind, Node};
use crate::error::{Error, Result};
use crate::pstore::{Arena, PRef};

/// In-node search primitives. All loads are instrumented.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SearchMethod {
    /// Scan positions `[0, count)`; Sorted stops at the first larger key.
    Linear,
    /// Binary search over the sorted key array.
    Binary,
    /// Binary search over logical ranks, dereferencing the slot array.
    IndirectBinary,
    /// Compare fingerprints first; load a key only on a fingerprint match.
    HashProbe,
    /// Scan set bits of the validity bitmap, loading every valid key.
    BitmapLinear,
}

impl SearchMethod {
    pub const ALL: [SearchMethod; 5] = [
        SearchMethod::Linear,
        SearchMethod::Binary,
        SearchMethod::IndirectBinary,
        SearchMethod::HashProbe,
        SearchMethod::BitmapLinear,
    ];

    /// The natural search of a layout.
    pub fn default_for(kind: LayoutKind) -> SearchMethod {
        match kind {
            LayoutKind::Sorted => SearchMethod::Binary,
            LayoutKind::Unsorted => SearchMethod::Linear,
            LayoutKind::BitmapOnly => SearchMethod::BitmapLinear,
            LayoutKind::Indirection => SearchMethod::IndirectBinary,
            LayoutKind::Hashing => SearchMethod::HashProbe,
        }
    }

    pub fn supports(&self, kind: LayoutKind) -> bool {
        match self {
            SearchMethod::Linear => matches!(kind, LayoutKind::Sorted | LayoutKind::Unsorted),
            SearchMethod::Binary => kind == LayoutKind::Sorted,
            SearchMethod::IndirectBinary => kind == LayoutKind::Indirection,
            SearchMethod::HashProbe => kind == LayoutKind::Hashing,
            SearchMethod::BitmapLinear => kind.has_bitmap(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SearchMethod::Linear => "linear",
            SearchMethod::Binary => "binary",
            SearchMethod::IndirectBinary => "indirect_binary",
            SearchMethod::HashProbe => "hash_probe",
            SearchMethod::BitmapLinear => "bitmap_linear",
        }
    }
}

impl fmt::Display for SearchMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SearchMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SearchMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown search method `{s}`")))
    }
}

/// Outcome of an in-node search.
///
/// For ordered methods a miss still reports the insertion rank in
/// `logical_rank`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchResult {
    pub found: bool,
    pub physical_pos: Option<usize>,
    pub logical_rank: Option<usize>,
}

impl SearchResult {
    fn hit(pos: usize, rank: Option<usize>) -> Self {
        SearchResult {
            found: true,
            physical_pos: Some(pos),
            logical_rank: rank,
        }
    }

    fn miss(rank: Option<usize>) -> Self {
        SearchResult {
            found: false,
            physical_pos: None,
            logical_rank: rank,
        }
    }
}

impl Node {
    pub(crate) fn load_count(&self, a: &mut Arena) -> usize {
        a.load_u64_at(self.abs(self.layout.count_off.expect("count word"))) as usize
    }

    pub(crate) fn load_bitmap(&self, a: &mut Arena) -> Vec<u64> {
        (0..self.layout.bitmap_words())
            .map(|w| a.load_u64_at(self.abs(self.layout.bitmap_word_off(w))))
            .collect()
    }

    pub(crate) fn load_key(&self, a: &mut Arena, pos: usize) -> u64 {
        a.load_u64_at(self.abs(self.layout.key_off(pos)))
    }

    pub(crate) fn load_value(&self, a: &mut Arena, pos: usize) -> super::Value {
        let mut buf = [0u8; super::VALUE_BYTES];
        a.load_at(self.abs(self.layout.value_off(pos)), &mut buf)
            .expect("value in bounds");
        super::Value::from_bytes(&buf)
    }

    pub(crate) fn load_slot(&self, a: &mut Arena, rank: usize) -> usize {
        a.load_u8_at(self.abs(self.layout.aux_at(rank))) as usize
    }

    /// Instrumented number of valid entries (count word or bitmap popcount).
    pub(crate) fn load_len(&self, a: &mut Arena) -> usize {
        if self.layout.count_off.is_some() {
            self.load_count(a)
        } else {
            self.load_bitmap(a)
                .iter()
                .map(|w| w.count_ones() as usize)
                .sum()
        }
    }

    pub fn search(&self, a: &mut Arena, key: u64, method: SearchMethod) -> Result<SearchResult> {
        let kind = self.layout.kind;
        if !method.supports(kind) {
            return Err(Error::InvalidLayout(format!(
                "{method} search on a {kind} node"
            )));
        }
        Ok(match method {
            SearchMethod::Linear => {
                let n = self.load_count(a);
                let sorted = kind == LayoutKind::Sorted;
                let mut res = SearchResult::miss(sorted.then_some(n));
                for i in 0..n {
                    let k = self.load_key(a, i);
                    if k == key {
                        res = SearchResult::hit(i, sorted.then_some(i));
                        break;
                    }
                    if sorted && k > key {
                        res = SearchResult::miss(Some(i));
                        break;
                    }
                }
                res
            }
            SearchMethod::Binary => {
                let n = self.load_count(a);
                let rank = self.lower_bound_by(a, n, key, |node, a, r| node.load_key(a, r));
                if rank < n && self.load_key(a, rank) == key {
                    SearchResult::hit(rank, Some(rank))
                } else {
                    SearchResult::miss(Some(rank))
                }
            }
            SearchMethod::IndirectBinary => {
                let n = self.load_len(a);
                let rank = self.lower_bound_by(a, n, key, |node, a, r| {
                    let p = node.load_slot(a, r);
                    node.load_key(a, p)
                });
                if rank < n {
                    let p = self.load_slot(a, rank);
                    if self.load_key(a, p) == key {
                        return Ok(SearchResult::hit(p, Some(rank)));
                    }
                }
                SearchResult::miss(Some(rank))
            }
            SearchMethod::HashProbe => {
                let bm = self.load_bitmap(a);
                let fp = fingerprint(key);
                for p in set_bits(&bm) {
                    if a.load_u8_at(self.abs(self.layout.aux_at(p))) == fp
                        && self.load_key(a, p) == key
                    {
                        return Ok(SearchResult::hit(p, None));
                    }
                }
                SearchResult::miss(None)
            }
            SearchMethod::BitmapLinear => {
                let bm = self.load_bitmap(a);
                for p in set_bits(&bm) {
                    if self.load_key(a, p) == key {
                        return Ok(SearchResult::hit(p, None));
                    }
                }
                SearchResult::miss(None)
            }
        })
    }

    /// Natural search of the node's layout.
    pub fn find(&self, a: &mut Arena, key: u64) -> SearchResult {
        self.search(a, key, SearchMethod::default_for(self.layout.kind))
            .expect("default method fits layout")
    }

    fn lower_bound_by(
        &self,
        a: &mut Arena,
        n: usize,
        key: u64,
        key_at_rank: impl Fn(&Node, &mut Arena, usize) -> u64,
    ) -> usize {
        let (mut lo, mut hi) = (0, n);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if key_at_rank(self, a, mid) < key {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Routing in an inner node whose entries hold, per child, the largest key
    /// the child may contain. Returns the rank of the first entry whose key is
    /// `>= key`, or the entry count when every key is smaller.
    pub fn lower_bound_child(&self, a: &mut Arena, key: u64) -> Result<usize> {
        match self.layout.kind {
            LayoutKind::Sorted => Ok(self
                .search(a, key, SearchMethod::Binary)?
                .logical_rank
                .unwrap()),
            LayoutKind::Indirection => Ok(self
                .search(a, key, SearchMethod::IndirectBinary)?
                .logical_rank
                .unwrap()),
            other => Err(Error::InvalidLayout(format!(
                "{other} nodes cannot route key ranges"
            ))),
        }
    }

    /// Instrumented load of the child reference stored at logical `rank` of an
    /// inner node.
    pub fn child_at(&self, a: &mut Arena, rank: usize) -> Result<PRef> {
        let pos = match self.layout.kind {
            LayoutKind::Sorted => rank,
            LayoutKind::Indirection => self.load_slot(a, rank),
            other => {
                return Err(Error::InvalidLayout(format!(
                    "{other} nodes are not inner nodes"
                )))
            }
        };
        Ok(self.load_value(a, pos).as_child())
    }
}
