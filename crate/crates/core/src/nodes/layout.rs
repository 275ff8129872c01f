use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::entry::{KEY_BYTES, VALUE_BYTES};
use crate::error::{Error, Result};
use crate::pstore::LINE_SIZE;

pub const NODE_SIZES: [u64; 5] = [256, 512, 1024, 2048, 4096];

/// Capacities of nodes carrying a bitmap plus a 1-byte-per-entry search
/// structure. Taken as canonical; the 2 KiB packing would admit 80.
const SEARCH_STRUCTURE_CAPACITY: [usize; 5] = [8, 18, 37, 79, 160];

/// Sibling links: two 16-byte references (next, prev).
const LINK_BYTES: u64 = 16;
/// Count word plus both links.
const BASE_HEADER: u64 = 8 + 2 * LINK_BYTES;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LayoutKind {
    Sorted,
    Unsorted,
    BitmapOnly,
    Indirection,
    Hashing,
}

impl LayoutKind {
    pub const ALL: [LayoutKind; 5] = [
        LayoutKind::Sorted,
        LayoutKind::Unsorted,
        LayoutKind::BitmapOnly,
        LayoutKind::Indirection,
        LayoutKind::Hashing,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            LayoutKind::Sorted => "sorted",
            LayoutKind::Unsorted => "unsorted",
            LayoutKind::BitmapOnly => "bitmap",
            LayoutKind::Indirection => "indirection",
            LayoutKind::Hashing => "hashing",
        }
    }

    pub fn has_bitmap(&self) -> bool {
        matches!(
            self,
            LayoutKind::BitmapOnly | LayoutKind::Indirection | LayoutKind::Hashing
        )
    }

    /// Layouts that keep a logical key order and can therefore route ranges.
    pub fn is_ordered(&self) -> bool {
        matches!(self, LayoutKind::Sorted | LayoutKind::Indirection)
    }

    pub fn capacity_class(&self) -> CapacityClass {
        if self.has_bitmap() {
            CapacityClass::SearchStructure
        } else {
            CapacityClass::Aligned
        }
    }
}

impl fmt::Display for LayoutKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LayoutKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sorted" => Ok(LayoutKind::Sorted),
            "unsorted" => Ok(LayoutKind::Unsorted),
            "bitmap" | "bitmaponly" | "bitmap-only" => Ok(LayoutKind::BitmapOnly),
            "indirection" => Ok(LayoutKind::Indirection),
            "hashing" | "hash" => Ok(LayoutKind::Hashing),
            other => Err(Error::Parse(format!("unknown layout `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CapacityClass {
    /// Count and links packed in front of the keys, nothing aligned.
    Base,
    /// Count and links padded to one cache line.
    Aligned,
    /// Bitmap plus slot or fingerprint array in the leading lines.
    SearchStructure,
}

fn size_index(node_size: u64) -> Result<usize> {
    NODE_SIZES
        .iter()
        .position(|s| *s == node_size)
        .ok_or(Error::UnsupportedNodeSize(node_size))
}

/// Entries per node for a capacity class and node size.
pub fn capacity_of(class: CapacityClass, node_size: u64) -> Result<usize> {
    let idx = size_index(node_size)?;
    let entry = (KEY_BYTES + VALUE_BYTES) as u64;
    Ok(match class {
        CapacityClass::Base => ((node_size - BASE_HEADER) / entry) as usize,
        CapacityClass::Aligned => ((node_size - LINE_SIZE as u64) / entry) as usize,
        CapacityClass::SearchStructure => SEARCH_STRUCTURE_CAPACITY[idx],
    })
}

pub fn capacity(kind: LayoutKind, node_size: u64) -> Result<usize> {
    capacity_of(kind.capacity_class(), node_size)
}

/// Byte layout of a node, all offsets relative to the node start.
///
/// ```text
/// Sorted / Unsorted:  | count(8) next(16) prev(16) pad | keys[M] | values[M] |
/// bitmap layouts:     | bitmap words | next(16) prev(16) | slots or fps[M] | pad | keys[M] | values[M] |
/// ```
///
/// Keys start on a cache-line boundary; values do too whenever the node has
/// room for the padding.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub kind: LayoutKind,
    pub node_size: u64,
    pub capacity: usize,
    pub header_bytes: u64,
    pub count_off: Option<u64>,
    pub bitmap_off: u64,
    pub bitmap_bytes: u64,
    pub next_off: u64,
    pub prev_off: u64,
    /// Slot array (Indirection) or fingerprint array (Hashing).
    pub aux_off: Option<u64>,
    pub keys_off: u64,
    pub values_off: u64,
}

impl Layout {
    pub fn new(kind: LayoutKind, node_size: u64) -> Result<Layout> {
        let cap = capacity(kind, node_size)?;
        let line = LINE_SIZE as u64;
        let (count_off, bitmap_bytes, next_off, aux_off, header_raw) = if kind.has_bitmap() {
            let bw = (cap as u64).div_ceil(64) * 8;
            let next = bw;
            let aux_start = bw + 2 * LINK_BYTES;
            let aux = match kind {
                LayoutKind::Indirection | LayoutKind::Hashing => Some(aux_start),
                _ => None,
            };
            let raw = aux_start + if aux.is_some() { cap as u64 } else { 0 };
            (None, bw, next, aux, raw)
        } else {
            (Some(0), 0, 8, None, BASE_HEADER)
        };
        let header_bytes = header_raw.next_multiple_of(line);
        let keys_off = header_bytes;
        let keys_end = keys_off + cap as u64 * KEY_BYTES as u64;
        let values_len = cap as u64 * VALUE_BYTES as u64;
        let aligned = keys_end.next_multiple_of(line);
        let values_off = if aligned + values_len <= node_size {
            aligned
        } else {
            keys_end
        };
        if values_off + values_len > node_size {
            return Err(Error::InvalidLayout(format!(
                "{kind} node of {node_size} bytes cannot hold {cap} entries"
            )));
        }
        Ok(Layout {
            kind,
            node_size,
            capacity: cap,
            header_bytes,
            count_off,
            bitmap_off: 0,
            bitmap_bytes,
            next_off,
            prev_off: next_off + LINK_BYTES,
            aux_off,
            keys_off,
            values_off,
        })
    }

    /// Node bytes per stored entry when full.
    pub fn bytes_per_entry(&self) -> f64 {
        self.node_size as f64 / self.capacity as f64
    }

    pub fn bitmap_words(&self) -> usize {
        (self.bitmap_bytes / 8) as usize
    }

    pub(crate) fn key_off(&self, pos: usize) -> u64 {
        self.keys_off + (pos * KEY_BYTES) as u64
    }

    pub(crate) fn value_off(&self, pos: usize) -> u64 {
        self.values_off + (pos * VALUE_BYTES) as u64
    }

    pub(crate) fn aux_at(&self, pos: usize) -> u64 {
        self.aux_off.expect("layout without slot/fingerprint array") + pos as u64
    }

    pub(crate) fn bitmap_word_off(&self, word: usize) -> u64 {
        self.bitmap_off + (word * 8) as u64
    }
}
