use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

use super::LINE_SIZE;

/// Counters collected by an [`Arena`](super::Arena).
///
/// `written_bytes` is always `LINE_SIZE * flushed_lines`: a flush writes whole
/// lines back to the media no matter how many bytes inside them changed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WriteStats {
    pub modified_bytes: u64,
    pub written_bytes: u64,
    pub flushed_lines: u64,
    pub fences: u64,
    pub allocations: u64,
    pub alloc_bytes: u64,
    pub lines_read: u64,
    pub log_bytes: u64,
    /// Distinct 256-byte write-combining blocks touched by flushes within a
    /// fence epoch. Informational only.
    pub wc_blocks: u64,
}

impl WriteStats {
    /// Counter difference `self - earlier`. Saturates so that a reset in
    /// between yields zeros instead of wrapping.
    pub fn since(&self, earlier: &WriteStats) -> WriteStats {
        WriteStats {
            modified_bytes: self.modified_bytes.saturating_sub(earlier.modified_bytes),
            written_bytes: self.written_bytes.saturating_sub(earlier.written_bytes),
            flushed_lines: self.flushed_lines.saturating_sub(earlier.flushed_lines),
            fences: self.fences.saturating_sub(earlier.fences),
            allocations: self.allocations.saturating_sub(earlier.allocations),
            alloc_bytes: self.alloc_bytes.saturating_sub(earlier.alloc_bytes),
            lines_read: self.lines_read.saturating_sub(earlier.lines_read),
            log_bytes: self.log_bytes.saturating_sub(earlier.log_bytes),
            wc_blocks: self.wc_blocks.saturating_sub(earlier.wc_blocks),
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.written_bytes == LINE_SIZE as u64 * self.flushed_lines
    }
}

impl AddAssign for WriteStats {
    fn add_assign(&mut self, rhs: WriteStats) {
        self.modified_bytes += rhs.modified_bytes;
        self.written_bytes += rhs.written_bytes;
        self.flushed_lines += rhs.flushed_lines;
        self.fences += rhs.fences;
        self.allocations += rhs.allocations;
        self.alloc_bytes += rhs.alloc_bytes;
        self.lines_read += rhs.lines_read;
        self.log_bytes += rhs.log_bytes;
        self.wc_blocks += rhs.wc_blocks;
    }
}
