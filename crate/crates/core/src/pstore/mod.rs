//! Simulated persistent memory.
//!
//! An [`Arena`] is a flat, offset-addressed byte region with explicit
//! `store` / `flush` / `fence` semantics. Every cache line carries a state:
//!
//! ```text
//!   store            flush              fence
//! Clean ----> Dirty --------> Pending ---------> Clean (copied into durable image)
//!               ^                |
//!               +---- store -----+
//! ```
//!
//! The durable image only ever receives fenced lines, so a crash simply keeps
//! the durable image (deterministic drop) or additionally lets unfenced 8-byte
//! words leak through at random (adversarial mode, see [`CrashMode`]).
//!
//! The last part of the arena is reserved for allocator metadata and an undo
//! log used by the PMDK-style transactions (`tx_*`):
//!
//! ```text
//! [ heap ............................ | meta line | undo log ........ ]
//! 0                              heap_end      +64               size
//! meta: cursor(8) log_state(8) log_count(8)
//! log entry: offset(8) len(8) pre-image(len, padded to 8)
//! ```

mod crash;
mod stats;
mod trace;

pub use crash::{CrashMode, CrashPlan, Replay};
pub use stats::WriteStats;
pub use trace::{Event, Trace};

use crate::error::{Error, Result};

pub const LINE_SIZE: usize = 64;
/// Device-internal write-combining granularity.
pub const WC_BLOCK: usize = 256;
pub const DEFAULT_LOG_OVERHEAD: u64 = 16;

const META_BYTES: usize = 64;
const META_CURSOR: usize = 0;
const META_STATE: usize = 8;
const META_COUNT: usize = 16;
const LOG_HEADER: usize = 16;
pub(crate) const LOG_ACTIVE: u64 = 0x4556_4954_4341_5854;

/// Failure-atomicity discipline for a mutation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum FaStrategy {
    /// Undo-log transaction around all writes.
    Tx,
    /// Flush + fence the data, then publish through a minimal transaction.
    Individual,
    /// Flush + fence the data, then publish with a plain 8-byte aligned store.
    None,
}

impl FaStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            FaStrategy::Tx => "tx",
            FaStrategy::Individual => "individual",
            FaStrategy::None => "none",
        }
    }
}

impl std::str::FromStr for FaStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tx" => Ok(FaStrategy::Tx),
            "individual" => Ok(FaStrategy::Individual),
            "none" => Ok(FaStrategy::None),
            other => Err(Error::Parse(format!("unknown fa strategy `{other}`"))),
        }
    }
}

/// Position-independent reference to a byte range inside an arena.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PRef {
    pub offset: u64,
    pub len: u64,
}

impl PRef {
    pub const NULL: PRef = PRef { offset: 0, len: 0 };

    pub fn new(offset: u64, len: u64) -> Self {
        PRef { offset, len }
    }

    pub fn is_null(&self) -> bool {
        self.len == 0
    }

    pub fn end(&self) -> u64 {
        self.offset + self.len
    }

    pub fn to_bytes(self) -> [u8; 16] {
        let mut out = [0u8; 16];
        out[..8].copy_from_slice(&self.offset.to_le_bytes());
        out[8..].copy_from_slice(&self.len.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Self {
        PRef {
            offset: u64::from_le_bytes(bytes[..8].try_into().unwrap()),
            len: u64::from_le_bytes(bytes[8..16].try_into().unwrap()),
        }
    }

    fn check(&self, off: u64, len: u64) -> Result<u64> {
        match off.checked_add(len) {
            Some(end) if end <= self.len => Ok(self.offset + off),
            _ => Err(Error::OutOfRange {
                offset: off,
                len,
                bound: *self,
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LineState {
    Clean,
    Dirty,
    Pending,
}

#[derive(Clone, Debug)]
pub struct ArenaConfig {
    pub size: usize,
    pub log_capacity: usize,
    pub log_overhead: u64,
    /// Volatile arenas lose all contents on crash (DRAM stand-in).
    pub volatile: bool,
}

impl ArenaConfig {
    pub fn new(size: usize) -> Self {
        ArenaConfig {
            size,
            log_capacity: (size / 4) / LINE_SIZE * LINE_SIZE,
            log_overhead: DEFAULT_LOG_OVERHEAD,
            volatile: false,
        }
    }

    pub fn volatile(size: usize) -> Self {
        ArenaConfig {
            volatile: true,
            log_capacity: 0,
            ..ArenaConfig::new(size)
        }
    }

    pub fn with_log_capacity(mut self, bytes: usize) -> Self {
        self.log_capacity = bytes;
        self
    }

    pub fn with_log_overhead(mut self, bytes: u64) -> Self {
        self.log_overhead = bytes;
        self
    }

    fn heap_end(&self) -> Option<usize> {
        self.size.checked_sub(META_BYTES + self.log_capacity)
    }
}

#[derive(Clone, Debug, Default)]
struct TxState {
    /// Snapshotted ranges, in log order.
    snapshots: Vec<(u64, u64)>,
    /// Ranges writable inside the transaction: snapshots plus fresh allocations.
    covered: Vec<(u64, u64)>,
    log_tail: usize,
    count: u64,
}

impl TxState {
    fn covers(&self, off: u64, len: u64) -> bool {
        range_covered(&self.covered, off, len)
    }
}

fn range_covered(ranges: &[(u64, u64)], off: u64, len: u64) -> bool {
    let end = off + len;
    let mut pos = off;
    'outer: while pos < end {
        for &(s, l) in ranges {
            if s <= pos && pos < s + l {
                pos = s + l;
                continue 'outer;
            }
        }
        return false;
    }
    true
}

#[derive(Clone)]
pub struct Arena {
    config: ArenaConfig,
    data: Vec<u8>,
    durable: Vec<u8>,
    lines: Vec<LineState>,
    pending: Vec<u32>,
    read_epoch: Vec<u32>,
    epoch: u32,
    wc_epoch: Vec<u32>,
    fence_epoch: u32,
    heap_end: usize,
    cursor: usize,
    free_list: Vec<PRef>,
    tx: Option<TxState>,
    stats: WriteStats,
    trace: Option<Trace>,
}

impl std::fmt::Debug for Arena {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Arena")
            .field("size", &self.config.size)
            .field("volatile", &self.config.volatile)
            .field("cursor", &self.cursor)
            .field("heap_end", &self.heap_end)
            .field("in_tx", &self.tx.is_some())
            .field("stats", &self.stats)
            .finish()
    }
}

impl Arena {
    pub fn new(config: ArenaConfig) -> Result<Arena> {
        Self::from_image(config, None)
    }

    pub fn with_size(size: usize) -> Result<Arena> {
        Self::new(ArenaConfig::new(size))
    }

    fn from_image(config: ArenaConfig, image: Option<Vec<u8>>) -> Result<Arena> {
        if !config.size.is_multiple_of(LINE_SIZE) || !config.log_capacity.is_multiple_of(LINE_SIZE) {
            return Err(Error::InvalidArgument(format!(
                "arena size {} and log capacity {} must be multiples of {LINE_SIZE}",
                config.size, config.log_capacity
            )));
        }
        let heap_end = match config.heap_end() {
            Some(h) if h >= LINE_SIZE => h,
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "arena of {} bytes too small for a {}-byte log",
                    config.size, config.log_capacity
                )))
            }
        };
        let data = match image {
            Some(img) => {
                if img.len() != config.size {
                    return Err(Error::InvalidArgument(format!(
                        "image of {} bytes does not match arena size {}",
                        img.len(),
                        config.size
                    )));
                }
                img
            }
            None => vec![0u8; config.size],
        };
        let nlines = config.size / LINE_SIZE;
        let nblocks = config.size.div_ceil(WC_BLOCK);
        let mut arena = Arena {
            durable: data.clone(),
            data,
            lines: vec![LineState::Clean; nlines],
            pending: Vec::new(),
            read_epoch: vec![0; nlines],
            epoch: 1,
            wc_epoch: vec![0; nblocks],
            fence_epoch: 1,
            heap_end,
            cursor: 0,
            free_list: Vec::new(),
            tx: None,
            stats: WriteStats::default(),
            trace: None,
            config,
        };
        arena.cursor = arena.peek_u64(heap_end + META_CURSOR) as usize;
        if arena.cursor > heap_end {
            return Err(Error::Corruption(format!(
                "allocation cursor {} beyond heap end {heap_end}",
                arena.cursor
            )));
        }
        Ok(arena)
    }

    pub fn config(&self) -> &ArenaConfig {
        &self.config
    }

    pub fn size(&self) -> usize {
        self.config.size
    }

    pub fn heap_end(&self) -> usize {
        self.heap_end
    }

    pub fn is_volatile(&self) -> bool {
        self.config.volatile
    }

    pub fn remaining(&self) -> usize {
        self.heap_end - self.cursor
    }

    // ---- allocation ----

    pub fn allocate(&mut self, size: u64, align: u64) -> Result<PRef> {
        if size == 0 || !align.is_power_of_two() || align > 4096 {
            return Err(Error::InvalidArgument(format!(
                "allocate(size={size}, align={align}): size must be > 0 and align a power of two <= 4096"
            )));
        }
        if let Some(i) = self
            .free_list
            .iter()
            .position(|r| r.len == size && r.offset % align == 0)
        {
            let r = self.free_list.swap_remove(i);
            self.note_allocation(r)?;
            return Ok(r);
        }
        let start = (self.cursor as u64).next_multiple_of(align);
        let end = start + size;
        if end > self.heap_end as u64 {
            return Err(Error::ArenaExhausted {
                requested: size,
                remaining: (self.heap_end as u64).saturating_sub(start),
            });
        }
        let meta = (self.heap_end + META_CURSOR) as u64;
        if self.config.volatile {
            // Nothing to persist: the cursor lives only in memory.
        } else if self.tx.is_some() {
            self.snapshot_abs(meta, 8)?;
            self.raw_store(meta as usize, &end.to_le_bytes());
        } else {
            self.raw_store(meta as usize, &end.to_le_bytes());
            self.flush_at(meta, 8)?;
            self.fence();
        }
        self.cursor = end as usize;
        let r = PRef::new(start, size);
        self.note_allocation(r)?;
        Ok(r)
    }

    fn note_allocation(&mut self, r: PRef) -> Result<()> {
        self.stats.allocations += 1;
        self.stats.alloc_bytes += r.len;
        if let Some(tx) = self.tx.as_mut() {
            tx.covered.push((r.offset, r.len));
        }
        Ok(())
    }

    /// Returns a region to the volatile free list. The list does not survive a
    /// crash; freed regions are then leaked.
    pub fn free(&mut self, r: PRef) {
        if !r.is_null() {
            self.free_list.push(r);
        }
    }

    // ---- stores, flushes, fences ----

    pub fn store(&mut self, r: &PRef, off: u64, data: &[u8]) -> Result<()> {
        let abs = r.check(off, data.len() as u64)?;
        self.store_at(abs, data)
    }

    pub fn store_at(&mut self, abs: u64, data: &[u8]) -> Result<()> {
        self.check_heap(abs, data.len() as u64)?;
        if let Some(tx) = &self.tx {
            if !tx.covers(abs, data.len() as u64) {
                return Err(Error::UnsnapshottedWrite {
                    offset: abs,
                    len: data.len() as u64,
                });
            }
        }
        self.raw_store(abs as usize, data);
        Ok(())
    }

    pub fn store_u64_at(&mut self, abs: u64, v: u64) -> Result<()> {
        self.store_at(abs, &v.to_le_bytes())
    }

    fn raw_store(&mut self, abs: usize, data: &[u8]) {
        if data.is_empty() {
            return;
        }
        self.data[abs..abs + data.len()].copy_from_slice(data);
        self.stats.modified_bytes += data.len() as u64;
        let first = abs / LINE_SIZE;
        let last = (abs + data.len() - 1) / LINE_SIZE;
        for l in first..=last {
            self.lines[l] = LineState::Dirty;
        }
        if let Some(t) = self.trace.as_mut() {
            t.events.push(Event::Store {
                offset: abs as u64,
                data: data.to_vec(),
            });
        }
    }

    pub fn flush(&mut self, r: &PRef, off: u64, len: u64) -> Result<()> {
        let abs = r.check(off, len)?;
        self.flush_at(abs, len)
    }

    pub fn flush_at(&mut self, abs: u64, len: u64) -> Result<()> {
        if abs
            .checked_add(len)
            .is_none_or(|e| e > self.config.size as u64)
        {
            return Err(Error::OutOfRange {
                offset: abs,
                len,
                bound: PRef::new(0, self.config.size as u64),
            });
        }
        if len == 0 {
            return Ok(());
        }
        let first = abs as usize / LINE_SIZE;
        let last = (abs + len - 1) as usize / LINE_SIZE;
        for l in first..=last {
            if self.lines[l] == LineState::Dirty {
                self.lines[l] = LineState::Pending;
                self.pending.push(l as u32);
                self.stats.flushed_lines += 1;
                self.stats.written_bytes += LINE_SIZE as u64;
                let block = l * LINE_SIZE / WC_BLOCK;
                if self.wc_epoch[block] != self.fence_epoch {
                    self.wc_epoch[block] = self.fence_epoch;
                    self.stats.wc_blocks += 1;
                }
            }
        }
        if let Some(t) = self.trace.as_mut() {
            t.events.push(Event::Flush { offset: abs, len });
        }
        Ok(())
    }

    pub fn fence(&mut self) {
        for l in std::mem::take(&mut self.pending) {
            let l = l as usize;
            if self.lines[l] == LineState::Pending {
                let s = l * LINE_SIZE;
                self.durable[s..s + LINE_SIZE].copy_from_slice(&self.data[s..s + LINE_SIZE]);
                self.lines[l] = LineState::Clean;
            }
        }
        self.stats.fences += 1;
        self.fence_epoch = self.fence_epoch.wrapping_add(1).max(1);
        if let Some(t) = self.trace.as_mut() {
            t.events.push(Event::Fence);
        }
    }

    /// Store, flush and fence in one step.
    pub fn persist_at(&mut self, abs: u64, data: &[u8]) -> Result<()> {
        self.store_at(abs, data)?;
        self.flush_at(abs, data.len() as u64)?;
        self.fence();
        Ok(())
    }

    /// Writes straight into both the working and the durable image without
    /// touching counters or line states. Used to set up benchmark fixtures.
    pub fn poke(&mut self, abs: u64, data: &[u8]) -> Result<()> {
        self.check_heap(abs, data.len() as u64)?;
        let a = abs as usize;
        self.data[a..a + data.len()].copy_from_slice(data);
        self.durable[a..a + data.len()].copy_from_slice(data);
        if let Some(t) = self.trace.as_mut() {
            t.events.push(Event::Poke {
                offset: abs,
                data: data.to_vec(),
            });
        }
        Ok(())
    }

    // ---- loads ----

    pub fn load(&mut self, r: &PRef, off: u64, len: u64) -> Result<Vec<u8>> {
        let abs = r.check(off, len)?;
        let mut buf = vec![0u8; len as usize];
        self.load_at(abs, &mut buf)?;
        Ok(buf)
    }

    pub fn load_into(&mut self, r: &PRef, off: u64, buf: &mut [u8]) -> Result<()> {
        let abs = r.check(off, buf.len() as u64)?;
        self.load_at(abs, buf)
    }

    pub fn load_at(&mut self, abs: u64, buf: &mut [u8]) -> Result<()> {
        if abs
            .checked_add(buf.len() as u64)
            .is_none_or(|e| e > self.config.size as u64)
        {
            return Err(Error::OutOfRange {
                offset: abs,
                len: buf.len() as u64,
                bound: PRef::new(0, self.config.size as u64),
            });
        }
        self.touch(abs as usize, buf.len());
        let a = abs as usize;
        buf.copy_from_slice(&self.data[a..a + buf.len()]);
        Ok(())
    }

    pub fn load_u64_at(&mut self, abs: u64) -> u64 {
        self.touch(abs as usize, 8);
        self.peek_u64(abs as usize)
    }

    pub fn load_u8_at(&mut self, abs: u64) -> u8 {
        self.touch(abs as usize, 1);
        self.data[abs as usize]
    }

    fn touch(&mut self, abs: usize, len: usize) {
        if len == 0 {
            return;
        }
        let first = abs / LINE_SIZE;
        let last = (abs + len - 1) / LINE_SIZE;
        for l in first..=last {
            if self.read_epoch[l] != self.epoch {
                self.read_epoch[l] = self.epoch;
                self.stats.lines_read += 1;
            }
        }
    }

    /// Uninstrumented view of the working image.
    pub fn peek(&self, abs: usize, len: usize) -> &[u8] {
        &self.data[abs..abs + len]
    }

    pub fn peek_u64(&self, abs: usize) -> u64 {
        u64::from_le_bytes(self.data[abs..abs + 8].try_into().unwrap())
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn durable_image(&self) -> &[u8] {
        &self.durable
    }

    pub fn line_state(&self, line: usize) -> LineState {
        self.lines[line]
    }

    pub fn dirty_lines(&self) -> usize {
        self.lines
            .iter()
            .filter(|s| **s == LineState::Dirty)
            .count()
    }

    // ---- statistics ----

    pub fn stats(&self) -> WriteStats {
        self.stats
    }

    pub fn reset_stats(&mut self) {
        self.stats = WriteStats::default();
        self.reset_read_window();
    }

    /// Restarts distinct-line read counting without touching any counter.
    pub fn reset_read_window(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.read_epoch.iter_mut().for_each(|e| *e = 0);
            self.epoch = 1;
        }
    }

    /// Runs `f` and returns its result together with the counter delta.
    pub fn measure<T>(
        &mut self,
        f: impl FnOnce(&mut Arena) -> Result<T>,
    ) -> Result<(T, WriteStats)> {
        let before = self.stats;
        let out = f(self)?;
        Ok((out, self.stats.since(&before)))
    }

    // ---- transactions ----

    pub fn in_tx(&self) -> bool {
        self.tx.is_some()
    }

    pub fn tx_begin(&mut self) -> Result<()> {
        if self.tx.is_some() {
            return Err(Error::NestedTransaction);
        }
        let meta = self.heap_end;
        let mut hdr = [0u8; 16];
        hdr[..8].copy_from_slice(&LOG_ACTIVE.to_le_bytes());
        self.raw_store(meta + META_STATE, &hdr);
        self.flush_at((meta + META_STATE) as u64, 16)?;
        self.fence();
        self.tx = Some(TxState {
            log_tail: meta + META_BYTES,
            ..TxState::default()
        });
        Ok(())
    }

    pub fn tx_snapshot(&mut self, r: &PRef, off: u64, len: u64) -> Result<()> {
        let abs = r.check(off, len)?;
        self.check_heap(abs, len)?;
        self.snapshot_abs(abs, len)
    }

    pub fn tx_snapshot_at(&mut self, abs: u64, len: u64) -> Result<()> {
        self.check_heap(abs, len)?;
        self.snapshot_abs(abs, len)
    }

    fn snapshot_abs(&mut self, abs: u64, len: u64) -> Result<()> {
        let tx = self.tx.as_ref().ok_or(Error::NoTransaction)?;
        if len == 0 || tx.covers(abs, len) {
            return Ok(());
        }
        let padded = (len as usize).next_multiple_of(8);
        let needed = LOG_HEADER + padded;
        let available = self.config.size - tx.log_tail;
        if needed > available {
            return Err(Error::LogFull {
                needed: needed as u64,
                available: available as u64,
            });
        }
        let tail = tx.log_tail;
        let mut entry = Vec::with_capacity(needed);
        entry.extend_from_slice(&abs.to_le_bytes());
        entry.extend_from_slice(&len.to_le_bytes());
        entry.extend_from_slice(&self.data[abs as usize..(abs + len) as usize]);
        entry.resize(needed, 0);
        self.raw_store(tail, &entry);
        self.flush_at(tail as u64, needed as u64)?;
        self.fence();
        let count = {
            let tx = self.tx.as_mut().unwrap();
            tx.count += 1;
            tx.log_tail += needed;
            tx.snapshots.push((abs, len));
            tx.covered.push((abs, len));
            tx.count
        };
        let count_at = self.heap_end + META_COUNT;
        self.raw_store(count_at, &count.to_le_bytes());
        self.flush_at(count_at as u64, 8)?;
        self.fence();
        self.stats.log_bytes += len + self.config.log_overhead;
        Ok(())
    }

    pub fn tx_commit(&mut self) -> Result<()> {
        let tx = self.tx.take().ok_or(Error::NoTransaction)?;
        for &(s, l) in &tx.covered {
            self.flush_at(s, l)?;
        }
        self.fence();
        self.clear_log()
    }

    pub fn tx_abort(&mut self) -> Result<()> {
        let tx = self.tx.take().ok_or(Error::NoTransaction)?;
        let entries = read_log(&self.data, self.heap_end, tx.count)?;
        for (abs, pre) in entries.iter().rev() {
            self.raw_store(*abs as usize, pre);
            self.flush_at(*abs, pre.len() as u64)?;
        }
        self.fence();
        self.clear_log()?;
        self.cursor = self.peek_u64(self.heap_end + META_CURSOR) as usize;
        Ok(())
    }

    fn clear_log(&mut self) -> Result<()> {
        let at = self.heap_end + META_STATE;
        self.raw_store(at, &[0u8; 16]);
        self.flush_at(at as u64, 16)?;
        self.fence();
        Ok(())
    }

    fn check_heap(&self, abs: u64, len: u64) -> Result<()> {
        match abs.checked_add(len) {
            Some(end) if end <= self.heap_end as u64 => Ok(()),
            _ => Err(Error::OutOfRange {
                offset: abs,
                len,
                bound: PRef::new(0, self.heap_end as u64),
            }),
        }
    }

    // ---- tracing ----

    /// Starts recording every store / flush / fence. The current state becomes
    /// the replay baseline for crash plans.
    pub fn start_trace(&mut self) {
        let mut baseline = self.clone();
        baseline.trace = None;
        self.trace = Some(Trace {
            baseline: Box::new(baseline),
            events: Vec::new(),
        });
    }

    pub fn stop_trace(&mut self) -> Option<Trace> {
        self.trace.take()
    }

    pub fn trace(&self) -> Option<&Trace> {
        self.trace.as_ref()
    }

    pub fn recorded_events(&self) -> usize {
        self.trace.as_ref().map_or(0, |t| t.events.len())
    }

    pub(crate) fn apply_event(&mut self, ev: &Event) {
        match ev {
            Event::Store { offset, data } => self.raw_store(*offset as usize, data),
            Event::Flush { offset, len } => {
                let _ = self.flush_at(*offset, *len);
            }
            Event::Fence => self.fence(),
            Event::Poke { offset, data } => {
                let a = *offset as usize;
                self.data[a..a + data.len()].copy_from_slice(data);
                self.durable[a..a + data.len()].copy_from_slice(data);
            }
        }
    }
}

pub(crate) fn read_log(image: &[u8], heap_end: usize, count: u64) -> Result<Vec<(u64, Vec<u8>)>> {
    let mut out = Vec::with_capacity(count as usize);
    let mut at = heap_end + META_BYTES;
    for _ in 0..count {
        if at + LOG_HEADER > image.len() {
            return Err(Error::Corruption("undo log entry beyond arena".into()));
        }
        let abs = u64::from_le_bytes(image[at..at + 8].try_into().unwrap());
        let len = u64::from_le_bytes(image[at + 8..at + 16].try_into().unwrap()) as usize;
        let start = at + LOG_HEADER;
        if start + len > image.len() || abs as usize + len > heap_end + META_BYTES {
            return Err(Error::Corruption(format!(
                "undo log entry [{abs}, +{len}) out of range"
            )));
        }
        out.push((abs, image[start..start + len].to_vec()));
        at = start + len.next_multiple_of(8);
    }
    Ok(out)
}
