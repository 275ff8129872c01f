//! LSM-style level primitives on a persistent arena.
//!
//! Level `i` owns `K` runs of `C * K^i` entries each; run validity is tracked
//! by one durable 8-byte head per level, so runs `[0, head)` are live and the
//! rest is free space. Newer data wins: within a level a higher run index is
//! newer, and a lower level is newer than a higher one.
//!
//! ```text
//! offset 0   directory line: magic L K C node_size scratch0 scratch1
//! 64         heads[L]      (8 bytes each)
//! 64 + 8L    level bases[L]
//! ...        level 0: K runs | level 1: K runs | ... | 2 scratch runs
//! run        count(8) pad(56) | key(8) value(16) | key value | ...
//! ```

mod buffer;

#[cfg(test)]
mod tests;

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt::{self, Write as _};
use std::str::FromStr;

pub use buffer::{BufferKind, DramBuffer};

use crate::error::{Error, Result};
use crate::nodes::{Entry, Value, ENTRY_BYTES, KEY_BYTES};
use crate::pstore::{Arena, ArenaConfig, CrashPlan, FaStrategy, PRef, WriteStats, LINE_SIZE};

const MAGIC: u64 = 0x314d_534c_4d45_4d50;
const RUN_HEADER: u64 = 64;

/// Run capacity that makes one level-0 run as large as one node.
pub fn run_capacity(node_size: u64) -> usize {
    (node_size.saturating_sub(RUN_HEADER) / ENTRY_BYTES as u64) as usize
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MergeKind {
    /// Left-leaning binary reduction `((r0 + r1) + r2) + r3`.
    TwoWay,
    /// One heap-driven pass over all runs.
    KWay,
}

impl MergeKind {
    pub const ALL: [MergeKind; 2] = [MergeKind::TwoWay, MergeKind::KWay];

    pub fn name(&self) -> &'static str {
        match self {
            MergeKind::TwoWay => "2way",
            MergeKind::KWay => "kway",
        }
    }
}

impl fmt::Display for MergeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MergeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "2way" | "2-way" | "twoway" => Ok(MergeKind::TwoWay),
            "kway" | "k-way" => Ok(MergeKind::KWay),
            other => Err(Error::Parse(format!("unknown merge kind `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LsmConfig {
    pub levels: usize,
    pub runs_per_level: usize,
    pub node_size: u64,
    /// Arena size override; by default the arena is sized to fit exactly.
    pub arena_bytes: Option<usize>,
}

impl LsmConfig {
    pub fn new(node_size: u64) -> Self {
        LsmConfig {
            levels: 3,
            runs_per_level: 4,
            node_size,
            arena_bytes: None,
        }
    }

    pub fn with_levels(mut self, levels: usize) -> Self {
        self.levels = levels;
        self
    }

    pub fn with_runs_per_level(mut self, k: usize) -> Self {
        self.runs_per_level = k;
        self
    }

    pub fn with_arena_bytes(mut self, bytes: usize) -> Self {
        self.arena_bytes = Some(bytes);
        self
    }
}

#[derive(Clone, Debug)]
pub struct Lsm {
    cfg: LsmConfig,
    arena: Arena,
    caps: Vec<usize>,
    run_bytes: Vec<u64>,
    bases: Vec<u64>,
    scratch: [u64; 2],
}

impl Lsm {
    pub fn new(cfg: LsmConfig) -> Result<Lsm> {
        let c = run_capacity(cfg.node_size);
        if cfg.levels < 1 || cfg.runs_per_level < 2 || c == 0 {
            return Err(Error::InvalidArgument(format!(
                "need at least 1 level, 2 runs per level and room for one entry (got {cfg:?})"
            )));
        }
        let (caps, run_bytes) = geometry(c, cfg.runs_per_level, cfg.levels)?;
        let dir = dir_bytes(cfg.levels);
        let largest = *run_bytes.last().unwrap();
        let heap: u64 = dir
            + run_bytes
                .iter()
                .map(|b| b * cfg.runs_per_level as u64)
                .sum::<u64>()
            + 2 * largest;
        // Room for the largest snapshot plus the head words and log headers.
        let log = (largest + 4 * LINE_SIZE as u64) as usize;
        let size = match cfg.arena_bytes {
            Some(s) => s,
            None => (heap as usize + LINE_SIZE + log).next_multiple_of(LINE_SIZE),
        };
        let mut arena = Arena::new(ArenaConfig::new(size).with_log_capacity(log))?;
        let d = arena.allocate(dir, LINE_SIZE as u64)?;
        debug_assert_eq!(d.offset, 0);
        let mut bases = Vec::with_capacity(cfg.levels);
        for rb in &run_bytes {
            bases.push(
                arena
                    .allocate(rb * cfg.runs_per_level as u64, LINE_SIZE as u64)?
                    .offset,
            );
        }
        let scratch = [
            arena.allocate(largest, LINE_SIZE as u64)?.offset,
            arena.allocate(largest, LINE_SIZE as u64)?.offset,
        ];
        let mut img = vec![0u8; dir as usize];
        let header = [
            MAGIC,
            cfg.levels as u64,
            cfg.runs_per_level as u64,
            c as u64,
            cfg.node_size,
            scratch[0],
            scratch[1],
        ];
        for (i, w) in header.iter().enumerate() {
            img[i * 8..i * 8 + 8].copy_from_slice(&w.to_le_bytes());
        }
        for (i, b) in bases.iter().enumerate() {
            let at = base_off(cfg.levels, i) as usize;
            img[at..at + 8].copy_from_slice(&b.to_le_bytes());
        }
        arena.persist_at(0, &img)?;
        arena.reset_stats();
        Ok(Lsm {
            cfg,
            arena,
            caps,
            run_bytes,
            bases,
            scratch,
        })
    }

    /// Reopens the hierarchy from a (crashed) arena. Heads beyond `K` or a
    /// damaged directory are reported as corruption.
    pub fn recover_level(arena: Arena) -> Result<Lsm> {
        let w = |i: usize| arena.peek_u64(i * 8);
        if w(0) != MAGIC {
            return Err(Error::Corruption("lsm directory missing".into()));
        }
        let (levels, k, c, node_size) = (w(1) as usize, w(2) as usize, w(3) as usize, w(4));
        if levels == 0
            || k < 2
            || c != run_capacity(node_size)
            || dir_bytes(levels) as usize > arena.heap_end()
        {
            return Err(Error::Corruption(
                "lsm directory holds an impossible geometry".into(),
            ));
        }
        let (caps, run_bytes) =
            geometry(c, k, levels).map_err(|e| Error::Corruption(e.to_string()))?;
        let bases: Vec<u64> = (0..levels)
            .map(|i| arena.peek_u64(base_off(levels, i) as usize))
            .collect();
        let scratch = [w(5), w(6)];
        let heap = arena.heap_end() as u64;
        for (i, b) in bases.iter().enumerate() {
            if b + run_bytes[i] * k as u64 > heap {
                return Err(Error::Corruption(format!(
                    "level {i} extends past the heap"
                )));
            }
        }
        let cfg = LsmConfig {
            levels,
            runs_per_level: k,
            node_size,
            arena_bytes: Some(arena.size()),
        };
        let lsm = Lsm {
            cfg,
            arena,
            caps,
            run_bytes,
            bases,
            scratch,
        };
        for l in 0..levels {
            let h = lsm.head(l);
            if h > k {
                return Err(Error::Corruption(format!(
                    "level {l} head {h} exceeds {k} runs"
                )));
            }
            for r in 0..h {
                let n = lsm.arena.peek_u64(lsm.run_at(l, r) as usize) as usize;
                if n > lsm.caps[l] {
                    return Err(Error::Corruption(format!(
                        "level {l} run {r} claims {n} entries"
                    )));
                }
            }
        }
        Ok(lsm)
    }

    pub fn crash(&self, plan: &CrashPlan) -> Result<Lsm> {
        Lsm::recover_level(self.arena.crash(plan)?)
    }

    // ---- accessors ----

    pub fn config(&self) -> &LsmConfig {
        &self.cfg
    }

    pub fn arena(&self) -> &Arena {
        &self.arena
    }

    pub fn arena_mut(&mut self) -> &mut Arena {
        &mut self.arena
    }

    pub fn levels(&self) -> usize {
        self.cfg.levels
    }

    pub fn runs_per_level(&self) -> usize {
        self.cfg.runs_per_level
    }

    /// Entries per run at `level`.
    pub fn run_capacity(&self, level: usize) -> usize {
        self.caps[level]
    }

    /// Bytes of one run region (header plus entry array) at `level`.
    pub fn run_region_bytes(&self, level: usize) -> u64 {
        RUN_HEADER + (self.caps[level] * ENTRY_BYTES) as u64
    }

    pub fn head(&self, level: usize) -> usize {
        self.arena.peek_u64(head_off(level) as usize) as usize
    }

    fn run_at(&self, level: usize, run: usize) -> u64 {
        self.bases[level] + run as u64 * self.run_bytes[level]
    }

    /// Region of one run: count header plus entry array.
    pub fn run_ref(&self, level: usize, run: usize) -> PRef {
        PRef::new(self.run_at(level, run), self.run_region_bytes(level))
    }

    /// The directory line(s) holding magic, geometry, heads and bases.
    pub fn directory(&self) -> PRef {
        PRef::new(0, dir_bytes(self.levels()))
    }

    /// Uninstrumented contents of one run, valid or not.
    pub fn run(&self, level: usize, run: usize) -> Vec<Entry> {
        let at = self.run_at(level, run) as usize;
        let n = (self.arena.peek_u64(at) as usize).min(self.caps[level]);
        decode(self.arena.peek(at + RUN_HEADER as usize, n * ENTRY_BYTES))
    }

    /// Valid runs of a level, oldest first.
    pub fn level_runs(&self, level: usize) -> Vec<Vec<Entry>> {
        (0..self.head(level)).map(|r| self.run(level, r)).collect()
    }

    /// Logical contents with newest-wins across all valid runs.
    pub fn contents(&self) -> BTreeMap<u64, Value> {
        let mut out = BTreeMap::new();
        for l in (0..self.levels()).rev() {
            for run in self.level_runs(l) {
                out.extend(run.into_iter().map(|e| (e.key, e.value)));
            }
        }
        out
    }

    /// Newest value of `key`, searching level 0 first and runs newest first.
    pub fn get(&self, key: u64) -> Option<Value> {
        (0..self.levels()).find_map(|l| {
            self.level_runs(l).into_iter().rev().find_map(|run| {
                run.binary_search_by_key(&key, |e| e.key)
                    .ok()
                    .map(|i| run[i].value)
            })
        })
    }

    /// Fixture helper: overwrites a level's runs and head with uninstrumented
    /// writes.
    pub fn load_level(&mut self, level: usize, runs: &[Vec<Entry>]) -> Result<()> {
        if runs.len() > self.runs_per_level() {
            return Err(Error::LevelFull(level));
        }
        for (r, entries) in runs.iter().enumerate() {
            check_run(entries, self.caps[level])?;
            let at = self.run_at(level, r);
            self.arena.poke(at, &(entries.len() as u64).to_le_bytes())?;
            self.arena.poke(at + RUN_HEADER, &encode(entries))?;
        }
        self.arena
            .poke(head_off(level), &(runs.len() as u64).to_le_bytes())
    }

    // ---- move ----

    /// Persists the buffer as the next level-0 run and clears it. Returns the
    /// counter delta.
    pub fn move_node(&mut self, buf: &mut DramBuffer, fa: FaStrategy) -> Result<WriteStats> {
        let h = self.head(0);
        if h >= self.runs_per_level() {
            return Err(Error::LevelFull(0));
        }
        if buf.is_empty() {
            return Err(Error::Precondition(
                "nothing to move from an empty buffer".into(),
            ));
        }
        if buf.len() > self.caps[0] {
            return Err(Error::CapacityExceeded {
                needed: buf.len(),
                capacity: self.caps[0],
            });
        }
        let entries = buf.sorted();
        let at = self.run_at(0, h);
        let before = self.arena.stats();
        let region = self.run_region_bytes(0);
        match fa {
            FaStrategy::Tx => {
                let a = &mut self.arena;
                a.tx_begin()?;
                let res = (|| {
                    a.tx_snapshot_at(at, region)?;
                    a.tx_snapshot_at(head_off(0), 8)?;
                    store_run(a, at, &entries)?;
                    a.store_u64_at(head_off(0), h as u64 + 1)
                })();
                finish_tx(a, res)?;
            }
            FaStrategy::Individual | FaStrategy::None => {
                store_run(&mut self.arena, at, &entries)?;
                self.arena
                    .flush_at(at, RUN_HEADER + (entries.len() * ENTRY_BYTES) as u64)?;
                self.arena.fence();
                self.publish_heads(fa, &[(0, h as u64 + 1)])?;
            }
        }
        buf.clear();
        Ok(self.arena.stats().since(&before))
    }

    /// Durable head updates after the data is fenced: one minimal transaction
    /// (Individual) or 8-byte stores persisted in order (None).
    fn publish_heads(&mut self, fa: FaStrategy, heads: &[(usize, u64)]) -> Result<()> {
        let a = &mut self.arena;
        match fa {
            FaStrategy::Individual => {
                a.tx_begin()?;
                let res = heads.iter().try_for_each(|&(l, v)| {
                    a.tx_snapshot_at(head_off(l), 8)?;
                    a.store_u64_at(head_off(l), v)
                });
                finish_tx(a, res)
            }
            FaStrategy::None => heads
                .iter()
                .try_for_each(|&(l, v)| a.persist_at(head_off(l), &v.to_le_bytes())),
            FaStrategy::Tx => unreachable!("tx heads are written inside the data transaction"),
        }
    }

    // ---- merge ----

    /// Merges every valid run of `level` into the next free run of
    /// `level + 1`, then empties `level`. Duplicate keys keep the newest
    /// value. `via_dram` merges in volatile memory and copies the result
    /// once; otherwise intermediates of the binary reduction go through
    /// persistent scratch runs.
    pub fn merge(
        &mut self,
        level: usize,
        kind: MergeKind,
        via_dram: bool,
        fa: FaStrategy,
    ) -> Result<WriteStats> {
        if level + 1 >= self.levels() {
            return Err(Error::LevelFull(level));
        }
        let h = self.head(level);
        if h == 0 {
            return Err(Error::Precondition(format!("level {level} holds no runs")));
        }
        let t = self.head(level + 1);
        if t >= self.runs_per_level() {
            return Err(Error::LevelFull(level + 1));
        }
        let target = self.run_at(level + 1, t);
        let before = self.arena.stats();
        let runs: Vec<Vec<Entry>> = (0..h)
            .map(|r| self.load_run(level, r))
            .collect::<Result<_>>()?;

        let (result, snapshot_entries) = if via_dram {
            let merged = match kind {
                MergeKind::TwoWay => runs
                    .iter()
                    .skip(1)
                    .fold(runs[0].clone(), |acc, r| merge_two(&acc, r)),
                MergeKind::KWay => merge_k(&runs),
            };
            let n = merged.len();
            (merged, n)
        } else {
            match kind {
                MergeKind::TwoWay => {
                    let mut acc = runs[0].clone();
                    for (j, r) in runs.iter().enumerate().skip(1).take(h.saturating_sub(2)) {
                        let step = merge_two(&acc, r);
                        let at = self.scratch[(j - 1) % 2];
                        store_run(&mut self.arena, at, &step)?;
                        acc = read_run(&mut self.arena, at)?;
                    }
                    let last = if h > 1 {
                        merge_two(&acc, &runs[h - 1])
                    } else {
                        acc
                    };
                    let n = last.len();
                    (last, n)
                }
                MergeKind::KWay => {
                    let worst: usize = runs.iter().map(Vec::len).sum();
                    (merge_k(&runs), worst)
                }
            }
        };

        let heads = [(level + 1, t as u64 + 1), (level, 0)];
        match fa {
            FaStrategy::Tx => {
                let a = &mut self.arena;
                a.tx_begin()?;
                let res = (|| {
                    a.tx_snapshot_at(target, RUN_HEADER + (snapshot_entries * ENTRY_BYTES) as u64)?;
                    store_run(a, target, &result)?;
                    for (l, v) in heads {
                        a.tx_snapshot_at(head_off(l), 8)?;
                        a.store_u64_at(head_off(l), v)?;
                    }
                    Ok(())
                })();
                finish_tx(a, res)?;
            }
            FaStrategy::Individual | FaStrategy::None => {
                store_run(&mut self.arena, target, &result)?;
                self.arena
                    .flush_at(target, RUN_HEADER + (result.len() * ENTRY_BYTES) as u64)?;
                self.arena.fence();
                self.publish_heads(fa, &heads)?;
            }
        }
        Ok(self.arena.stats().since(&before))
    }

    /// Instrumented read of one run.
    fn load_run(&mut self, level: usize, run: usize) -> Result<Vec<Entry>> {
        let at = self.run_at(level, run);
        let entries = read_run(&mut self.arena, at)?;
        if entries.len() > self.caps[level] {
            return Err(Error::Corruption(format!(
                "level {level} run {run} overflows"
            )));
        }
        Ok(entries)
    }

    /// One line per valid run (`level=.. head=.. run=.. count=.. min=.. max=..`),
    /// or `level=.. head=0` for an empty level.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for l in 0..self.levels() {
            let h = self.head(l);
            if h == 0 {
                let _ = writeln!(out, "level={l} head=0");
            }
            for r in 0..h {
                let run = self.run(l, r);
                let min = run.first().map_or("-".into(), |e| e.key.to_string());
                let max = run.last().map_or("-".into(), |e| e.key.to_string());
                let _ = writeln!(
                    out,
                    "level={l} head={h} run={r} count={} min={min} max={max}",
                    run.len()
                );
            }
        }
        out
    }
}

fn geometry(c: usize, k: usize, levels: usize) -> Result<(Vec<usize>, Vec<u64>)> {
    let mut caps = Vec::with_capacity(levels);
    let mut cap = c;
    for _ in 0..levels {
        caps.push(cap);
        cap = cap
            .checked_mul(k)
            .ok_or_else(|| Error::InvalidArgument("level capacity overflows".into()))?;
    }
    let bytes = caps
        .iter()
        .map(|&c| (RUN_HEADER + (c * ENTRY_BYTES) as u64).next_multiple_of(LINE_SIZE as u64))
        .collect();
    Ok((caps, bytes))
}

fn dir_bytes(levels: usize) -> u64 {
    (64 + 16 * levels as u64).next_multiple_of(LINE_SIZE as u64)
}

fn head_off(level: usize) -> u64 {
    64 + 8 * level as u64
}

fn base_off(levels: usize, level: usize) -> u64 {
    64 + 8 * (levels + level) as u64
}

fn finish_tx(a: &mut Arena, res: Result<()>) -> Result<()> {
    match res {
        Ok(()) => a.tx_commit(),
        Err(e) => {
            a.tx_abort()?;
            Err(e)
        }
    }
}

fn check_run(entries: &[Entry], cap: usize) -> Result<()> {
    if entries.len() > cap {
        return Err(Error::CapacityExceeded {
            needed: entries.len(),
            capacity: cap,
        });
    }
    if entries.windows(2).any(|w| w[0].key >= w[1].key) {
        return Err(Error::InvalidArgument(
            "run entries must be strictly sorted".into(),
        ));
    }
    Ok(())
}

fn encode(entries: &[Entry]) -> Vec<u8> {
    let mut out = Vec::with_capacity(entries.len() * ENTRY_BYTES);
    for e in entries {
        out.extend_from_slice(&e.key.to_le_bytes());
        out.extend_from_slice(e.value.as_bytes());
    }
    out
}

fn decode(bytes: &[u8]) -> Vec<Entry> {
    bytes
        .chunks_exact(ENTRY_BYTES)
        .map(|c| {
            Entry::new(
                u64::from_le_bytes(c[..KEY_BYTES].try_into().unwrap()),
                Value::from_bytes(&c[KEY_BYTES..]),
            )
        })
        .collect()
}

/// Count word plus entry array; no flush.
fn store_run(a: &mut Arena, at: u64, entries: &[Entry]) -> Result<()> {
    a.store_u64_at(at, entries.len() as u64)?;
    a.store_at(at + RUN_HEADER, &encode(entries))
}

fn read_run(a: &mut Arena, at: u64) -> Result<Vec<Entry>> {
    let n = a.load_u64_at(at) as usize;
    let mut buf = vec![0u8; n * ENTRY_BYTES];
    a.load_at(at + RUN_HEADER, &mut buf)?;
    Ok(decode(&buf))
}

/// Merges two sorted runs; on equal keys `newer` wins.
fn merge_two(older: &[Entry], newer: &[Entry]) -> Vec<Entry> {
    let mut out = Vec::with_capacity(older.len() + newer.len());
    let (mut i, mut j) = (0, 0);
    while i < older.len() && j < newer.len() {
        let (a, b) = (older[i], newer[j]);
        if a.key < b.key {
            out.push(a);
            i += 1;
        } else {
            out.push(b);
            j += 1;
            if a.key == b.key {
                i += 1;
            }
        }
    }
    out.extend_from_slice(&older[i..]);
    out.extend_from_slice(&newer[j..]);
    out
}

/// Heap merge of runs ordered oldest first; for equal keys the highest run
/// index wins.
fn merge_k(runs: &[Vec<Entry>]) -> Vec<Entry> {
    let mut heap = BinaryHeap::with_capacity(runs.len());
    for (r, run) in runs.iter().enumerate() {
        if let Some(e) = run.first() {
            heap.push(Reverse((e.key, Reverse(r), 0usize)));
        }
    }
    let mut out: Vec<Entry> = Vec::with_capacity(runs.iter().map(Vec::len).sum());
    while let Some(Reverse((key, Reverse(r), i))) = heap.pop() {
        if out.last().is_none_or(|e| e.key != key) {
            out.push(runs[r][i]);
        }
        if let Some(e) = runs[r].get(i + 1) {
            heap.push(Reverse((e.key, Reverse(r), i + 1)));
        }
    }
    out
}
