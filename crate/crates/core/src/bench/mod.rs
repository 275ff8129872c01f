//! Desk-scale experiment harness: counter-based analogs of the node, tree
//! and LSM micro-benchmarks, CSV output, performance profiles and exhaustive
//! crash checks.
//!
//! Every cell (experiment × layout × size × parameters) builds a pool of
//! independent instances inside one arena, then samples a random instance per
//! iteration, restores it from a saved image with uninstrumented writes and
//! measures exactly one operation.

mod crashcheck;
mod experiments;
mod profile;
mod report;

#[cfg(test)]
mod tests;

use std::fmt;
use std::str::FromStr;

pub use crashcheck::{crashcheck, CrashCheckConfig, CrashReport, Scenario};
pub use profile::{build_profile, emit_profile, ProfileScore, AXES};
pub use report::{emit_csv, read_csv, write_csv, ResultRow};

use crate::error::{Error, Result};
use crate::lsm::{BufferKind, MergeKind};
use crate::nodes::{LayoutKind, SplitStrategy, NODE_SIZES};
use crate::pstore::FaStrategy;
use crate::tree::Placement;

/// Size of the cache analog the default pool is a multiple of.
pub const CACHE_ANALOG_BYTES: usize = 256 << 10;
/// Default working-set size: 16 cache analogs.
pub const DEFAULT_POOL_BYTES: usize = 16 * CACHE_ANALOG_BYTES;
/// Upper bound on pooled instances per cell.
pub const MAX_INSTANCES: usize = 1024;
/// Environment variable overriding the arena size of every pool.
pub const ARENA_ENV: &str = "BENCH_ARENA_BYTES";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Experiment {
    /// Search inside one node.
    E1,
    /// Root-to-leaf traversal without search.
    E2,
    /// Leaf-chain iteration.
    E3,
    /// Node insert.
    E4,
    /// Node split.
    E5,
    /// Move a DRAM buffer into a persistent run.
    E6,
    /// Merge a level's runs into the next level.
    E7,
    /// Node erase.
    E8,
    /// Balance two nodes.
    E9,
    /// Merge two nodes.
    E10,
}

impl Experiment {
    pub const ALL: [Experiment; 10] = [
        Experiment::E1,
        Experiment::E2,
        Experiment::E3,
        Experiment::E4,
        Experiment::E5,
        Experiment::E6,
        Experiment::E7,
        Experiment::E8,
        Experiment::E9,
        Experiment::E10,
    ];

    /// Failure-atomicity strategies swept when none are configured.
    pub fn default_fa(&self) -> Vec<FaStrategy> {
        match self {
            Experiment::E6 => vec![FaStrategy::Tx, FaStrategy::Individual, FaStrategy::None],
            Experiment::E7 => vec![FaStrategy::Tx, FaStrategy::None],
            _ => vec![FaStrategy::Individual],
        }
    }

    /// Whether rows of this experiment carry an `fa` parameter.
    pub fn uses_fa(&self) -> bool {
        !matches!(self, Experiment::E1 | Experiment::E2 | Experiment::E3)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_uppercase();
        let t = if t.starts_with('E') {
            t
        } else {
            format!("E{t}")
        };
        Experiment::ALL
            .into_iter()
            .find(|e| e.to_string() == t)
            .ok_or_else(|| Error::Parse(format!("unknown experiment `{s}` (expected E1..E10)")))
    }
}

/// Which entry of a node an operation targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Position {
    First,
    Middle,
    Last,
    /// Logical rank, clamped to the node's last entry.
    Rank(usize),
}

impl Position {
    pub fn resolve(&self, n: usize) -> usize {
        let last = n.saturating_sub(1);
        match self {
            Position::First => 0,
            Position::Middle => n / 2,
            Position::Last => last,
            Position::Rank(r) => (*r).min(last),
        }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Position::First => f.write_str("first"),
            Position::Middle => f.write_str("middle"),
            Position::Last => f.write_str("last"),
            Position::Rank(r) => write!(f, "{r}"),
        }
    }
}

impl FromStr for Position {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "first" => Ok(Position::First),
            "middle" => Ok(Position::Middle),
            "last" => Ok(Position::Last),
            n => n
                .parse()
                .map(Position::Rank)
                .map_err(|_| Error::Parse(format!("unknown position `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LsmParams {
    pub runs_per_level: usize,
    pub duplicates: Vec<bool>,
    pub via_dram: Vec<bool>,
    pub merges: Vec<MergeKind>,
    pub buffers: Vec<BufferKind>,
}

impl Default for LsmParams {
    fn default() -> Self {
        LsmParams {
            runs_per_level: 4,
            duplicates: vec![false, true],
            via_dram: vec![false, true],
            merges: MergeKind::ALL.to_vec(),
            buffers: BufferKind::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub id: Experiment,
    pub layouts: Vec<LayoutKind>,
    pub node_sizes: Vec<u64>,
    pub positions: Vec<Position>,
    pub iterations: usize,
    pub seed: u64,
    /// Empty means the experiment's default sweep.
    pub fa: Vec<FaStrategy>,
    pub placements: Vec<Placement>,
    /// Tree depths swept by E2.
    pub depths: Vec<usize>,
    pub splits: Vec<SplitStrategy>,
    pub pool_bytes: usize,
    /// Overrides the pool arena size (see [`ARENA_ENV`]).
    pub arena_bytes: Option<usize>,
    pub lsm: LsmParams,
}

impl ExperimentConfig {
    pub fn new(id: Experiment) -> Self {
        ExperimentConfig {
            id,
            layouts: LayoutKind::ALL.to_vec(),
            node_sizes: NODE_SIZES.to_vec(),
            positions: vec![Position::First, Position::Middle, Position::Last],
            iterations: 1000,
            seed: 42,
            fa: Vec::new(),
            placements: vec![Placement::Volatile, Placement::Persistent],
            depths: vec![2, 3, 4, 5],
            splits: vec![SplitStrategy::Move, SplitStrategy::Copy],
            pool_bytes: DEFAULT_POOL_BYTES,
            arena_bytes: None,
            lsm: LsmParams::default(),
        }
    }

    /// Applies [`ARENA_ENV`] when it holds a byte count.
    pub fn with_env_arena(mut self) -> Result<Self> {
        if let Ok(v) = std::env::var(ARENA_ENV) {
            let bytes = v
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("{ARENA_ENV}={v} is not a byte count")))?;
            self.arena_bytes = Some(bytes);
        }
        Ok(self)
    }

    pub fn fa_sweep(&self) -> Vec<FaStrategy> {
        if self.fa.is_empty() {
            self.id.default_fa()
        } else {
            self.fa.clone()
        }
    }

    /// Bytes available to one cell's instance pool.
    pub fn pool_arena_bytes(&self) -> usize {
        self.arena_bytes.unwrap_or(self.pool_bytes)
    }
}

/// Rows of one run plus the cells skipped as invalid combinations.
#[derive(Clone, Debug, Default)]
pub struct RunReport {
    pub rows: Vec<ResultRow>,
    pub skipped: Vec<String>,
}

impl RunReport {
    pub fn skipped_all(&self) -> bool {
        self.rows.is_empty() && !self.skipped.is_empty()
    }
}

/// Runs every cell of the configured experiment.
pub fn run(cfg: &ExperimentConfig) -> Result<RunReport> {
    if cfg.iterations == 0 {
        return Err(Error::InvalidArgument("iterations must be positive".into()));
    }
    let mut report = RunReport::default();
    experiments::run_cells(cfg, &mut report)?;
    for s in &report.skipped {
        log::info!("skipped {s}");
    }
    Ok(report)
}
