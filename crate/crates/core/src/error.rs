use thiserror::Error;

use crate::pstore::PRef;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("arena exhausted: requested {requested} bytes, {remaining} remaining")]
    ArenaExhausted { requested: u64, remaining: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("range [{offset}, {offset}+{len}) outside of {bound:?}")]
    OutOfRange { offset: u64, len: u64, bound: PRef },

    #[error("store to [{offset}, {offset}+{len}) inside a transaction without a prior snapshot")]
    UnsnapshottedWrite { offset: u64, len: u64 },

    #[error("a transaction is already active")]
    NestedTransaction,

    #[error("no active transaction")]
    NoTransaction,

    #[error("undo log full: need {needed} bytes, {available} available")]
    LogFull { needed: u64, available: u64 },

    #[error("invalid crash point {point}, trace holds {events} events")]
    InvalidCrashPoint { point: usize, events: usize },

    #[error("unsupported node size {0}")]
    UnsupportedNodeSize(u64),

    #[error("node full (capacity {0})")]
    NodeFull(usize),

    #[error("key {0} not found")]
    KeyNotFound(u64),

    #[error("invalid layout for operation: {0}")]
    InvalidLayout(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("capacity exceeded: {needed} entries into capacity {capacity}")]
    CapacityExceeded { needed: usize, capacity: usize },

    #[error("corruption detected: {0}")]
    Corruption(String),

    #[error("level {0} is full")]
    LevelFull(usize),

    #[error("buffer full (capacity {0})")]
    BufferFull(usize),

    #[error("missing profile axis {axis} for layout {layout}")]
    MissingAxis { layout: String, axis: String },

    #[error("no rows to write")]
    EmptyRows,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
