//! Persistent-memory data-structure primitives.
//!
//! * [`pstore`]: a simulated, instrumented persistent arena with flush/fence
//!   semantics, undo-log transactions and crash injection.
//! * [`nodes`]: five PMem-aware node layouts (sorted, unsorted, bitmap-only,
//!   indirection, hashing) with their search primitives and node-local
//!   micro-operations.
//! * [`tree`]: a B+-tree assembled from those nodes, with volatile or
//!   persistent inner levels and leaf-chain recovery.
//! * [`lsm`]: moving DRAM buffers into persistent runs and merging levels
//!   under three failure-atomicity strategies.
//! * [`oracle`]: independent reference models used by the tests.
//! * [`bench`]: the experiment harness behind the `bench` binary.

pub mod bench;
pub mod error;
pub mod lsm;
pub mod nodes;
pub mod oracle;
pub mod pstore;
pub mod tree;

pub use error::{Error, Result};
pub use pstore::{Arena, ArenaConfig, FaStrategy, PRef, WriteStats};
