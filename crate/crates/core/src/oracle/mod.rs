//! Reference models that the primary modules are checked against.
//!
//! Nothing in here calls into `nodes`, `tree` or `lsm`, and the crash-image
//! replay keeps its own line-state machine instead of reusing the arena's.

mod crash;
mod refmap;
mod sequence;
mod shadow;

pub use crash::{enumerate_crash_points, CrashOracle, EXHAUSTIVE_LIMIT};
pub use refmap::{Op, OpOutcome, RefMap};
pub use sequence::{parse_replay, write_replay, OpGenerator, OpWeights};
pub use shadow::ShadowDiff;

#[cfg(test)]
mod tests;
