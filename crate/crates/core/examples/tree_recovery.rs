//! Builds a B+-tree with volatile inner nodes, crashes it in the middle of a
//! transactional insert and rebuilds the inner levels from the leaf chain.

use pmem_prims::nodes::{LayoutKind, Value};
use pmem_prims::pstore::CrashPlan;
use pmem_prims::tree::{Placement, Tree, TreeConfig};
use pmem_prims::{FaStrategy, Result};

fn main() -> Result<()> {
    let cfg = TreeConfig::new(LayoutKind::Indirection, 256)
        .with_placement(Placement::Volatile)
        .with_fa(FaStrategy::Tx);
    let mut tree = Tree::new(cfg)?;
    for k in 0..60u64 {
        tree.insert(k * 7 % 61, Value::for_key(k))?;
    }
    println!(
        "depth {} with {} entries:\n{}",
        tree.depth(),
        tree.len(),
        tree.dump()
    );

    tree.pmem_mut().start_trace();
    tree.insert(1000, Value::for_key(1000))?;
    let events = tree.pmem().recorded_events();
    for point in [0, events / 2, events] {
        let t = tree.crash(&CrashPlan::deterministic(point))?;
        t.check()?;
        println!(
            "crash at {point}/{events}: {} entries, key 1000 present: {}",
            t.len(),
            t.entries().iter().any(|e| e.key == 1000)
        );
    }
    Ok(())
}
