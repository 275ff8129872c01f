//! Moves DRAM buffers into level-0 runs and merges level 0 into level 1 under
//! each failure-atomicity strategy, printing the write cost and level dump.

use pmem_prims::lsm::{BufferKind, DramBuffer, Lsm, LsmConfig, MergeKind};
use pmem_prims::nodes::Value;
use pmem_prims::{FaStrategy, Result};

fn main() -> Result<()> {
    for fa in [FaStrategy::Tx, FaStrategy::Individual, FaStrategy::None] {
        let mut lsm = Lsm::new(LsmConfig::new(512).with_levels(2))?;
        let cap = lsm.run_capacity(0);
        let mut moved = 0;
        for r in 0..lsm.runs_per_level() as u64 {
            let mut buf = DramBuffer::new(BufferKind::UnsortedHash, cap);
            for i in 0..cap as u64 {
                buf.insert(i * 3 + r, Value::new(r as i32, i as i32, 0.0))?;
            }
            moved += lsm.move_node(&mut buf, fa)?.log_bytes;
        }
        let st = lsm.merge(0, MergeKind::TwoWay, false, fa)?;
        println!(
            "{:<10} move log {:>5} B  merge modified {:>5} B log {:>5} B",
            fa.name(),
            moved,
            st.modified_bytes,
            st.log_bytes
        );
        if fa == FaStrategy::None {
            print!("{}", lsm.dump());
        }
    }
    Ok(())
}
