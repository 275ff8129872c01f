//! Splits identical full nodes with the move and copy strategies and
//! compares their write cost and results.

use pmem_prims::nodes::{Entry, Layout, LayoutKind, Node, SplitStrategy, Value};
use pmem_prims::{Arena, FaStrategy, PRef, Result};

fn main() -> Result<()> {
    let layout = Layout::new(LayoutKind::Hashing, 2048)?;
    let entries: Vec<Entry> = (0..layout.capacity as u64)
        .map(|k| Entry::new(k * 3, Value::for_key(k * 3)))
        .collect();
    for strategy in [SplitStrategy::Move, SplitStrategy::Copy] {
        let mut arena = Arena::with_size(1 << 20)?;
        let node = Node::allocate(&mut arena, layout)?;
        node.bulk_fill(&mut arena, &entries, PRef::NULL, PRef::NULL)?;
        arena.reset_stats();
        let (out, st) = arena.measure(|a| node.split(a, strategy, FaStrategy::Individual))?;
        println!(
            "{strategy}: separator {} left {} right {}  modified {} B, flushed {} lines, fences {}",
            out.separator,
            out.left.len(&arena),
            out.right.len(&arena),
            st.modified_bytes,
            st.flushed_lines,
            st.fences
        );
    }
    Ok(())
}
