//! Fills one node of every layout, compares the write cost of inserting at
//! the front and of each in-node search method, and prints a text dump.

use pmem_prims::nodes::{Layout, LayoutKind, Node, SearchMethod, Value};
use pmem_prims::{Arena, FaStrategy, Result};

fn main() -> Result<()> {
    let mut arena = Arena::with_size(1 << 20)?;
    for kind in LayoutKind::ALL {
        let layout = Layout::new(kind, 1024)?;
        let node = Node::create(&mut arena, layout, FaStrategy::Individual)?;
        for k in (2..layout.capacity as u64 + 1).rev() {
            node.insert(&mut arena, k * 10, Value::for_key(k * 10), FaStrategy::None)?;
        }
        let (_, st) =
            arena.measure(|a| node.insert(a, 10, Value::for_key(10), FaStrategy::Individual))?;
        print!(
            "{kind:<12} capacity {:>3}  insert-first modified {:>4} B",
            layout.capacity, st.modified_bytes
        );
        for m in SearchMethod::ALL.into_iter().filter(|m| m.supports(kind)) {
            arena.reset_read_window();
            let (_, st) = arena.measure(|a| node.search(a, 200, m))?;
            print!("  {m}: {} lines", st.lines_read);
        }
        println!();
        if kind == LayoutKind::Hashing {
            let raw = node.raw_bytes(&arena);
            println!("hashing node: {} raw bytes; dump head:", raw.len());
            for line in node.dump(&arena).lines().take(4) {
                println!("  {line}");
            }
        }
    }
    Ok(())
}
