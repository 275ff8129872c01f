use std::collections::HashSet;
use std::fmt::Write as _;

use super::{kind_from_code, rebuild_fill, Placement, Tier, Tree, TreeConfig, ROOT_MAGIC};
use crate::error::{Error, Result};
use crate::nodes::{Layout, Node, SplitStrategy};
use crate::pstore::{Arena, ArenaConfig, CrashPlan, FaStrategy, PRef, LINE_SIZE};

impl Tree {
    /// Reopens a tree from its persistent arena alone. The leaf chain is
    /// validated and every inner level is rebuilt from the leaf maxima.
    pub fn recover(pmem: Arena) -> Result<Tree> {
        let word = |at: usize| pmem.peek_u64(at);
        if pmem.heap_end() < 64 || word(0) != ROOT_MAGIC {
            return Err(Error::Corruption("root record missing or damaged".into()));
        }
        let leftmost_off = word(8);
        let node_size = word(16);
        let inner_bytes = word(24) as usize;
        let rec = pmem.peek(32, 5);
        let cfg = TreeConfig {
            leaf_layout: kind_from_code(rec[0])?,
            inner_layout: kind_from_code(rec[1])?,
            node_size,
            placement: if rec[2] == 1 {
                Placement::Persistent
            } else {
                Placement::Volatile
            },
            fa: match rec[3] {
                0 => FaStrategy::Tx,
                1 => FaStrategy::Individual,
                2 => FaStrategy::None,
                c => return Err(Error::Corruption(format!("unknown fa code {c}"))),
            },
            split: if rec[4] == 1 {
                SplitStrategy::Copy
            } else {
                SplitStrategy::Move
            },
            arena_bytes: pmem.size(),
            inner_arena_bytes: inner_bytes,
        };
        let leaf = Layout::new(cfg.leaf_layout, node_size)
            .map_err(|e| Error::Corruption(e.to_string()))?;
        let inner = Layout::new(cfg.inner_layout, node_size)
            .map_err(|e| Error::Corruption(e.to_string()))?;
        let dram = Arena::new(ArenaConfig::volatile(inner_bytes))?;
        let mut tree = Tree {
            cfg,
            pmem,
            dram,
            leaf,
            inner,
            root: PRef::NULL,
            depth: 1,
            leftmost: PRef::new(leftmost_off, node_size),
            len: 0,
        };
        let uppers = tree.validate_chain()?;
        let fill = rebuild_fill(inner.kind, node_size)?;
        tree.build_inner(uppers, fill)?;
        tree.reset_stats();
        Ok(tree)
    }

    /// Walks the leaf chain and returns one `(upper bound, leaf)` pair per
    /// leaf. Fails on cycles, broken back links, out-of-bounds references,
    /// malformed nodes, overlapping key ranges and empty non-sole leaves.
    fn validate_chain(&mut self) -> Result<Vec<(u64, PRef)>> {
        let a = &self.pmem;
        let heap = a.heap_end() as u64;
        let mut seen = HashSet::new();
        let mut uppers = Vec::new();
        let mut prev = PRef::NULL;
        let mut prev_max: Option<u64> = None;
        let mut cur = self.leftmost;
        let mut total = 0;
        while !cur.is_null() {
            if cur.len != self.leaf.node_size
                || cur.offset < 64
                || !cur.offset.is_multiple_of(LINE_SIZE as u64)
                || cur.end() > heap
            {
                return Err(Error::Corruption(format!(
                    "leaf reference {cur:?} out of bounds"
                )));
            }
            if !seen.insert(cur.offset) {
                return Err(Error::Corruption(format!(
                    "leaf chain cycles back to {}",
                    cur.offset
                )));
            }
            let node = Node {
                pref: cur,
                layout: self.leaf,
            };
            node.validate(a)?;
            if node.prev(a) != prev {
                return Err(Error::Corruption(format!(
                    "leaf {} has a broken back link",
                    cur.offset
                )));
            }
            let entries = node.sorted_entries(a);
            let next = node.next(a);
            match (entries.first(), entries.last()) {
                (Some(first), Some(last)) => {
                    if prev_max.is_some_and(|m| m >= first.key) {
                        return Err(Error::Corruption(format!(
                            "leaf {} starts at {} below the previous leaf's maximum",
                            cur.offset, first.key
                        )));
                    }
                    if last.key == u64::MAX {
                        return Err(Error::Corruption(
                            "reserved key u64::MAX stored in a leaf".into(),
                        ));
                    }
                    prev_max = Some(last.key);
                    uppers.push((last.key, cur));
                }
                _ if prev.is_null() && next.is_null() => uppers.push((u64::MAX, cur)),
                _ => {
                    return Err(Error::Corruption(format!(
                        "empty leaf {} inside the chain",
                        cur.offset
                    )))
                }
            }
            total += entries.len();
            prev = cur;
            cur = next;
        }
        if uppers.is_empty() {
            return Err(Error::Corruption("leaf chain is empty".into()));
        }
        uppers.last_mut().unwrap().0 = u64::MAX;
        self.len = total;
        Ok(uppers)
    }

    /// Simulated power failure followed by recovery.
    pub fn crash(&self, plan: &CrashPlan) -> Result<Tree> {
        Tree::recover(self.pmem.crash(plan)?)
    }

    /// Depth-first listing, one node per line:
    /// `<level> <tier>:<offset> <layout> [<key>,...]` where the root is level
    /// 1, inner lines list their separators (`max` for the open bound) and
    /// leaf lines their keys in order.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        self.dump_node(&mut out, self.root, 1);
        out
    }

    fn dump_node(&self, out: &mut String, at: PRef, level: usize) {
        let leaf = level == self.depth;
        let (tier, layout) = if leaf {
            (Tier::Leaf, self.leaf)
        } else {
            (Tier::Inner, self.inner)
        };
        let a = self.arena_ref(tier);
        let tier_name = match (tier, self.cfg.placement) {
            (Tier::Inner, Placement::Volatile) => "dram",
            _ => "pmem",
        };
        let entries = Node { pref: at, layout }.sorted_entries(a);
        let keys: Vec<String> = entries
            .iter()
            .map(|e| {
                if e.key == u64::MAX {
                    "max".to_string()
                } else {
                    e.key.to_string()
                }
            })
            .collect();
        let _ = writeln!(
            out,
            "{level} {tier_name}:{} {} [{}]",
            at.offset,
            layout.kind,
            keys.join(",")
        );
        if !leaf {
            for e in entries {
                self.dump_node(out, e.value.as_child(), level + 1);
            }
        }
    }
}
