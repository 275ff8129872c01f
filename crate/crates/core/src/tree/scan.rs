use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::{Placement, Tier, Tree};
use crate::error::{Error, Result};
use crate::nodes::{set_bits, LayoutKind, Node};
use crate::pstore::PRef;

/// Nodes dereferenced by one root-to-leaf descent, split by tier.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TraversalTrace {
    pub derefs_volatile: usize,
    pub derefs_persistent: usize,
    pub visited: Vec<PRef>,
}

impl TraversalTrace {
    pub fn derefs(&self) -> usize {
        self.derefs_volatile + self.derefs_persistent
    }
}

/// How a leaf-chain scan finds the valid entries of each leaf.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IterMode {
    /// Positions `[0, count)`; Sorted and Unsorted leaves.
    Plain,
    /// Set bits of the validity bitmap.
    ViaBitmap,
    /// Slot array in rank order; Indirection leaves. Emits keys sorted.
    ViaSlots,
}

impl IterMode {
    pub const ALL: [IterMode; 3] = [IterMode::Plain, IterMode::ViaBitmap, IterMode::ViaSlots];

    pub fn supports(&self, kind: LayoutKind) -> bool {
        match self {
            IterMode::Plain => matches!(kind, LayoutKind::Sorted | LayoutKind::Unsorted),
            IterMode::ViaBitmap => kind.has_bitmap(),
            IterMode::ViaSlots => kind == LayoutKind::Indirection,
        }
    }

    /// The natural scan of a layout.
    pub fn default_for(kind: LayoutKind) -> IterMode {
        match kind {
            LayoutKind::Sorted | LayoutKind::Unsorted => IterMode::Plain,
            LayoutKind::Indirection => IterMode::ViaSlots,
            _ => IterMode::ViaBitmap,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            IterMode::Plain => "plain",
            IterMode::ViaBitmap => "bitmap",
            IterMode::ViaSlots => "slots",
        }
    }
}

impl fmt::Display for IterMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IterMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        IterMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown iteration mode `{s}`")))
    }
}

impl Tree {
    fn trace_step(&self, trace: &mut TraversalTrace, at: PRef, tier: Tier) {
        let volatile = tier == Tier::Inner && self.cfg.placement == Placement::Volatile;
        if volatile {
            trace.derefs_volatile += 1;
        } else {
            trace.derefs_persistent += 1;
        }
        trace.visited.push(at);
    }

    /// Keyed descent with instrumented routing; returns the leaf whose range
    /// covers `key`.
    pub fn traverse(&mut self, key: u64) -> Result<(Node, TraversalTrace)> {
        let (path, leaf) = self.descend(key)?;
        let mut trace = TraversalTrace::default();
        for (n, _) in &path {
            self.trace_step(&mut trace, n.pref, Tier::Inner);
        }
        self.trace_step(&mut trace, leaf.pref, Tier::Leaf);
        self.pmem.load_u64_at(leaf.pref.offset);
        Ok((leaf, trace))
    }

    /// Descent taking a random child per level, without in-node search. Only
    /// the entry count and the chosen child reference are loaded.
    pub fn traverse_random(&mut self, rng: &mut impl Rng) -> Result<(Node, TraversalTrace)> {
        let mut trace = TraversalTrace::default();
        let mut cur = self.root;
        for _ in 1..self.depth {
            let node = Node::at(cur, self.inner)?;
            self.trace_step(&mut trace, cur, Tier::Inner);
            let a = self.arena(Tier::Inner);
            let n = node.load_len(a);
            if n == 0 {
                return Err(Error::Corruption(format!(
                    "empty inner node at {}",
                    cur.offset
                )));
            }
            cur = node.child_at(a, rng.gen_range(0..n))?;
        }
        let leaf = Node::at(cur, self.leaf)?;
        self.trace_step(&mut trace, cur, Tier::Leaf);
        self.pmem.load_u64_at(cur.offset);
        Ok((leaf, trace))
    }

    /// Walks the leaf chain through next links, handing every valid key to
    /// `visit`. Only the words the mode needs are loaded. Returns the number
    /// of keys visited.
    pub fn iterate(&mut self, mode: IterMode, mut visit: impl FnMut(u64)) -> Result<usize> {
        let kind = self.leaf.kind;
        if !mode.supports(kind) {
            return Err(Error::InvalidLayout(format!(
                "{mode} iteration over {kind} leaves"
            )));
        }
        let layout = self.leaf;
        let a = &mut self.pmem;
        let mut cur = self.leftmost;
        let mut seen = 0;
        while !cur.is_null() {
            let node = Node { pref: cur, layout };
            match mode {
                IterMode::Plain => {
                    for p in 0..node.load_count(a) {
                        visit(node.load_key(a, p));
                        seen += 1;
                    }
                }
                IterMode::ViaBitmap => {
                    let bm = node.load_bitmap(a);
                    for p in set_bits(&bm) {
                        visit(node.load_key(a, p));
                        seen += 1;
                    }
                }
                IterMode::ViaSlots => {
                    for r in 0..node.load_len(a) {
                        let p = node.load_slot(a, r);
                        visit(node.load_key(a, p));
                        seen += 1;
                    }
                }
            }
            let mut link = [0u8; 16];
            a.load_at(node.abs(layout.next_off), &mut link)?;
            cur = PRef::from_bytes(&link);
        }
        Ok(seen)
    }
}
