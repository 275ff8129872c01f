//! A B+-tree assembled from the node primitives.
//!
//! Leaves always live in the persistent arena and form a doubly linked chain
//! whose head (the leftmost leaf) never changes. Inner nodes live either in a
//! volatile arena (selective persistence) or next to the leaves. Each inner
//! entry holds, for one child, the largest key that child may contain; the
//! rightmost entry of every inner level uses `u64::MAX`, so that key itself
//! cannot be stored.
//!
//! A 64-byte root record at persistent offset 0 names the leftmost leaf and
//! the tree's configuration. Recovery walks the leaf chain from there and
//! rebuilds every inner level.

mod recover;
mod scan;


use std::fmt;
use std::str::FromStr;

pub use scan::{IterMode, TraversalTrace};

use crate::error::{Error, Result};
use crate::nodes::{
    capacity, BalanceDirection, Entry, InsertOutcome, Layout, LayoutKind, Node, Slot,
    SplitStrategy, Value,
};
use crate::pstore::{Arena, ArenaConfig, FaStrategy, PRef, WriteStats, LINE_SIZE};

pub(crate) const ROOT_MAGIC: u64 = 0x3130_4545_5254_4d50;
const ROOT_RECORD: u64 = 64;

/// Where inner nodes live. Leaves are always persistent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Placement {
    Volatile,
    Persistent,
}

impl Placement {
    pub fn name(&self) -> &'static str {
        match self {
            Placement::Volatile => "volatile",
            Placement::Persistent => "persistent",
        }
    }
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Placement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "volatile" | "dram" => Ok(Placement::Volatile),
            "persistent" | "pmem" => Ok(Placement::Persistent),
            other => Err(Error::Parse(format!("unknown placement `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeConfig {
    pub leaf_layout: LayoutKind,
    pub inner_layout: LayoutKind,
    pub node_size: u64,
    pub placement: Placement,
    pub fa: FaStrategy,
    /// Leaf split strategy; `Copy` falls back to `Move` on layouts without a
    /// bitmap. Inner nodes always use `Move`.
    pub split: SplitStrategy,
    pub arena_bytes: usize,
    /// Size of the volatile arena holding inner nodes.
    pub inner_arena_bytes: usize,
}

impl TreeConfig {
    pub fn new(leaf_layout: LayoutKind, node_size: u64) -> Self {
        TreeConfig {
            leaf_layout,
            inner_layout: LayoutKind::Sorted,
            node_size,
            placement: Placement::Volatile,
            fa: FaStrategy::Individual,
            split: SplitStrategy::Move,
            arena_bytes: 4 << 20,
            inner_arena_bytes: 1 << 20,
        }
    }

    pub fn with_inner_layout(mut self, kind: LayoutKind) -> Self {
        self.inner_layout = kind;
        self
    }

    pub fn with_placement(mut self, p: Placement) -> Self {
        self.placement = p;
        self
    }

    pub fn with_fa(mut self, fa: FaStrategy) -> Self {
        self.fa = fa;
        self
    }

    pub fn with_split(mut self, s: SplitStrategy) -> Self {
        self.split = s;
        self
    }

    pub fn with_arena_bytes(mut self, bytes: usize) -> Self {
        self.arena_bytes = bytes;
        self
    }

    pub fn with_inner_arena_bytes(mut self, bytes: usize) -> Self {
        self.inner_arena_bytes = bytes;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Tier {
    Leaf,
    Inner,
}

#[derive(Debug)]
pub struct Tree {
    cfg: TreeConfig,
    pmem: Arena,
    dram: Arena,
    leaf: Layout,
    inner: Layout,
    root: PRef,
    depth: usize,
    leftmost: PRef,
    len: usize,
}

/// Inner node on a root-to-leaf path and the logical rank taken in it.
type Path = Vec<(Node, usize)>;

impl Tree {
    /// An empty tree: one empty leaf, depth 1.
    pub fn new(cfg: TreeConfig) -> Result<Tree> {
        let mut tree = Tree::empty_shell(cfg)?;
        let leaf = Node::create(&mut tree.pmem, tree.leaf, tree.cfg.fa)?;
        tree.leftmost = leaf.pref;
        tree.root = leaf.pref;
        tree.write_root_record()?;
        Ok(tree)
    }

    /// Arenas and layouts, plus the root record region at offset 0.
    fn empty_shell(cfg: TreeConfig) -> Result<Tree> {
        if !cfg.inner_layout.is_ordered() {
            return Err(Error::InvalidLayout(format!(
                "{} nodes cannot route key ranges; inner nodes must be sorted or indirection",
                cfg.inner_layout
            )));
        }
        let leaf = Layout::new(cfg.leaf_layout, cfg.node_size)?;
        let inner = Layout::new(cfg.inner_layout, cfg.node_size)?;
        let mut pmem = Arena::new(ArenaConfig::new(cfg.arena_bytes))?;
        let rec = pmem.allocate(ROOT_RECORD, LINE_SIZE as u64)?;
        debug_assert_eq!(rec.offset, 0);
        let dram = Arena::new(ArenaConfig::volatile(cfg.inner_arena_bytes))?;
        Ok(Tree {
            cfg,
            pmem,
            dram,
            leaf,
            inner,
            root: PRef::NULL,
            depth: 1,
            leftmost: PRef::NULL,
            len: 0,
        })
    }

    fn write_root_record(&mut self) -> Result<()> {
        let mut rec = [0u8; ROOT_RECORD as usize];
        rec[..8].copy_from_slice(&ROOT_MAGIC.to_le_bytes());
        rec[8..16].copy_from_slice(&self.leftmost.offset.to_le_bytes());
        rec[16..24].copy_from_slice(&self.cfg.node_size.to_le_bytes());
        rec[24..32].copy_from_slice(&(self.cfg.inner_arena_bytes as u64).to_le_bytes());
        rec[32] = kind_code(self.cfg.leaf_layout);
        rec[33] = kind_code(self.cfg.inner_layout);
        rec[34] = (self.cfg.placement == Placement::Persistent) as u8;
        rec[35] = match self.cfg.fa {
            FaStrategy::Tx => 0,
            FaStrategy::Individual => 1,
            FaStrategy::None => 2,
        };
        rec[36] = (self.cfg.split == SplitStrategy::Copy) as u8;
        self.pmem.persist_at(0, &rec)
    }

    /// Builds a tree from sorted, unique entries with fixtures written through
    /// uninstrumented stores. `leaf_fill` entries go into each leaf and up to
    /// `inner_fill` children into each inner node.
    pub fn bulk_load(
        cfg: TreeConfig,
        entries: &[Entry],
        leaf_fill: usize,
        inner_fill: usize,
    ) -> Result<Tree> {
        let mut tree = Tree::new(cfg)?;
        let (lcap, icap) = (tree.leaf.capacity, tree.inner.capacity);
        if leaf_fill == 0 || leaf_fill > lcap || inner_fill < 2 || inner_fill > icap {
            return Err(Error::InvalidArgument(format!(
                "fill {leaf_fill}/{inner_fill} outside 1..={lcap} / 2..={icap}"
            )));
        }
        if entries.windows(2).any(|w| w[0].key >= w[1].key)
            || entries.last().is_some_and(|e| e.key == u64::MAX)
        {
            return Err(Error::InvalidArgument(
                "bulk load needs sorted unique keys below u64::MAX".into(),
            ));
        }
        let chunks: Vec<&[Entry]> = if entries.is_empty() {
            vec![&[]]
        } else {
            entries.chunks(leaf_fill).collect()
        };
        let mut leaves = vec![Node::at(tree.leftmost, tree.leaf)?];
        for _ in 1..chunks.len() {
            let pref = tree.pmem.allocate(tree.leaf.node_size, LINE_SIZE as u64)?;
            leaves.push(Node::at(pref, tree.leaf)?);
        }
        for (i, (leaf, chunk)) in leaves.iter().zip(&chunks).enumerate() {
            let next = leaves.get(i + 1).map_or(PRef::NULL, |n| n.pref);
            let prev = if i == 0 {
                PRef::NULL
            } else {
                leaves[i - 1].pref
            };
            leaf.bulk_fill(&mut tree.pmem, chunk, next, prev)?;
        }
        let uppers: Vec<(u64, PRef)> = chunks
            .iter()
            .zip(&leaves)
            .enumerate()
            .map(|(i, (c, l))| {
                let upper = if i + 1 == chunks.len() {
                    u64::MAX
                } else {
                    c.last().unwrap().key
                };
                (upper, l.pref)
            })
            .collect();
        tree.len = entries.len();
        tree.build_inner(uppers, inner_fill)?;
        tree.reset_stats();
        Ok(tree)
    }

    /// Builds inner levels over `(upper bound, node)` pairs of one level.
    fn build_inner(&mut self, mut level: Vec<(u64, PRef)>, fill: usize) -> Result<()> {
        self.depth = 1;
        while level.len() > 1 {
            let groups = level.len().div_ceil(fill);
            let (base, extra) = (level.len() / groups, level.len() % groups);
            let mut next = Vec::with_capacity(groups);
            let mut it = level.into_iter();
            for g in 0..groups {
                let take = base + usize::from(g < extra);
                let members: Vec<Entry> = it
                    .by_ref()
                    .take(take)
                    .map(|(k, c)| Entry::new(k, Value::from_child(c)))
                    .collect();
                let size = self.inner.node_size;
                let pref = self.arena(Tier::Inner).allocate(size, LINE_SIZE as u64)?;
                let node = Node::at(pref, self.inner)?;
                node.bulk_fill(self.arena(Tier::Inner), &members, PRef::NULL, PRef::NULL)?;
                next.push((members.last().unwrap().key, pref));
            }
            level = next;
            self.depth += 1;
        }
        self.root = level[0].1;
        Ok(())
    }

    // ---- accessors ----

    pub fn config(&self) -> &TreeConfig {
        &self.cfg
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn root(&self) -> PRef {
        self.root
    }

    pub fn leftmost_leaf(&self) -> Node {
        Node {
            pref: self.leftmost,
            layout: self.leaf,
        }
    }

    pub fn leaf_layout(&self) -> Layout {
        self.leaf
    }

    pub fn inner_layout(&self) -> Layout {
        self.inner
    }

    pub fn pmem(&self) -> &Arena {
        &self.pmem
    }

    pub fn pmem_mut(&mut self) -> &mut Arena {
        &mut self.pmem
    }

    /// Volatile arena holding inner nodes (unused with persistent placement).
    pub fn dram(&self) -> &Arena {
        &self.dram
    }

    /// Counters of both arenas added together.
    pub fn stats(&self) -> WriteStats {
        let mut s = self.pmem.stats();
        s += self.dram.stats();
        s
    }

    pub fn reset_stats(&mut self) {
        self.pmem.reset_stats();
        self.dram.reset_stats();
    }

    /// Restarts distinct-line read counting in both arenas.
    pub fn reset_read_window(&mut self) {
        self.pmem.reset_read_window();
        self.dram.reset_read_window();
    }

    fn arena(&mut self, tier: Tier) -> &mut Arena {
        match (tier, self.cfg.placement) {
            (Tier::Inner, Placement::Volatile) => &mut self.dram,
            _ => &mut self.pmem,
        }
    }

    fn arena_ref(&self, tier: Tier) -> &Arena {
        match (tier, self.cfg.placement) {
            (Tier::Inner, Placement::Volatile) => &self.dram,
            _ => &self.pmem,
        }
    }

    fn layout(&self, tier: Tier) -> Layout {
        match tier {
            Tier::Leaf => self.leaf,
            Tier::Inner => self.inner,
        }
    }

    fn leaf_split(&self) -> SplitStrategy {
        if self.leaf.kind.has_bitmap() {
            self.cfg.split
        } else {
            SplitStrategy::Move
        }
    }

    // ---- descent ----

    /// Instrumented root-to-leaf descent by key.
    fn descend(&mut self, key: u64) -> Result<(Path, Node)> {
        let mut path = Vec::with_capacity(self.depth);
        let mut cur = self.root;
        for _ in 1..self.depth {
            let node = Node::at(cur, self.inner)?;
            let a = self.arena(Tier::Inner);
            let n = node.load_len(a);
            if n == 0 {
                return Err(Error::Corruption(format!(
                    "empty inner node at {}",
                    cur.offset
                )));
            }
            let rank = node.lower_bound_child(a, key)?.min(n - 1);
            cur = node.child_at(a, rank)?;
            path.push((node, rank));
        }
        Ok((path, Node::at(cur, self.leaf)?))
    }

    // ---- macro operations ----

    pub fn get(&mut self, key: u64) -> Result<Option<Value>> {
        let (_, leaf) = self.descend(key)?;
        let r = leaf.find(&mut self.pmem, key);
        Ok(r.physical_pos.map(|p| leaf.load_value(&mut self.pmem, p)))
    }

    /// Runs `f` inside one undo-log transaction when the tree uses `Tx`.
    fn atomically<T>(&mut self, f: impl FnOnce(&mut Tree) -> Result<T>) -> Result<T> {
        if self.cfg.fa != FaStrategy::Tx || self.pmem.in_tx() {
            return f(self);
        }
        self.pmem.tx_begin()?;
        match f(self) {
            Ok(v) => {
                self.pmem.tx_commit()?;
                Ok(v)
            }
            Err(e) => {
                self.pmem.tx_abort()?;
                Err(e)
            }
        }
    }

    pub fn insert(&mut self, key: u64, value: Value) -> Result<InsertOutcome> {
        if key == u64::MAX {
            return Err(Error::InvalidArgument(
                "u64::MAX is reserved as the rightmost separator".into(),
            ));
        }
        self.atomically(|t| t.insert_inner(key, value))
    }

    fn insert_inner(&mut self, key: u64, value: Value) -> Result<InsertOutcome> {
        let fa = self.cfg.fa;
        let (path, leaf) = self.descend(key)?;
        let slot = leaf.locate(&self.pmem, key);
        if matches!(slot, Slot::Found { .. }) || !leaf.is_full(&self.pmem) {
            let out = leaf.insert_at(&mut self.pmem, key, value, slot, fa)?;
            if out == InsertOutcome::Inserted {
                self.len += 1;
            }
            return Ok(out);
        }
        let strategy = self.leaf_split();
        let s = leaf.split(&mut self.pmem, strategy, fa)?;
        let target = if key <= s.separator { s.left } else { s.right };
        target.insert(&mut self.pmem, key, value, fa)?;
        self.len += 1;
        self.propagate_split(path, s.left.pref, s.separator, s.right.pref)?;
        Ok(InsertOutcome::Inserted)
    }

    /// After `left` split off `right` with upper bound `sep`, installs the
    /// new child in each ancestor, splitting full ancestors on the way up.
    fn propagate_split(
        &mut self,
        path: Path,
        mut left: PRef,
        mut sep: u64,
        mut right: PRef,
    ) -> Result<()> {
        let fa = self.cfg.fa;
        for (parent, rank) in path.into_iter().rev() {
            let a = self.arena(Tier::Inner);
            let pos = pos_of_rank(&parent, a, rank);
            parent.update_value_at(a, pos, Value::from_child(right), fa)?;
            if !parent.is_full(a) {
                parent.insert(a, sep, Value::from_child(left), fa)?;
                return Ok(());
            }
            let ps = parent.split(a, SplitStrategy::Move, fa)?;
            let target = if sep <= ps.separator {
                ps.left
            } else {
                ps.right
            };
            target.insert(a, sep, Value::from_child(left), fa)?;
            (left, sep, right) = (ps.left.pref, ps.separator, ps.right.pref);
        }
        let inner = self.inner;
        let a = self.arena(Tier::Inner);
        let root = Node::create(a, inner, fa)?;
        root.insert(a, sep, Value::from_child(left), fa)?;
        root.insert(a, u64::MAX, Value::from_child(right), fa)?;
        self.root = root.pref;
        self.depth += 1;
        Ok(())
    }

    pub fn erase(&mut self, key: u64) -> Result<()> {
        self.atomically(|t| t.erase_inner(key))
    }

    fn erase_inner(&mut self, key: u64) -> Result<()> {
        let fa = self.cfg.fa;
        let (path, leaf) = self.descend(key)?;
        match leaf.locate(&self.pmem, key) {
            Slot::Found { pos, rank } => leaf.erase_at(&mut self.pmem, pos, rank, fa)?,
            Slot::Vacant { .. } => return Err(Error::KeyNotFound(key)),
        }
        self.len -= 1;
        self.rebalance(path, leaf)
    }

    /// Restores occupancy bottom-up: balance with the right sibling, else the
    /// left sibling, else merge into the lower-key node.
    fn rebalance(&mut self, path: Path, mut child: Node) -> Result<()> {
        let fa = self.cfg.fa;
        let mut tier = Tier::Leaf;
        for (parent, rank) in path.into_iter().rev() {
            let min = self.layout(tier).capacity / 2;
            let clen = child.len(self.arena_ref(tier));
            if clen >= min {
                break;
            }
            let pa = self.arena_ref(Tier::Inner);
            let pn = parent.len(pa);
            let sibling = |r: usize| Node {
                pref: child_ref(&parent, pa, r),
                layout: child.layout,
            };
            let right = (rank + 1 < pn).then(|| sibling(rank + 1));
            let left = (rank > 0).then(|| sibling(rank - 1));
            let a = self.arena_ref(tier);
            if let Some(rs) = right.filter(|s| s.len(a) > min) {
                let n = (rs.len(a) - clen).div_ceil(2);
                rs.balance_into(self.arena(tier), &child, n, BalanceDirection::ToLower, fa)?;
                let upper = child.max_key(self.arena_ref(tier)).unwrap();
                self.rekey(&parent, rank, upper, child.pref)?;
                break;
            }
            if let Some(ls) = left.filter(|s| s.len(a) > min) {
                let n = (ls.len(a) - clen).div_ceil(2);
                ls.balance_into(self.arena(tier), &child, n, BalanceDirection::ToHigher, fa)?;
                let upper = ls.max_key(self.arena_ref(tier)).unwrap();
                self.rekey(&parent, rank - 1, upper, ls.pref)?;
                break;
            }
            let (lower, upper_node, lower_rank) = match (left, right) {
                (_, Some(rs)) => (child, rs, rank),
                (Some(ls), None) => (ls, child, rank - 1),
                (None, None) => break,
            };
            {
                let a = self.arena(tier);
                lower.merge_from(a, &upper_node, fa)?;
                if tier == Tier::Leaf {
                    lower.unlink_next(a, &upper_node, fa)?;
                }
                a.free(upper_node.pref);
            }
            let a = self.arena(Tier::Inner);
            let pos = pos_of_rank(&parent, a, lower_rank);
            parent.erase_at(a, pos, lower_rank, fa)?;
            let pos = pos_of_rank(&parent, a, lower_rank);
            parent.update_value_at(a, pos, Value::from_child(lower.pref), fa)?;
            child = parent;
            tier = Tier::Inner;
        }
        self.collapse_root()
    }

    /// Replaces the upper bound of the child at `rank`.
    fn rekey(&mut self, parent: &Node, rank: usize, upper: u64, child: PRef) -> Result<()> {
        let fa = self.cfg.fa;
        let a = self.arena(Tier::Inner);
        let pos = pos_of_rank(parent, a, rank);
        parent.erase_at(a, pos, rank, fa)?;
        parent.insert(a, upper, Value::from_child(child), fa)?;
        Ok(())
    }

    fn collapse_root(&mut self) -> Result<()> {
        while self.depth > 1 {
            let root = Node::at(self.root, self.inner)?;
            let a = self.arena(Tier::Inner);
            if root.len(a) != 1 {
                break;
            }
            let only = child_ref(&root, a, 0);
            a.free(root.pref);
            self.root = only;
            self.depth -= 1;
        }
        Ok(())
    }

    /// Uninstrumented snapshot of all entries in key order.
    pub fn entries(&self) -> Vec<Entry> {
        let mut out = Vec::with_capacity(self.len);
        let mut cur = self.leftmost;
        while !cur.is_null() {
            let n = Node {
                pref: cur,
                layout: self.leaf,
            };
            out.extend(n.sorted_entries(&self.pmem));
            cur = n.next(&self.pmem);
        }
        out
    }

    /// Leaves in chain order.
    pub fn leaves(&self) -> Vec<Node> {
        let mut out = Vec::new();
        let mut cur = self.leftmost;
        while !cur.is_null() {
            let n = Node {
                pref: cur,
                layout: self.leaf,
            };
            out.push(n);
            cur = n.next(&self.pmem);
        }
        out
    }

    /// Checks structural invariants: node layouts, routing bounds, uniform
    /// leaf depth, chain order matching the in-order leaf sequence, and the
    /// entry count.
    pub fn check(&self) -> Result<()> {
        let mut leaves = Vec::new();
        self.check_node(self.root, 1, 0, u64::MAX, &mut leaves)?;
        let chain: Vec<PRef> = self.leaves().iter().map(|n| n.pref).collect();
        if chain != leaves {
            return Err(Error::Corruption(
                "leaf chain differs from in-order leaf sequence".into(),
            ));
        }
        let total: usize = self.leaves().iter().map(|n| n.len(&self.pmem)).sum();
        if total != self.len {
            return Err(Error::Corruption(format!(
                "tree holds {total} entries, expected {}",
                self.len
            )));
        }
        Ok(())
    }

    fn check_node(
        &self,
        at: PRef,
        level: usize,
        lo: u64,
        hi: u64,
        leaves: &mut Vec<PRef>,
    ) -> Result<()> {
        let bad = |m: String| Err(Error::Corruption(m));
        if level == self.depth {
            let n = Node::at(at, self.leaf)?;
            n.validate(&self.pmem)?;
            if let (Some(min), Some(max)) = (n.min_key(&self.pmem), n.max_key(&self.pmem)) {
                if min < lo || max > hi {
                    return bad(format!(
                        "leaf {} keys [{min}, {max}] outside ({lo}, {hi}]",
                        at.offset
                    ));
                }
            }
            leaves.push(at);
            return Ok(());
        }
        let a = self.arena_ref(Tier::Inner);
        let n = Node::at(at, self.inner)?;
        n.validate(a)?;
        let entries = n.sorted_entries(a);
        if entries.is_empty() {
            return bad(format!("empty inner node {}", at.offset));
        }
        if entries.last().unwrap().key > hi {
            return bad(format!("inner node {} exceeds its bound", at.offset));
        }
        let mut low = lo;
        for e in entries {
            self.check_node(e.value.as_child(), level + 1, low, e.key, leaves)?;
            low = e.key.saturating_add(1);
        }
        Ok(())
    }

    /// Every non-root node holds at least half its capacity.
    pub fn check_occupancy(&self) -> Result<()> {
        let mut stack = vec![(self.root, 1usize)];
        while let Some((at, level)) = stack.pop() {
            let (tier, layout) = if level == self.depth {
                (Tier::Leaf, self.leaf)
            } else {
                (Tier::Inner, self.inner)
            };
            let n = Node { pref: at, layout };
            let a = self.arena_ref(tier);
            if at != self.root && n.len(a) < layout.capacity / 2 {
                return Err(Error::Corruption(format!(
                    "node {} at level {level} holds {} < {}",
                    at.offset,
                    n.len(a),
                    layout.capacity / 2
                )));
            }
            if tier == Tier::Inner {
                stack.extend(
                    n.entries(a)
                        .into_iter()
                        .map(|e| (e.value.as_child(), level + 1)),
                );
            }
        }
        Ok(())
    }
}

pub(crate) fn kind_code(k: LayoutKind) -> u8 {
    LayoutKind::ALL.iter().position(|x| *x == k).unwrap() as u8
}

pub(crate) fn kind_from_code(c: u8) -> Result<LayoutKind> {
    LayoutKind::ALL
        .get(c as usize)
        .copied()
        .ok_or_else(|| Error::Corruption(format!("unknown layout code {c}")))
}

/// Physical position of logical `rank` in an inner node (uninstrumented).
fn pos_of_rank(node: &Node, a: &Arena, rank: usize) -> usize {
    match node.layout.kind {
        LayoutKind::Indirection => node.slots(a)[rank] as usize,
        _ => rank,
    }
}

fn child_ref(node: &Node, a: &Arena, rank: usize) -> PRef {
    node.value_at(a, pos_of_rank(node, a, rank)).as_child()
}

/// Inner fan-out used when rebuilding: full nodes.
pub(crate) fn rebuild_fill(inner: LayoutKind, node_size: u64) -> Result<usize> {
    capacity(inner, node_size)
}
