use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::report::Samples;
use super::{Experiment, ExperimentConfig, RunReport, MAX_INSTANCES};
use crate::error::{Error, Result};
use crate::lsm::{run_capacity, DramBuffer, Lsm, LsmConfig};
use crate::nodes::{
    capacity, capacity_of, BalanceDirection, CapacityClass, Entry, Layout, Node, SearchMethod,
    Slot, SplitStrategy, Value,
};
use crate::pstore::{Arena, ArenaConfig, PRef, WriteStats, LINE_SIZE};
use crate::tree::{IterMode, Tree, TreeConfig};

pub(super) fn run_cells(cfg: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    match cfg.id {
        Experiment::E1 => search(cfg, report),
        Experiment::E2 => traverse(cfg, report),
        Experiment::E3 => iterate(cfg, report),
        Experiment::E4 => insert(cfg, report),
        Experiment::E5 => split(cfg, report),
        Experiment::E6 => move_node(cfg, report),
        Experiment::E7 => merge_level(cfg, report),
        Experiment::E8 => erase(cfg, report),
        Experiment::E9 => balance(cfg, report),
        Experiment::E10 => merge_nodes(cfg, report),
    }
}

/// Keys `10, 20, ...`: gaps leave room for inserts between neighbours.
fn keys(n: usize) -> Vec<Entry> {
    (1..=n as u64)
        .map(|i| Entry::new(i * 10, Value::for_key(i * 10)))
        .collect()
}

fn timed<T>(
    a: &mut Arena,
    f: impl FnOnce(&mut Arena) -> Result<T>,
) -> Result<(T, WriteStats, u64)> {
    a.reset_read_window();
    let before = a.stats();
    let t0 = Instant::now();
    let out = f(a)?;
    let ns = t0.elapsed().as_nanos() as u64;
    Ok((out, a.stats().since(&before), ns))
}

fn params(pairs: &[(&str, String)]) -> String {
    pairs
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}

/// Independent groups of nodes in one arena, each restorable from its saved
/// image.
struct NodePool {
    arena: Arena,
    groups: Vec<Vec<Node>>,
    images: Vec<Vec<Vec<u8>>>,
}

impl NodePool {
    fn build(
        cfg: &ExperimentConfig,
        layout: Layout,
        per_group: usize,
        mut fill: impl FnMut(&mut Arena, &[Node]) -> Result<()>,
    ) -> Result<NodePool> {
        let bytes = cfg.pool_arena_bytes().next_multiple_of(LINE_SIZE);
        let mut arena = Arena::new(ArenaConfig::new(bytes))?;
        let size = layout.node_size as usize;
        // Headroom for nodes allocated by the measured operation.
        let usable = arena.heap_end().saturating_sub(4 * size);
        let n = (usable / (per_group * size)).min(MAX_INSTANCES);
        if n == 0 {
            return Err(Error::InvalidArgument(format!(
                "a {bytes}-byte arena cannot hold one instance of {per_group} {size}-byte nodes"
            )));
        }
        let mut groups = Vec::with_capacity(n);
        let mut images = Vec::with_capacity(n);
        for _ in 0..n {
            let nodes = (0..per_group)
                .map(|_| Node::at(arena.allocate(layout.node_size, LINE_SIZE as u64)?, layout))
                .collect::<Result<Vec<_>>>()?;
            fill(&mut arena, &nodes)?;
            images.push(nodes.iter().map(|n| n.raw_bytes(&arena)).collect());
            groups.push(nodes);
        }
        arena.reset_stats();
        Ok(NodePool {
            arena,
            groups,
            images,
        })
    }

    fn pick(&mut self, rng: &mut impl Rng) -> Result<Vec<Node>> {
        let i = rng.gen_range(0..self.groups.len());
        for (node, img) in self.groups[i].iter().zip(&self.images[i]) {
            self.arena.poke(node.pref.offset, img)?;
        }
        Ok(self.groups[i].clone())
    }
}

fn rng(cfg: &ExperimentConfig) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(cfg.seed)
}

fn node_row(cfg: &ExperimentConfig, layout: &Layout, p: String, s: Samples) -> super::ResultRow {
    s.into_row(
        &cfg.id.to_string(),
        layout.kind.name(),
        layout.node_size,
        p,
        cfg.seed,
    )
}

// ---- E1 ----

fn search(cfg: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    for &kind in &cfg.layouts {
        for &size in &cfg.node_sizes {
            let layout = Layout::new(kind, size)?;
            let entries = keys(layout.capacity);
            let mut pool = NodePool::build(cfg, layout, 1, |a, n| {
                n[0].bulk_fill(a, &entries, PRef::NULL, PRef::NULL)
            })?;
            for method in SearchMethod::ALL {
                if !method.supports(kind) {
                    report
                        .skipped
                        .push(format!("E1 {kind}/{size}: {method} search does not apply"));
                    continue;
                }
                for pos in &cfg.positions {
                    let key = entries[pos.resolve(entries.len())].key;
                    let mut r = rng(cfg);
                    let mut s = Samples::default();
                    for _ in 0..cfg.iterations {
                        let i = r.gen_range(0..pool.groups.len());
                        let node = pool.groups[i][0];
                        let (res, st, ns) =
                            timed(&mut pool.arena, |a| node.search(a, key, method))?;
                        debug_assert!(res.found);
                        s.push(st, ns);
                    }
                    let p = params(&[("method", method.to_string()), ("pos", pos.to_string())]);
                    report.rows.push(node_row(cfg, &layout, p, s));
                }
            }
        }
    }
    Ok(())
}

// ---- E2 ----

// Tree rows report persistent-memory counters only: DRAM accesses are the
// saving a volatile placement buys.

fn traverse(cfg: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    for &kind in &cfg.layouts {
        if !kind.is_ordered() {
            report.skipped.push(format!(
                "E2 {kind}: unordered layouts cannot be inner nodes"
            ));
            continue;
        }
        for &size in &cfg.node_sizes {
            for &depth in &cfg.depths {
                if depth == 0 || depth > 24 {
                    report
                        .skipped
                        .push(format!("E2 {kind}/{size}: depth {depth} outside 1..=24"));
                    continue;
                }
                for &placement in &cfg.placements {
                    // Binary fan-out: 2^(depth-1) single-entry leaves.
                    let leaves = 1u64 << (depth - 1);
                    let entries: Vec<Entry> = (0..leaves)
                        .map(|k| Entry::new(k, Value::for_key(k)))
                        .collect();
                    let bytes =
                        ((2 * leaves + 8) * size * 2).next_multiple_of(LINE_SIZE as u64) as usize;
                    let bytes = cfg.arena_bytes.unwrap_or(bytes.max(64 << 10));
                    let tc = TreeConfig::new(kind, size)
                        .with_inner_layout(kind)
                        .with_placement(placement)
                        .with_arena_bytes(bytes)
                        .with_inner_arena_bytes(bytes);
                    let mut tree = Tree::bulk_load(tc, &entries, 1, 2)?;
                    let mut r = rng(cfg);
                    let mut s = Samples::default();
                    for _ in 0..cfg.iterations {
                        tree.reset_read_window();
                        let before = tree.pmem().stats();
                        let t0 = Instant::now();
                        let (_, trace) = tree.traverse_random(&mut r)?;
                        let ns = t0.elapsed().as_nanos() as u64;
                        debug_assert_eq!(trace.derefs(), depth);
                        s.push(tree.pmem().stats().since(&before), ns);
                    }
                    let p = params(&[
                        ("depth", depth.to_string()),
                        ("placement", placement.to_string()),
                    ]);
                    report
                        .rows
                        .push(s.into_row("E2", kind.name(), size, p, cfg.seed));
                }
            }
        }
    }
    Ok(())
}

// ---- E3 ----

fn iterate(cfg: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    for &kind in &cfg.layouts {
        for &size in &cfg.node_sizes {
            let cap = capacity(kind, size)?;
            // Same entry count for every layout: full nodes of the smallest class.
            let leaves = (cfg.pool_arena_bytes() / size as usize).clamp(16, MAX_INSTANCES);
            let n = leaves * capacity_of(CapacityClass::SearchStructure, size)?;
            let entries: Vec<Entry> = (0..n as u64)
                .map(|k| Entry::new(k, Value::for_key(k)))
                .collect();
            let bytes = ((n.div_ceil(cap) * 2 + 8) * size as usize * 2).next_multiple_of(LINE_SIZE);
            let bytes = cfg.arena_bytes.unwrap_or(bytes);
            let tc = TreeConfig::new(kind, size)
                .with_arena_bytes(bytes)
                .with_inner_arena_bytes(bytes);
            let inner_cap = capacity(tc.inner_layout, size)?;
            let mut tree = Tree::bulk_load(tc, &entries, cap, inner_cap)?;
            for mode in IterMode::ALL {
                if !mode.supports(kind) {
                    report
                        .skipped
                        .push(format!("E3 {kind}/{size}: {mode} iteration does not apply"));
                    continue;
                }
                let mut s = Samples::default();
                let mut sink = 0u64;
                for _ in 0..cfg.iterations {
                    tree.reset_read_window();
                    let before = tree.pmem().stats();
                    let t0 = Instant::now();
                    let seen = tree.iterate(mode, |k| sink ^= k)?;
                    let ns = t0.elapsed().as_nanos() as u64;
                    debug_assert_eq!(seen, n);
                    s.push(tree.pmem().stats().since(&before), ns);
                }
                std::hint::black_box(sink);
                let p = params(&[("mode", mode.to_string()), ("entries", n.to_string())]);
                report
                    .rows
                    .push(s.into_row("E3", kind.name(), size, p, cfg.seed));
            }
        }
    }
    Ok(())
}

// ---- E4 / E8 ----

fn insert(cfg: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    for &kind in &cfg.layouts {
        for &size in &cfg.node_sizes {
            let layout = Layout::new(kind, size)?;
            let all = keys(layout.capacity);
            for pos in &cfg.positions {
                let r = pos.resolve(all.len());
                let target = all[r];
                let rest: Vec<Entry> = all
                    .iter()
                    .copied()
                    .filter(|e| e.key != target.key)
                    .collect();
                let mut pool = NodePool::build(cfg, layout, 1, |a, n| {
                    n[0].bulk_fill(a, &rest, PRef::NULL, PRef::NULL)
                })?;
                for fa in cfg.fa_sweep() {
                    let mut g = rng(cfg);
                    let mut s = Samples::default();
                    for _ in 0..cfg.iterations {
                        let node = pool.pick(&mut g)?[0];
                        let slot = node.locate(&pool.arena, target.key);
                        let (_, st, ns) = timed(&mut pool.arena, |a| {
                            node.insert_at(a, target.key, target.value, slot, fa)
                        })?;
                        s.push(st, ns);
                    }
                    let p = params(&[("pos", pos.to_string()), ("fa", fa.name().into())]);
                    report.rows.push(node_row(cfg, &layout, p, s));
                }
            }
        }
    }
    Ok(())
}

fn erase(cfg: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    for &kind in &cfg.layouts {
        for &size in &cfg.node_sizes {
            let layout = Layout::new(kind, size)?;
            let all = keys(layout.capacity);
            let mut pool = NodePool::build(cfg, layout, 1, |a, n| {
                n[0].bulk_fill(a, &all, PRef::NULL, PRef::NULL)
            })?;
            for pos in &cfg.positions {
                let key = all[pos.resolve(all.len())].key;
                for fa in cfg.fa_sweep() {
                    let mut g = rng(cfg);
                    let mut s = Samples::default();
                    for _ in 0..cfg.iterations {
                        let node = pool.pick(&mut g)?[0];
                        let Slot::Found { pos, rank } = node.locate(&pool.arena, key) else {
                            return Err(Error::Corruption(format!("fixture lost key {key}")));
                        };
                        let (_, st, ns) =
                            timed(&mut pool.arena, |a| node.erase_at(a, pos, rank, fa))?;
                        s.push(st, ns);
                    }
                    let p = params(&[("pos", pos.to_string()), ("fa", fa.name().into())]);
                    report.rows.push(node_row(cfg, &layout, p, s));
                }
            }
        }
    }
    Ok(())
}

// ---- E5 ----

fn split(cfg: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    for &kind in &cfg.layouts {
        for &size in &cfg.node_sizes {
            let layout = Layout::new(kind, size)?;
            let all = keys(layout.capacity);
            let mut pool = NodePool::build(cfg, layout, 1, |a, n| {
                n[0].bulk_fill(a, &all, PRef::NULL, PRef::NULL)
            })?;
            for &strategy in &cfg.splits {
                if strategy == SplitStrategy::Copy && !kind.has_bitmap() {
                    report.skipped.push(format!(
                        "E5 {kind}/{size}: copy split needs a validity bitmap"
                    ));
                    continue;
                }
                for fa in cfg.fa_sweep() {
                    let mut g = rng(cfg);
                    let mut s = Samples::default();
                    for _ in 0..cfg.iterations {
                        let node = pool.pick(&mut g)?[0];
                        let (out, st, ns) =
                            timed(&mut pool.arena, |a| node.split(a, strategy, fa))?;
                        pool.arena.free(out.right.pref);
                        s.push(st, ns);
                    }
                    let p = params(&[("split", strategy.to_string()), ("fa", fa.name().into())]);
                    report.rows.push(node_row(cfg, &layout, p, s));
                }
            }
        }
    }
    Ok(())
}

// ---- E9 / E10 ----

fn balance(cfg: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    for &kind in &cfg.layouts {
        for &size in &cfg.node_sizes {
            let layout = Layout::new(kind, size)?;
            let m = layout.capacity;
            for dir in [BalanceDirection::ToLower, BalanceDirection::ToHigher] {
                // Group = [donor (full), receiver (half - 1)].
                let (donor, receiver) = match dir {
                    BalanceDirection::ToLower => {
                        let all = keys(m / 2 - 1 + m);
                        (all[m / 2 - 1..].to_vec(), all[..m / 2 - 1].to_vec())
                    }
                    BalanceDirection::ToHigher => {
                        let all = keys(m + m / 2 - 1);
                        (all[..m].to_vec(), all[m..].to_vec())
                    }
                };
                let mut pool = NodePool::build(cfg, layout, 2, |a, n| {
                    n[0].bulk_fill(a, &donor, PRef::NULL, PRef::NULL)?;
                    n[1].bulk_fill(a, &receiver, PRef::NULL, PRef::NULL)
                })?;
                let dir_name = if dir == BalanceDirection::ToLower {
                    "lower"
                } else {
                    "higher"
                };
                for fa in cfg.fa_sweep() {
                    let mut g = rng(cfg);
                    let mut s = Samples::default();
                    for _ in 0..cfg.iterations {
                        let n = pool.pick(&mut g)?;
                        let (_, st, ns) =
                            timed(&mut pool.arena, |a| n[0].balance(a, &n[1], dir, fa))?;
                        s.push(st, ns);
                    }
                    let p = params(&[("dir", dir_name.into()), ("fa", fa.name().into())]);
                    report.rows.push(node_row(cfg, &layout, p, s));
                }
            }
        }
    }
    Ok(())
}

fn merge_nodes(cfg: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    for &kind in &cfg.layouts {
        for &size in &cfg.node_sizes {
            let layout = Layout::new(kind, size)?;
            let m = layout.capacity;
            let all = keys(m / 2 + m / 2 - 1);
            let (left, right) = all.split_at(m / 2);
            let mut pool = NodePool::build(cfg, layout, 2, |a, n| {
                n[0].bulk_fill(a, left, n[1].pref, PRef::NULL)?;
                n[1].bulk_fill(a, right, PRef::NULL, n[0].pref)
            })?;
            for fa in cfg.fa_sweep() {
                let mut g = rng(cfg);
                let mut s = Samples::default();
                for _ in 0..cfg.iterations {
                    let n = pool.pick(&mut g)?;
                    let (_, st, ns) = timed(&mut pool.arena, |a| {
                        n[0].merge_from(a, &n[1], fa)?;
                        n[0].unlink_next(a, &n[1], fa)
                    })?;
                    s.push(st, ns);
                }
                report.rows.push(node_row(
                    cfg,
                    &layout,
                    params(&[("fa", fa.name().into())]),
                    s,
                ));
            }
        }
    }
    Ok(())
}

// ---- E6 / E7 ----

fn lsm_arena(cfg: &ExperimentConfig, l: LsmConfig) -> LsmConfig {
    match cfg.arena_bytes {
        Some(b) => l.with_arena_bytes(b),
        None => l,
    }
}

fn move_node(cfg: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    for &size in &cfg.node_sizes {
        let c = run_capacity(size);
        // Level 0 doubles as the instance pool: one run per iteration.
        let k = (cfg.pool_bytes / size as usize).clamp(2, MAX_INSTANCES);
        let lc = lsm_arena(
            cfg,
            LsmConfig::new(size).with_levels(1).with_runs_per_level(k),
        );
        for &buf_kind in &cfg.lsm.buffers {
            for fa in cfg.fa_sweep() {
                let mut lsm = Lsm::new(lc.clone())?;
                let mut g = rng(cfg);
                let mut s = Samples::default();
                let mut buf = DramBuffer::new(buf_kind, c);
                for _ in 0..cfg.iterations {
                    if lsm.head(0) == k {
                        lsm.load_level(0, &[])?;
                    }
                    while !buf.is_full() {
                        let key = g.gen::<u64>();
                        buf.insert(key, Value::for_key(key))?;
                    }
                    let a = lsm.arena_mut();
                    a.reset_read_window();
                    let t0 = Instant::now();
                    let st = lsm.move_node(&mut buf, fa)?;
                    s.push(st, t0.elapsed().as_nanos() as u64);
                }
                let p = params(&[("buffer", buf_kind.to_string()), ("fa", fa.name().into())]);
                report
                    .rows
                    .push(s.into_row("E6", buf_kind.name(), size, p, cfg.seed));
            }
        }
    }
    Ok(())
}

fn merge_level(cfg: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let k = cfg.lsm.runs_per_level;
    for &size in &cfg.node_sizes {
        let c = run_capacity(size) as u64;
        let lc = lsm_arena(
            cfg,
            LsmConfig::new(size).with_levels(2).with_runs_per_level(k),
        );
        for &dup in &cfg.lsm.duplicates {
            let runs: Vec<Vec<Entry>> = (0..k as u64)
                .map(|r| {
                    (0..c)
                        .map(|i| {
                            let key = if dup { i } else { i * k as u64 + r };
                            Entry::new(key, Value::new(r as i32, i as i32, key as f64))
                        })
                        .collect()
                })
                .collect();
            for &kind in &cfg.lsm.merges {
                for &via_dram in &cfg.lsm.via_dram {
                    for fa in cfg.fa_sweep() {
                        let mut lsm = Lsm::new(lc.clone())?;
                        let mut s = Samples::default();
                        for _ in 0..cfg.iterations {
                            lsm.load_level(0, &runs)?;
                            lsm.load_level(1, &[])?;
                            lsm.arena_mut().reset_read_window();
                            let t0 = Instant::now();
                            let st = lsm.merge(0, kind, via_dram, fa)?;
                            s.push(st, t0.elapsed().as_nanos() as u64);
                        }
                        let p = params(&[
                            ("merge", kind.to_string()),
                            ("via_dram", via_dram.to_string()),
                            ("dup", if dup { "100" } else { "0" }.into()),
                            ("fa", fa.name().into()),
                        ]);
                        report.rows.push(s.into_row("E7", "run", size, p, cfg.seed));
                    }
                }
            }
        }
    }
    Ok(())
}
