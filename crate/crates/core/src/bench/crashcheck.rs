use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::lsm::{BufferKind, DramBuffer, Lsm, LsmConfig, MergeKind};
use crate::nodes::{capacity, Entry, LayoutKind, Value};
use crate::oracle::CrashOracle;
use crate::pstore::{Arena, CrashMode, FaStrategy, PRef};
use crate::tree::{Tree, TreeConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// DRAM buffer to a level-0 run.
    Move,
    /// Level 0 into level 1, every merge kind with and without DRAM staging.
    Merge,
    /// Tree insert that splits a full leaf.
    Insert,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Move, Scenario::Merge, Scenario::Insert];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Move => "move",
            Scenario::Merge => "merge",
            Scenario::Insert => "insert",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| {
                Error::Parse(format!(
                    "unknown scenario `{s}` (expected move, merge or insert)"
                ))
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrashCheckConfig {
    pub scenario: Scenario,
    pub fa: Vec<FaStrategy>,
    /// Also crash every point with per-word random persistence.
    pub adversarial: bool,
    pub seed: u64,
    /// Adversarial images per crash point.
    pub seeds: u64,
}

impl CrashCheckConfig {
    pub fn new(scenario: Scenario) -> Self {
        CrashCheckConfig {
            scenario,
            fa: vec![FaStrategy::Tx, FaStrategy::Individual, FaStrategy::None],
            adversarial: false,
            seed: 0,
            seeds: 4,
        }
    }
}

/// Outcome of an exhaustive crash sweep. `cases` counts recovered images.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CrashReport {
    pub cases: usize,
    pub violations: usize,
    /// Words holding neither their old nor their new value.
    pub torn_words: usize,
    pub details: Vec<String>,
}

impl CrashReport {
    pub fn is_clean(&self) -> bool {
        self.violations == 0 && self.torn_words == 0
    }

    fn fail(&mut self, msg: String) {
        self.violations += 1;
        if self.details.len() < 32 {
            self.details.push(msg);
        }
    }
}

/// Crashes the scenario's operation at every event boundary and checks that
/// recovery lands in either the pre- or the post-operation state.
pub fn crashcheck(cfg: &CrashCheckConfig) -> Result<CrashReport> {
    if cfg.fa.is_empty() {
        return Err(Error::InvalidArgument(
            "no failure-atomicity strategy selected".into(),
        ));
    }
    let mut report = CrashReport::default();
    for &fa in &cfg.fa {
        match cfg.scenario {
            Scenario::Move => check_move(cfg, fa, &mut report)?,
            Scenario::Merge => {
                for kind in MergeKind::ALL {
                    for via_dram in [false, true] {
                        check_merge(cfg, fa, kind, via_dram, &mut report)?;
                    }
                }
            }
            Scenario::Insert => check_insert(cfg, fa, &mut report)?,
        }
    }
    Ok(report)
}

/// Walks the traced arena's events, handing each recovered image to `judge`.
fn sweep(
    cfg: &CrashCheckConfig,
    traced: &Arena,
    label: &str,
    report: &mut CrashReport,
    mut judge: impl FnMut(Arena) -> std::result::Result<(), String>,
) -> Result<()> {
    let trace = traced
        .trace()
        .ok_or_else(|| Error::InvalidArgument("arena is not tracing".into()))?;
    let mut oracle = CrashOracle::from_trace(trace);
    let mut replay = traced.replay()?;
    let mut modes = vec![CrashMode::DeterministicDrop];
    if cfg.adversarial {
        modes.extend((0..cfg.seeds).map(|s| CrashMode::Adversarial {
            seed: cfg.seed.wrapping_add(s),
        }));
    }
    for point in 0..=trace.events.len() {
        if point > 0 {
            replay.advance();
            oracle.step(&trace.events[point - 1]);
        }
        for &mode in &modes {
            let mode = match mode {
                // Vary the word pattern per point as well as per seed.
                CrashMode::Adversarial { seed } => CrashMode::Adversarial {
                    seed: seed ^ (point as u64) << 32,
                },
                m => m,
            };
            let image = replay.image(mode);
            let torn = oracle.torn_words(&image);
            report.cases += 1;
            if !torn.is_empty() {
                report.torn_words += torn.len();
                report.fail(format!(
                    "{label} point {point} {mode:?}: torn words at {torn:?}"
                ));
                continue;
            }
            let outcome = replay
                .crash(mode)
                .map_err(|e| e.to_string())
                .and_then(&mut judge);
            if let Err(why) = outcome {
                report.fail(format!("{label} point {point} {mode:?}: {why}"));
            }
        }
    }
    log::debug!("{label}: {} events checked", trace.events.len());
    Ok(())
}

/// Bytes of `regions` in an arena's working image.
fn snapshot(a: &Arena, regions: &[PRef]) -> Vec<Vec<u8>> {
    regions
        .iter()
        .map(|r| a.peek(r.offset as usize, r.len as usize).to_vec())
        .collect()
}

/// Under a transaction the touched regions must match one side byte for byte.
fn exact(
    fa: FaStrategy,
    a: &Arena,
    regions: &[PRef],
    pre: &[Vec<u8>],
    post: &[Vec<u8>],
) -> std::result::Result<(), String> {
    if fa != FaStrategy::Tx {
        return Ok(());
    }
    let got = snapshot(a, regions);
    if got == pre || got == post {
        Ok(())
    } else {
        Err("transactional regions are neither rolled back nor committed byte-exactly".into())
    }
}

fn filled_buffer(cap: usize, seed: u64) -> Result<DramBuffer> {
    let mut b = DramBuffer::new(BufferKind::UnsortedHash, cap);
    for i in 0..cap as u64 {
        let k = (i * 7919 + seed) % 10_007;
        b.insert(k, Value::new(seed as i32, i as i32, k as f64))?;
    }
    Ok(b)
}

fn check_move(cfg: &CrashCheckConfig, fa: FaStrategy, report: &mut CrashReport) -> Result<()> {
    let mut l = Lsm::new(LsmConfig::new(256))?;
    let c = l.run_capacity(0);
    l.move_node(&mut filled_buffer(c, 1)?, FaStrategy::None)?;
    let old = l.level_runs(0);
    let mut buf = filled_buffer(c, 2)?;
    let mut new = old.clone();
    new.push(buf.sorted());
    let regions = [l.directory(), l.run_ref(0, l.head(0))];
    let pre = snapshot(l.arena(), &regions);
    l.arena_mut().start_trace();
    l.move_node(&mut buf, fa)?;
    let post = snapshot(l.arena(), &regions);
    sweep(
        cfg,
        l.arena(),
        &format!("move fa={}", fa.name()),
        report,
        |a| {
            exact(fa, &a, &regions, &pre, &post)?;
            let runs = Lsm::recover_level(a)
                .map_err(|e| e.to_string())?
                .level_runs(0);
            if runs == old || runs == new {
                Ok(())
            } else {
                Err(format!("{} level-0 runs match neither state", runs.len()))
            }
        },
    )
}

fn check_merge(
    cfg: &CrashCheckConfig,
    fa: FaStrategy,
    kind: MergeKind,
    via_dram: bool,
    report: &mut CrashReport,
) -> Result<()> {
    let mut l = Lsm::new(LsmConfig::new(256).with_levels(2))?;
    let c = l.run_capacity(0) as u64;
    let runs: Vec<Vec<Entry>> = (0..l.runs_per_level() as u64)
        .map(|r| {
            (0..c)
                .map(|i| Entry::new(i * 2 + r % 2, Value::new(r as i32, i as i32, 0.0)))
                .collect()
        })
        .collect();
    l.load_level(0, &runs)?;
    let contents = l.contents();
    let regions = [l.directory(), l.run_ref(1, 0)];
    let pre = snapshot(l.arena(), &regions);
    l.arena_mut().start_trace();
    l.merge(0, kind, via_dram, fa)?;
    let post = snapshot(l.arena(), &regions);
    let merged = l.level_runs(1);
    let label = format!("merge {kind} via_dram={via_dram} fa={}", fa.name());
    sweep(cfg, l.arena(), &label, report, |a| {
        exact(fa, &a, &regions, &pre, &post)?;
        let r = Lsm::recover_level(a).map_err(|e| e.to_string())?;
        let (src, dst) = (r.level_runs(0), r.level_runs(1));
        let before = src == runs && dst.is_empty();
        // Without a transaction the target head may land before the source
        // resets; the newest-wins view is unchanged in that window.
        let after = dst == merged && (src.is_empty() || src == runs);
        if !(before || after) {
            return Err(format!(
                "{} source / {} target runs match neither state",
                src.len(),
                dst.len()
            ));
        }
        if r.contents() != contents {
            return Err("visible contents changed".into());
        }
        Ok(())
    })
}

fn check_insert(cfg: &CrashCheckConfig, fa: FaStrategy, report: &mut CrashReport) -> Result<()> {
    let kind = LayoutKind::Hashing;
    let cap = capacity(kind, 256)?;
    let entries: Vec<Entry> = (1..=(3 * cap) as u64)
        .map(|i| Entry::new(i * 10, Value::for_key(i * 10)))
        .collect();
    let tc = TreeConfig::new(kind, 256)
        .with_fa(fa)
        .with_arena_bytes(256 << 10)
        .with_inner_arena_bytes(64 << 10);
    let mut tree = Tree::bulk_load(tc, &entries, cap, 4)?;
    let old = tree.entries();
    // Lands in the full middle leaf and forces a split.
    let key = entries[cap + cap / 2].key + 5;
    tree.pmem_mut().start_trace();
    tree.insert(key, Value::for_key(key))?;
    let new = tree.entries();
    sweep(
        cfg,
        tree.pmem(),
        &format!("insert fa={}", fa.name()),
        report,
        |a| {
            let t = Tree::recover(a).map_err(|e| e.to_string())?;
            t.check().map_err(|e| e.to_string())?;
            let got = t.entries();
            if got == old || got == new {
                Ok(())
            } else {
                Err(format!("{} entries match neither state", got.len()))
            }
        },
    )
}
