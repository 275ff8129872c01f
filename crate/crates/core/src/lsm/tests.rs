use proptest::prelude::*;

use super::*;
use crate::oracle::enumerate_crash_points;

fn run_of(keys: impl IntoIterator<Item = u64>, tag: i32) -> Vec<Entry> {
    keys.into_iter()
        .map(|k| Entry::new(k, Value::new(tag, k as i32, 0.0)))
        .collect()
}

fn full_buffer(kind: BufferKind, cap: usize, start: u64) -> DramBuffer {
    let mut b = DramBuffer::new(kind, cap);
    // Descending inserts exercise the shifting path of the sorted buffer.
    for k in (start..start + cap as u64).rev() {
        b.insert(k * 3, Value::for_key(k)).unwrap();
    }
    b
}

const FAS: [FaStrategy; 3] = [FaStrategy::Tx, FaStrategy::Individual, FaStrategy::None];

#[test]
fn buffer_semantics() {
    for kind in BufferKind::ALL {
        let mut b = DramBuffer::new(kind, 3);
        for k in [3, 1, 2] {
            b.insert(k, Value::for_key(k)).unwrap();
        }
        assert_eq!(
            b.sorted().iter().map(|e| e.key).collect::<Vec<_>>(),
            vec![1, 2, 3]
        );
        b.insert(2, Value::new(9, 9, 9.0)).unwrap();
        assert_eq!(b.len(), 3);
        assert_eq!(b.get(2), Some(Value::new(9, 9, 9.0)));
        assert!(matches!(
            b.insert(4, Value::default()),
            Err(Error::BufferFull(3))
        ));
    }
    let mut h = DramBuffer::new(BufferKind::UnsortedHash, 10);
    for k in (0..10).rev() {
        h.insert(k, Value::default()).unwrap();
    }
    assert_eq!(h.shifted(), 0);
    let mut s = DramBuffer::new(BufferKind::SortedVector, 10);
    for k in (0..10).rev() {
        s.insert(k, Value::default()).unwrap();
    }
    assert_eq!(s.shifted(), 45);
}

#[test]
fn fresh_hierarchy_is_empty_and_recoverable() {
    let l = Lsm::new(LsmConfig::new(512)).unwrap();
    let r = l.crash(&CrashPlan::deterministic(0)).unwrap();
    for lvl in 0..3 {
        assert_eq!(r.head(lvl), 0);
    }
    assert!(r.contents().is_empty());
    assert_eq!(r.run_capacity(0), 18);
    assert_eq!(r.run_capacity(2), 18 * 16);
    assert_eq!(r.dump(), "level=0 head=0\nlevel=1 head=0\nlevel=2 head=0\n");
}

#[test]
fn move_is_strategy_independent() {
    let mut images = Vec::new();
    for kind in BufferKind::ALL {
        for fa in FAS {
            let mut l = Lsm::new(LsmConfig::new(1024)).unwrap();
            let cap = l.run_capacity(0);
            let mut b = full_buffer(kind, cap, 10);
            let expect = b.sorted();
            l.move_node(&mut b, fa).unwrap();
            assert!(b.is_empty());
            assert_eq!(l.head(0), 1);
            assert_eq!(l.run(0, 0), expect);
            images.push(l.level_runs(0));
        }
    }
    assert!(images.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn move_accounting_orders_strategies() {
    let mut log = Vec::new();
    let mut written = Vec::new();
    for fa in FAS {
        let mut l = Lsm::new(LsmConfig::new(4096)).unwrap();
        let mut b = full_buffer(BufferKind::SortedVector, l.run_capacity(0), 0);
        let s = l.move_node(&mut b, fa).unwrap();
        assert!(s.is_consistent());
        log.push(s.log_bytes);
        written.push(s.written_bytes);
        if fa == FaStrategy::Tx {
            assert!(s.log_bytes >= l.run_region_bytes(0));
        }
    }
    assert!(log[0] > log[1] && log[1] > log[2] && log[2] == 0, "{log:?}");
    assert!(log[1] <= 64 + crate::pstore::DEFAULT_LOG_OVERHEAD);
    assert!(
        written[0] >= written[1] && written[1] >= written[2],
        "{written:?}"
    );
}

#[test]
fn full_level_rejects_move_and_empty_buffer_is_rejected() {
    let mut l = Lsm::new(LsmConfig::new(256)).unwrap();
    let cap = l.run_capacity(0);
    assert!(matches!(
        l.move_node(
            &mut DramBuffer::new(BufferKind::SortedVector, cap),
            FaStrategy::None
        ),
        Err(Error::Precondition(_))
    ));
    for i in 0..4 {
        let mut b = full_buffer(BufferKind::UnsortedHash, cap, i * 100);
        l.move_node(&mut b, FaStrategy::None).unwrap();
    }
    let mut b = full_buffer(BufferKind::UnsortedHash, cap, 1000);
    assert!(matches!(
        l.move_node(&mut b, FaStrategy::None),
        Err(Error::LevelFull(0))
    ));
    assert_eq!(b.len(), cap);
}

fn merge_fixture(node: u64, duplicates: bool) -> (Lsm, BTreeMap<u64, Value>) {
    let mut l = Lsm::new(LsmConfig::new(node)).unwrap();
    let c = l.run_capacity(0) as u64;
    let runs: Vec<Vec<Entry>> = (0..4)
        .map(|r| {
            if duplicates {
                run_of(0..c, r)
            } else {
                run_of((0..c).map(|k| k * 4 + r as u64), r)
            }
        })
        .collect();
    l.load_level(0, &runs).unwrap();
    l.arena_mut().reset_stats();
    let expect = l.contents();
    (l, expect)
}

#[test]
fn merges_agree_across_all_strategies() {
    for dup in [false, true] {
        let mut results = Vec::new();
        for kind in MergeKind::ALL {
            for via_dram in [false, true] {
                for fa in FAS {
                    let (mut l, expect) = merge_fixture(512, dup);
                    l.merge(0, kind, via_dram, fa).unwrap();
                    assert_eq!((l.head(0), l.head(1)), (0, 1));
                    let run = l.run(1, 0);
                    assert!(run.windows(2).all(|w| w[0].key < w[1].key));
                    assert_eq!(l.contents(), expect);
                    if dup {
                        assert_eq!(run.len(), l.run_capacity(0));
                        assert!(run.iter().all(|e| e.value.a() == 3), "newest run wins");
                    }
                    results.push(run);
                }
            }
        }
        assert!(results.windows(2).all(|w| w[0] == w[1]));
    }
}

#[test]
fn merge_log_accounting() {
    let log = |dup: bool, kind: MergeKind, via_dram: bool| {
        let (mut l, _) = merge_fixture(1024, dup);
        l.merge(0, kind, via_dram, FaStrategy::Tx)
            .unwrap()
            .log_bytes
    };
    assert!(log(true, MergeKind::TwoWay, false) < log(true, MergeKind::KWay, false));
    assert_eq!(
        log(false, MergeKind::TwoWay, true),
        log(false, MergeKind::KWay, true)
    );
    assert_eq!(
        log(false, MergeKind::TwoWay, false),
        log(false, MergeKind::KWay, false)
    );

    let modified = |kind: MergeKind| {
        let (mut l, _) = merge_fixture(1024, true);
        l.merge(0, kind, false, FaStrategy::None)
            .unwrap()
            .modified_bytes
    };
    assert!(modified(MergeKind::KWay) < modified(MergeKind::TwoWay));

    for fa in [FaStrategy::Individual, FaStrategy::None] {
        let (mut l, _) = merge_fixture(1024, false);
        let s = l.merge(0, MergeKind::KWay, false, fa).unwrap();
        assert!(s.log_bytes <= 2 * (8 + crate::pstore::DEFAULT_LOG_OVERHEAD));
    }
}

#[test]
fn merge_preconditions() {
    let mut l = Lsm::new(LsmConfig::new(256).with_levels(2)).unwrap();
    assert!(matches!(
        l.merge(0, MergeKind::KWay, false, FaStrategy::None),
        Err(Error::Precondition(_))
    ));
    assert!(matches!(
        l.merge(1, MergeKind::KWay, false, FaStrategy::None),
        Err(Error::LevelFull(1))
    ));
    let c = l.run_capacity(0) as u64;
    l.load_level(0, &[run_of(0..c, 0)]).unwrap();
    l.load_level(1, &vec![run_of(0..1, 0); 4]).unwrap();
    assert!(matches!(
        l.merge(0, MergeKind::TwoWay, true, FaStrategy::Tx),
        Err(Error::LevelFull(1))
    ));
    assert!(l.load_level(0, &[run_of([2, 1], 0)]).is_err());
}

#[test]
fn cascading_merges_keep_newest_values() {
    let mut l = Lsm::new(LsmConfig::new(256)).unwrap();
    let c = l.run_capacity(0);
    let mut model = BTreeMap::new();
    for round in 0..16u64 {
        let mut b = DramBuffer::new(BufferKind::UnsortedHash, c);
        for i in 0..c as u64 {
            let k = (round * 5 + i * 7) % 40;
            let v = Value::new(round as i32, i as i32, 0.0);
            if b.insert(k, v).is_ok() {
                model.insert(k, v);
            }
        }
        if l.head(0) == 4 {
            if l.head(1) == 4 {
                l.merge(1, MergeKind::KWay, true, FaStrategy::Individual)
                    .unwrap();
            }
            l.merge(0, MergeKind::TwoWay, false, FaStrategy::None)
                .unwrap();
        }
        l.move_node(&mut b, FaStrategy::Tx).unwrap();
        assert_eq!(l.contents(), model);
    }
    for (k, v) in &model {
        assert_eq!(l.get(*k), Some(*v));
    }
    let dump = l.dump();
    assert!(dump.lines().any(|line| line.starts_with("level=1 head=")));
}

/// Recovery sees either the old level or the new run fully durable.
fn check_move_dichotomy(fa: FaStrategy, adversarial_seeds: u64) {
    let mut l = Lsm::new(LsmConfig::new(256)).unwrap();
    let c = l.run_capacity(0);
    l.move_node(
        &mut full_buffer(BufferKind::SortedVector, c, 500),
        FaStrategy::None,
    )
    .unwrap();
    let old = l.level_runs(0);
    let mut b = full_buffer(BufferKind::UnsortedHash, c, 0);
    let new_run = b.sorted();
    l.arena_mut().start_trace();
    l.move_node(&mut b, fa).unwrap();
    let events = l.arena().recorded_events();
    for plan in enumerate_crash_points(events, 0) {
        let seeds = if adversarial_seeds == 0 {
            vec![None]
        } else {
            (0..adversarial_seeds).map(Some).collect()
        };
        for seed in seeds {
            let plan = match seed {
                Some(s) => CrashPlan::adversarial(plan.crash_point, s),
                None => plan,
            };
            let r = l.crash(&plan).unwrap();
            let runs = r.level_runs(0);
            let ok = runs == old || (runs.len() == 2 && runs[0] == old[0] && runs[1] == new_run);
            assert!(ok, "{fa:?} crash {plan:?}: {} runs", runs.len());
        }
    }
}

#[test]
fn move_crash_dichotomy() {
    for fa in FAS {
        check_move_dichotomy(fa, 0);
        check_move_dichotomy(fa, 5);
    }
}

#[test]
fn merge_crash_dichotomy() {
    for fa in FAS {
        for kind in MergeKind::ALL {
            for via_dram in [false, true] {
                let (mut l, expect) = merge_fixture(256, false);
                let old = l.level_runs(0);
                l.arena_mut().start_trace();
                l.merge(0, kind, via_dram, fa).unwrap();
                let merged = l.run(1, 0);
                let events = l.arena().recorded_events();
                for plan in enumerate_crash_points(events, 0) {
                    let r = l.crash(&plan).unwrap();
                    let (src, dst) = (r.level_runs(0), r.level_runs(1));
                    let old_state = src == old && dst.is_empty();
                    let new_state = dst == vec![merged.clone()] && (src.is_empty() || src == old);
                    assert!(
                        old_state || new_state,
                        "{fa:?} {kind} dram={via_dram} at {}",
                        plan.crash_point
                    );
                    assert_eq!(r.contents(), expect);
                    if fa == FaStrategy::Tx {
                        assert!(
                            old_state || src.is_empty(),
                            "tx publishes both heads together"
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn bad_heads_are_corruption() {
    let l = Lsm::new(LsmConfig::new(256)).unwrap();
    let mut a = l.arena().clone();
    a.poke(head_off(1), &9u64.to_le_bytes()).unwrap();
    assert!(matches!(Lsm::recover_level(a), Err(Error::Corruption(_))));
    let mut a = l.arena().clone();
    a.poke(0, &[0; 8]).unwrap();
    assert!(matches!(Lsm::recover_level(a), Err(Error::Corruption(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn merge_equals_newest_wins_union(
        runs in prop::collection::vec(prop::collection::btree_set(0u64..60, 0..18), 1..=4),
        via_dram in any::<bool>(),
        kway in any::<bool>(),
    ) {
        let mut l = Lsm::new(LsmConfig::new(512)).unwrap();
        let runs: Vec<Vec<Entry>> = runs.into_iter().enumerate().map(|(r, s)| run_of(s, r as i32)).collect();
        l.load_level(0, &runs).unwrap();
        let expect = l.contents();
        let kind = if kway { MergeKind::KWay } else { MergeKind::TwoWay };
        l.merge(0, kind, via_dram, FaStrategy::Tx).unwrap();
        prop_assert_eq!(l.contents(), expect.clone());
        let got: Vec<(u64, Value)> = l.run(1, 0).into_iter().map(|e| (e.key, e.value)).collect();
        prop_assert_eq!(got, expect.into_iter().collect::<Vec<_>>());
    }
}
