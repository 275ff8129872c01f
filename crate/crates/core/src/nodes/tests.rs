use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::oracle::{RefMap, ShadowDiff};
use crate::pstore::{Arena, CrashPlan, Event, FaStrategy, LINE_SIZE};

const ARENA: usize = 1 << 20;

fn arena() -> Arena {
    Arena::with_size(ARENA).unwrap()
}

fn node(a: &mut Arena, kind: LayoutKind, size: u64) -> Node {
    Node::create(a, Layout::new(kind, size).unwrap(), FaStrategy::None).unwrap()
}

fn filled(kind: LayoutKind, size: u64, keys: &[u64]) -> (Arena, Node) {
    let mut a = arena();
    let n = node(&mut a, kind, size);
    let entries: Vec<Entry> = keys
        .iter()
        .map(|&k| Entry::new(k, Value::for_key(k)))
        .collect();
    n.bulk_fill(&mut a, &entries, PRef::NULL, PRef::NULL)
        .unwrap();
    n.validate(&a).unwrap();
    (a, n)
}

fn keys_of(a: &Arena, n: &Node) -> Vec<u64> {
    n.sorted_entries(a).into_iter().map(|e| e.key).collect()
}

fn measured(a: &mut Arena, f: impl FnOnce(&mut Arena) -> crate::Result<()>) -> WriteStats {
    a.reset_stats();
    f(a).unwrap();
    a.stats()
}

use crate::pstore::{PRef, WriteStats};

#[test]
fn capacity_golden_values() {
    let base = [9, 19, 41, 83, 169];
    let aligned = [8, 18, 40, 82, 168];
    let search = [8, 18, 37, 79, 160];
    for (i, &s) in NODE_SIZES.iter().enumerate() {
        assert_eq!(capacity_of(CapacityClass::Base, s).unwrap(), base[i]);
        assert_eq!(
            capacity_of(CapacityClass::Base, s).unwrap() as u64,
            (s - 40) / 24
        );
        assert_eq!(capacity_of(CapacityClass::Aligned, s).unwrap(), aligned[i]);
        assert_eq!(
            capacity_of(CapacityClass::Aligned, s).unwrap() as u64,
            (s - 64) / 24
        );
        assert_eq!(
            capacity_of(CapacityClass::SearchStructure, s).unwrap(),
            search[i]
        );
        assert_eq!(capacity(LayoutKind::Sorted, s).unwrap(), aligned[i]);
        assert_eq!(capacity(LayoutKind::Hashing, s).unwrap(), search[i]);
    }
    assert!(matches!(
        capacity(LayoutKind::Sorted, 300),
        Err(Error::UnsupportedNodeSize(300))
    ));
}

#[test]
fn layouts_fit_and_align() {
    for kind in LayoutKind::ALL {
        for size in NODE_SIZES {
            let l = Layout::new(kind, size).unwrap();
            assert_eq!(l.keys_off % LINE_SIZE as u64, 0, "{kind} {size}");
            assert!(l.header_bytes <= l.keys_off);
            assert!(l.values_off >= l.keys_off + 8 * l.capacity as u64);
            assert!(l.values_off + 16 * l.capacity as u64 <= size);
            if let Some(aux) = l.aux_off {
                assert!(aux + l.capacity as u64 <= l.header_bytes);
            }
            assert!(l.next_off + 32 <= l.header_bytes);
        }
    }
    // Values are line-aligned whenever the node has room for the padding.
    assert_eq!(
        Layout::new(LayoutKind::Sorted, 1024).unwrap().values_off % 64,
        0
    );
    assert_eq!(
        Layout::new(LayoutKind::Hashing, 4096).unwrap().values_off % 64,
        0
    );
}

#[test]
fn empty_node_search_misses() {
    for kind in LayoutKind::ALL {
        let mut a = arena();
        let n = node(&mut a, kind, 256);
        for m in SearchMethod::ALL.into_iter().filter(|m| m.supports(kind)) {
            assert!(!n.search(&mut a, 42, m).unwrap().found);
        }
    }
}

#[test]
fn unsupported_search_is_rejected() {
    let (mut a, n) = filled(LayoutKind::Sorted, 256, &[1, 2]);
    assert!(n.search(&mut a, 1, SearchMethod::HashProbe).is_err());
    assert!(n.lower_bound_child(&mut a, 1).is_ok());
    let (mut a, n) = filled(LayoutKind::Hashing, 256, &[1, 2]);
    assert!(n.lower_bound_child(&mut a, 1).is_err());
}

#[test]
fn search_agrees_with_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for kind in LayoutKind::ALL {
        for size in NODE_SIZES {
            let cap = capacity(kind, size).unwrap();
            let mut keys: Vec<u64> = (0..cap as u64 * 3).collect();
            keys.shuffle(&mut rng);
            keys.truncate(rng.gen_range(1..=cap));
            let (mut a, n) = filled(kind, size, &keys);
            for probe in 0..cap as u64 * 3 {
                let expect = keys.iter().position(|&k| k == probe);
                for m in SearchMethod::ALL.into_iter().filter(|m| m.supports(kind)) {
                    let r = n.search(&mut a, probe, m).unwrap();
                    assert_eq!(r.found, expect.is_some(), "{kind} {size} {m} {probe}");
                    if let Some(p) = r.physical_pos {
                        assert_eq!(n.key_at(&a, p), probe);
                    }
                }
            }
        }
    }
}

#[test]
fn hash_probe_miss_without_fingerprint_match_reads_no_keys() {
    let keys: Vec<u64> = (1..=160).collect();
    let (mut a, n) = filled(LayoutKind::Hashing, 4096, &keys);
    let fps: Vec<u8> = keys.iter().map(|&k| fingerprint(k)).collect();
    let probe = (1000u64..)
        .find(|k| !fps.contains(&fingerprint(*k)))
        .unwrap();
    a.reset_stats();
    assert!(
        !n.search(&mut a, probe, SearchMethod::HashProbe)
            .unwrap()
            .found
    );
    assert_eq!(a.stats().lines_read, n.layout.header_bytes / 64);
}

#[test]
fn lower_bound_child_examples() {
    for kind in [LayoutKind::Sorted, LayoutKind::Indirection] {
        let (mut a, n) = filled(kind, 256, &[30, 10, 20]);
        assert_eq!(n.lower_bound_child(&mut a, 15).unwrap(), 1);
        assert_eq!(n.lower_bound_child(&mut a, 5).unwrap(), 0);
        assert_eq!(n.lower_bound_child(&mut a, 31).unwrap(), 3);
        assert_eq!(n.lower_bound_child(&mut a, 20).unwrap(), 1);
    }
}

#[test]
fn insert_accounting_examples() {
    // Sorted 4 KiB node with 167 entries, insert at the first position.
    let keys: Vec<u64> = (1..=167).map(|k| k * 2).collect();
    let (mut a, n) = filled(LayoutKind::Sorted, 4096, &keys);
    let before = n.raw_bytes(&a);
    let d = measured(&mut a, |a| {
        n.insert(a, 1, Value::for_key(1), FaStrategy::None)
            .map(|_| ())
    });
    assert!(d.modified_bytes >= 167 * 24 + 24 + 8);
    assert!(
        ShadowDiff::new(before, n.raw_bytes(&a))
            .diff_bytes()
            .unwrap()
            <= d.modified_bytes
    );

    let (mut a, n) = filled(LayoutKind::Unsorted, 4096, &keys);
    let d = measured(&mut a, |a| {
        n.insert(a, 1, Value::for_key(1), FaStrategy::None)
            .map(|_| ())
    });
    assert_eq!(d.modified_bytes, 24 + 8);

    let (mut a, n) = filled(LayoutKind::Hashing, 4096, &[]);
    let d = measured(&mut a, |a| {
        n.insert(a, 5, Value::for_key(5), FaStrategy::None)
            .map(|_| ())
    });
    assert_eq!(d.modified_bytes, 24 + 1 + 8);
    assert_eq!(n.fingerprint_at(&a, 0), fingerprint(5));
}

#[test]
fn duplicate_insert_updates_in_place() {
    for kind in LayoutKind::ALL {
        let (mut a, n) = filled(kind, 512, &[3, 1, 2]);
        let v = Value::new(9, 9, 9.0);
        let d = measured(&mut a, |a| {
            assert_eq!(n.insert(a, 2, v, FaStrategy::None)?, InsertOutcome::Updated);
            Ok(())
        });
        assert_eq!(d.modified_bytes, 16);
        assert_eq!(n.len(&a), 3);
        assert_eq!(n.get(&a, 2), Some(v));
    }
}

#[test]
fn full_node_rejects_insert() {
    for kind in LayoutKind::ALL {
        let cap = capacity(kind, 256).unwrap() as u64;
        let (mut a, n) = filled(kind, 256, &(0..cap).collect::<Vec<_>>());
        assert!(matches!(
            n.insert(&mut a, 999, Value::default(), FaStrategy::None),
            Err(Error::NodeFull(_))
        ));
    }
}

#[test]
fn erase_accounting_examples() {
    let keys: Vec<u64> = (1..=100).collect();
    let (mut a, n) = filled(LayoutKind::BitmapOnly, 4096, &keys);
    let d = measured(&mut a, |a| n.erase(a, 50, FaStrategy::None));
    assert_eq!(d.modified_bytes, 8);
    assert_eq!(d.flushed_lines, 1);

    let keys: Vec<u64> = (1..=168).collect();
    let (mut a, n) = filled(LayoutKind::Sorted, 4096, &keys);
    let d = measured(&mut a, |a| n.erase(a, 1, FaStrategy::None));
    assert!(d.modified_bytes >= 167 * 24);

    let (mut a, n) = filled(LayoutKind::Unsorted, 4096, &keys);
    let d = measured(&mut a, |a| n.erase(a, 168, FaStrategy::None));
    assert_eq!(d.modified_bytes, 8);

    let (mut a, n) = filled(LayoutKind::Unsorted, 256, &[1, 2]);
    assert!(matches!(
        n.erase(&mut a, 3, FaStrategy::None),
        Err(Error::KeyNotFound(3))
    ));
}

/// Every data-line flush precedes a fence that precedes the first flush of
/// the count / bitmap line.
fn assert_persistence_ordering(n: &Node, events: &[Event]) {
    let l = n.layout;
    let (pub_start, pub_len) = match l.count_off {
        Some(c) => (c, 8),
        None => (l.bitmap_off, l.bitmap_bytes),
    };
    let publishes = |off: u64, len: u64| {
        let rel = off.wrapping_sub(n.pref.offset);
        rel < pub_start + pub_len && rel + len > pub_start
    };
    let data_line = |off: u64| {
        let rel = off.wrapping_sub(n.pref.offset);
        rel >= l.keys_off && rel < l.node_size
    };
    let first_meta = events
        .iter()
        .position(|e| matches!(e, Event::Flush { offset, len } if publishes(*offset, *len)))
        .expect("publish flush");
    let last_data = events
        .iter()
        .rposition(|e| matches!(e, Event::Flush { offset, .. } if data_line(*offset)));
    if let Some(d) = last_data {
        assert!(d < first_meta, "data flush after publish");
        assert!(
            events[d..first_meta]
                .iter()
                .any(|e| matches!(e, Event::Fence)),
            "no fence between: {:?} {events:?}",
            l.kind
        );
    }
}

#[test]
fn insert_and_erase_persist_data_before_publish() {
    for kind in LayoutKind::ALL {
        for size in [256, 4096] {
            let cap = capacity(kind, size).unwrap() as u64;
            let keys: Vec<u64> = (0..cap - 1).map(|k| k * 2 + 2).collect();
            let (mut a, n) = filled(kind, size, &keys);
            a.start_trace();
            n.insert(&mut a, 1, Value::for_key(1), FaStrategy::Individual)
                .unwrap();
            assert_persistence_ordering(&n, &a.stop_trace().unwrap().events);
            a.start_trace();
            n.erase(&mut a, 2, FaStrategy::Individual).unwrap();
            assert_persistence_ordering(&n, &a.stop_trace().unwrap().events);
        }
    }
}

#[test]
fn unordered_insert_cost_is_position_independent() {
    for kind in [
        LayoutKind::Unsorted,
        LayoutKind::BitmapOnly,
        LayoutKind::Hashing,
    ] {
        let cap = capacity(kind, 1024).unwrap() as u64;
        let keys: Vec<u64> = (1..cap).map(|k| k * 10).collect();
        let costs: Vec<u64> = [5, cap / 2 * 10 + 5, cap * 10 + 5]
            .iter()
            .map(|&k| {
                let (mut a, n) = filled(kind, 1024, &keys);
                measured(&mut a, |a| {
                    n.insert(a, k, Value::for_key(k), FaStrategy::None)
                        .map(|_| ())
                })
                .modified_bytes
            })
            .collect();
        assert!(costs.windows(2).all(|w| w[0] == w[1]), "{kind}: {costs:?}");
    }
}

#[test]
fn sorted_cost_non_increasing_in_rank() {
    let keys: Vec<u64> = (1..40).map(|k| k * 10).collect();
    let mut last_ins = u64::MAX;
    let mut last_del = u64::MAX;
    for rank in 0..40u64 {
        let (mut a, n) = filled(LayoutKind::Sorted, 1024, &keys);
        let k = rank * 10 + 5;
        let c = measured(&mut a, |a| {
            n.insert(a, k, Value::for_key(k), FaStrategy::None)
                .map(|_| ())
        })
        .modified_bytes;
        assert!(c <= last_ins);
        last_ins = c;
        if rank < 39 {
            let (mut a, n) = filled(LayoutKind::Sorted, 1024, &keys);
            let c =
                measured(&mut a, |a| n.erase(a, (rank + 1) * 10, FaStrategy::None)).modified_bytes;
            assert!(c <= last_del);
            last_del = c;
        }
    }
}

#[test]
fn sorted_split_example() {
    let keys: Vec<u64> = (1..=40).collect();
    let (mut a, n) = filled(LayoutKind::Sorted, 1024, &keys);
    let s = n
        .split(&mut a, SplitStrategy::Move, FaStrategy::Individual)
        .unwrap();
    assert_eq!(keys_of(&a, &s.left), (1..=20).collect::<Vec<_>>());
    assert_eq!(keys_of(&a, &s.right), (21..=40).collect::<Vec<_>>());
    assert_eq!(s.separator, 20);
    assert_eq!(s.left.next(&a), s.right.pref);
    assert_eq!(s.right.prev(&a), s.left.pref);
    assert!(matches!(
        n.split(&mut a, SplitStrategy::Copy, FaStrategy::None),
        Err(Error::InvalidLayout(_))
    ));
}

#[test]
fn split_relinks_old_successor() {
    let mut a = arena();
    let l = Layout::new(LayoutKind::Hashing, 256).unwrap();
    let x = Node::create(&mut a, l, FaStrategy::None).unwrap();
    let y = Node::create(&mut a, l, FaStrategy::None).unwrap();
    let full: Vec<Entry> = (1..=8).map(|k| Entry::new(k, Value::for_key(k))).collect();
    x.bulk_fill(&mut a, &full, y.pref, PRef::NULL).unwrap();
    y.bulk_fill(
        &mut a,
        &[Entry::new(100, Value::for_key(100))],
        PRef::NULL,
        x.pref,
    )
    .unwrap();
    let s = x
        .split(&mut a, SplitStrategy::Copy, FaStrategy::None)
        .unwrap();
    assert_eq!(x.next(&a), s.right.pref);
    assert_eq!(s.right.next(&a), y.pref);
    assert_eq!(y.prev(&a), s.right.pref);
}

#[test]
fn split_conservation_all_layouts() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for kind in LayoutKind::ALL {
        for size in NODE_SIZES {
            let cap = capacity(kind, size).unwrap();
            let mut keys: Vec<u64> = (0..cap as u64 * 4).collect();
            keys.shuffle(&mut rng);
            keys.truncate(cap);
            let strategies: &[SplitStrategy] = if kind.has_bitmap() {
                &[SplitStrategy::Move, SplitStrategy::Copy]
            } else {
                &[SplitStrategy::Move]
            };
            let mut outputs = Vec::new();
            for &st in strategies {
                for fa in [FaStrategy::Tx, FaStrategy::Individual, FaStrategy::None] {
                    let (mut a, n) = filled(kind, size, &keys);
                    let s = n.split(&mut a, st, fa).unwrap();
                    s.left.validate(&a).unwrap();
                    s.right.validate(&a).unwrap();
                    let (l, r) = (keys_of(&a, &s.left), keys_of(&a, &s.right));
                    assert_eq!(l.len(), cap / 2);
                    assert_eq!(*l.last().unwrap(), s.separator);
                    assert!(s.separator < r[0]);
                    let mut all = [l.clone(), r.clone()].concat();
                    all.sort_unstable();
                    let mut expect = keys.clone();
                    expect.sort_unstable();
                    assert_eq!(all, expect);
                    outputs.push((s.left.sorted_entries(&a), s.right.sorted_entries(&a)));
                }
            }
            assert!(outputs.windows(2).all(|w| w[0] == w[1]), "{kind} {size}");
        }
    }
}

#[test]
fn copy_split_writes_more_than_move() {
    for kind in [
        LayoutKind::BitmapOnly,
        LayoutKind::Indirection,
        LayoutKind::Hashing,
    ] {
        let keys: Vec<u64> = (0..160).map(|k| (k * 7919) % 1000).collect();
        let (mut a, n) = filled(kind, 4096, &keys);
        let mv = measured(&mut a, |a| {
            n.split(a, SplitStrategy::Move, FaStrategy::None)
                .map(|_| ())
        });
        let (mut a, n) = filled(kind, 4096, &keys);
        let cp = measured(&mut a, |a| {
            n.split(a, SplitStrategy::Copy, FaStrategy::None)
                .map(|_| ())
        });
        assert!(cp.modified_bytes > mv.modified_bytes, "{kind}");
    }
}

#[test]
fn sorted_balance_example() {
    let mut a = arena();
    let l = Layout::new(LayoutKind::Sorted, 1024).unwrap();
    let recv = Node::create(&mut a, l, FaStrategy::None).unwrap();
    let donor = Node::create(&mut a, l, FaStrategy::None).unwrap();
    let e = |r: std::ops::RangeInclusive<u64>| {
        r.map(|k| Entry::new(k, Value::for_key(k)))
            .collect::<Vec<_>>()
    };
    recv.bulk_fill(&mut a, &e(1..=19), donor.pref, PRef::NULL)
        .unwrap();
    donor
        .bulk_fill(&mut a, &e(41..=80), PRef::NULL, recv.pref)
        .unwrap();
    donor
        .balance(&mut a, &recv, BalanceDirection::ToLower, FaStrategy::None)
        .unwrap();
    let expect: Vec<u64> = (1..=19).chain(41..=50).collect();
    assert_eq!(keys_of(&a, &recv), expect);
    assert_eq!(keys_of(&a, &donor), (51..=80).collect::<Vec<_>>());
}

fn balance_pair(
    kind: LayoutKind,
    size: u64,
    dir: BalanceDirection,
) -> (Arena, Node, Node, Vec<u64>) {
    let mut a = arena();
    let l = Layout::new(kind, size).unwrap();
    let m = l.capacity as u64;
    let donor = Node::create(&mut a, l, FaStrategy::None).unwrap();
    let recv = Node::create(&mut a, l, FaStrategy::None).unwrap();
    let (dk, rk): (Vec<u64>, Vec<u64>) = match dir {
        BalanceDirection::ToLower => ((m..2 * m).rev().collect(), (0..m / 2 - 1).rev().collect()),
        BalanceDirection::ToHigher => (
            (0..m).rev().collect(),
            (2 * m..2 * m + m / 2 - 1).rev().collect(),
        ),
    };
    let ent = |ks: &[u64]| {
        ks.iter()
            .map(|&k| Entry::new(k, Value::for_key(k)))
            .collect::<Vec<_>>()
    };
    donor
        .bulk_fill(&mut a, &ent(&dk), PRef::NULL, PRef::NULL)
        .unwrap();
    recv.bulk_fill(&mut a, &ent(&rk), PRef::NULL, PRef::NULL)
        .unwrap();
    let mut all = [dk, rk].concat();
    all.sort_unstable();
    (a, donor, recv, all)
}

#[test]
fn balance_preserves_union_all_layouts() {
    for kind in LayoutKind::ALL {
        for size in NODE_SIZES {
            for dir in [BalanceDirection::ToLower, BalanceDirection::ToHigher] {
                for fa in [FaStrategy::Tx, FaStrategy::None] {
                    let (mut a, donor, recv, all) = balance_pair(kind, size, dir);
                    let m = donor.capacity();
                    donor.balance(&mut a, &recv, dir, fa).unwrap();
                    donor.validate(&a).unwrap();
                    recv.validate(&a).unwrap();
                    assert_eq!(donor.len(&a), m - m / 4);
                    assert_eq!(recv.len(&a), m / 2 - 1 + m / 4);
                    let mut got = [keys_of(&a, &donor), keys_of(&a, &recv)].concat();
                    got.sort_unstable();
                    assert_eq!(got, all, "{kind} {size} {dir:?}");
                    let (d, r) = (keys_of(&a, &donor), keys_of(&a, &recv));
                    match dir {
                        BalanceDirection::ToLower => assert!(r.last() < d.first()),
                        BalanceDirection::ToHigher => assert!(d.last() < r.first()),
                    }
                }
            }
        }
    }
}

#[test]
fn indirection_balance_writes_only_moved_pairs() {
    let (mut a, donor, recv, _) =
        balance_pair(LayoutKind::Indirection, 4096, BalanceDirection::ToHigher);
    let l = recv.layout;
    let region = |a: &Arena| {
        a.peek(
            (recv.pref.offset + l.keys_off) as usize,
            (l.node_size - l.keys_off) as usize,
        )
        .to_vec()
    };
    let before = region(&a);
    donor
        .balance(&mut a, &recv, BalanceDirection::ToHigher, FaStrategy::None)
        .unwrap();
    let diff = ShadowDiff::new(before, region(&a)).diff_bytes().unwrap();
    assert!(diff <= (l.capacity / 4 * 24) as u64);
    assert!(diff > 0);
}

#[test]
fn balance_rejects_bad_preconditions() {
    let (mut a, donor, recv, _) = balance_pair(LayoutKind::Sorted, 256, BalanceDirection::ToLower);
    assert!(recv
        .balance(&mut a, &donor, BalanceDirection::ToHigher, FaStrategy::None)
        .is_err());
}

#[test]
fn merge_accounting_and_union() {
    for kind in LayoutKind::ALL {
        let mut a = arena();
        let l = Layout::new(kind, 1024).unwrap();
        let left = Node::create(&mut a, l, FaStrategy::None).unwrap();
        let right = Node::create(&mut a, l, FaStrategy::None).unwrap();
        let ent = |r: std::ops::Range<u64>| {
            r.map(|k| Entry::new(k, Value::for_key(k)))
                .collect::<Vec<_>>()
        };
        left.bulk_fill(&mut a, &ent(0..15), right.pref, PRef::NULL)
            .unwrap();
        right
            .bulk_fill(&mut a, &ent(100..115), PRef::NULL, left.pref)
            .unwrap();
        let d = measured(&mut a, |a| left.merge_from(a, &right, FaStrategy::None));
        left.validate(&a).unwrap();
        assert_eq!(
            keys_of(&a, &left),
            (0..15).chain(100..115).collect::<Vec<_>>()
        );
        match kind {
            LayoutKind::Sorted | LayoutKind::Unsorted => assert_eq!(d.modified_bytes, 15 * 24 + 8),
            LayoutKind::Hashing => assert!(d.modified_bytes > 15 * 24 + 8),
            _ => {}
        }
        assert!(right.merge_from(&mut a, &left, FaStrategy::None).is_err());
    }
}

#[test]
fn tx_insert_rolls_back_on_crash() {
    for kind in LayoutKind::ALL {
        let (mut a, n) = filled(kind, 512, &[10, 20, 30]);
        let before = n.raw_bytes(&a);
        a.start_trace();
        n.insert(&mut a, 15, Value::for_key(15), FaStrategy::Tx)
            .unwrap();
        let events = a.recorded_events();
        assert!(a.stats().log_bytes > 0);
        // Every crash point before the commit's final fence restores the node.
        let trace = a.trace().unwrap().clone();
        let commit_fence = trace
            .events
            .iter()
            .rposition(|e| matches!(e, Event::Fence))
            .unwrap();
        for p in 0..=events {
            let rec = a.crash(&CrashPlan::deterministic(p)).unwrap();
            let got = n.raw_bytes(&rec);
            let new = n.raw_bytes(&a);
            assert!(got == before || got == new, "{kind} point {p}");
            if p + 1 < commit_fence {
                // Log still active: rollback yields the pre-image.
                let lens_ok = n.len(&rec) == 3 || n.len(&rec) == 4;
                assert!(lens_ok);
            }
        }
    }
}

#[test]
fn dump_and_raw_round_trip() {
    for kind in LayoutKind::ALL {
        let (mut a, n) = filled(kind, 512, &[5, 3, 9]);
        let text = n.dump(&a);
        let lines = parse_dump(&text).unwrap();
        assert_eq!(lines.len(), 3);
        for l in &lines {
            assert_eq!(n.key_at(&a, l.pos), l.key);
            assert_eq!(l.value, Value::for_key(l.key));
        }
        if kind.is_ordered() {
            assert_eq!(
                lines.iter().map(|l| l.key).collect::<Vec<_>>(),
                vec![3, 5, 9]
            );
        }
        let raw = n.raw_bytes(&a);
        let other = node(&mut a, kind, 512);
        other.load_raw(&mut a, &raw).unwrap();
        assert_eq!(other.entries(&a), n.entries(&a));
    }
    assert!(parse_dump("1 2 3").is_err());
}

#[test]
fn read_probe_dominance_small() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mean = |kind: LayoutKind, m: SearchMethod, rng: &mut ChaCha8Rng| {
        let cap = capacity(kind, 4096).unwrap() as u64;
        let keys: Vec<u64> = (0..cap).map(|k| k * 31 + 7).collect();
        let (mut a, n) = filled(kind, 4096, &keys);
        let mut total = 0;
        for _ in 0..2000 {
            let k = keys[rng.gen_range(0..keys.len())];
            a.reset_read_window();
            let before = a.stats().lines_read;
            assert!(n.search(&mut a, k, m).unwrap().found);
            total += a.stats().lines_read - before;
        }
        total as f64 / 2000.0
    };
    let hash = mean(LayoutKind::Hashing, SearchMethod::HashProbe, &mut rng);
    let lin = mean(LayoutKind::Unsorted, SearchMethod::Linear, &mut rng);
    let bml = mean(LayoutKind::BitmapOnly, SearchMethod::BitmapLinear, &mut rng);
    let bin = mean(LayoutKind::Sorted, SearchMethod::Binary, &mut rng);
    assert!(
        hash < lin && hash < bml && hash <= bin,
        "{hash} {lin} {bml} {bin}"
    );
}

#[derive(Clone, Debug)]
enum NodeOp {
    Insert(u64),
    Erase(u64),
    Update(u64),
}

fn node_op() -> impl Strategy<Value = NodeOp> {
    prop_oneof![
        3 => (0u64..64).prop_map(NodeOp::Insert),
        2 => (0u64..64).prop_map(NodeOp::Erase),
        1 => (0u64..64).prop_map(NodeOp::Update),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Node contents track the reference map, layout invariants hold, and the
    /// byte diff of every mutation is bounded by its modified-bytes counter.
    #[test]
    fn node_matches_oracle(
        kind in prop::sample::select(LayoutKind::ALL.to_vec()),
        size in prop::sample::select(vec![256u64, 512, 1024]),
        fa in prop::sample::select(vec![FaStrategy::Tx, FaStrategy::Individual, FaStrategy::None]),
        ops in prop::collection::vec(node_op(), 1..120),
    ) {
        let mut a = arena();
        let n = node(&mut a, kind, size);
        let mut oracle = RefMap::new();
        for (i, op) in ops.iter().enumerate() {
            let before = a.data().to_vec();
            a.reset_stats();
            match *op {
                NodeOp::Insert(k) | NodeOp::Update(k) => {
                    let v = Value::new(i as i32, k as i32, i as f64);
                    let present = oracle.get(k).is_some();
                    match n.insert(&mut a, k, v, fa) {
                        Ok(_) => { oracle.apply(&crate::oracle::Op::Insert(k, v)).unwrap(); }
                        Err(Error::NodeFull(_)) => prop_assert!(!present && n.is_full(&a)),
                        Err(e) => return Err(TestCaseError::fail(e.to_string())),
                    }
                }
                NodeOp::Erase(k) => {
                    let r = n.erase(&mut a, k, fa);
                    let o = oracle.apply(&crate::oracle::Op::Erase(k));
                    prop_assert_eq!(r.is_ok(), o.is_ok());
                }
            }
            let diff = ShadowDiff::new(before, a.data().to_vec()).diff_bytes().unwrap();
            prop_assert!(diff <= a.stats().modified_bytes);
            prop_assert!(a.stats().is_consistent());
            n.validate(&a).unwrap();
            prop_assert!(oracle.matches(n.sorted_entries(&a).into_iter().map(|e| (e.key, e.value))));
        }
    }
}
