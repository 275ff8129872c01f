use proptest::prelude::*;

use super::*;
use crate::nodes::Value;
use crate::pstore::{Arena, CrashMode};

#[test]
fn refmap_semantics() {
    let mut m = RefMap::new();
    let v = Value::new(1, 2, 3.0);
    assert_eq!(m.apply(&Op::Insert(7, v)).unwrap(), OpOutcome::Inserted);
    assert_eq!(m.apply(&Op::Search(7)).unwrap(), OpOutcome::Found(v));
    assert_eq!(
        m.apply(&Op::Insert(7, Value::default())).unwrap(),
        OpOutcome::Updated
    );
    assert_eq!(m.len(), 1);

    let snapshot = m.clone();
    assert!(m.apply(&Op::Erase(99)).is_err());
    assert_eq!(m, snapshot);
    for op in [Op::Split, Op::Balance, Op::Merge] {
        assert_eq!(m.apply(&op).unwrap(), OpOutcome::Unchanged);
    }
    assert_eq!(m, snapshot);
    assert_eq!(m.apply(&Op::Erase(7)).unwrap(), OpOutcome::Erased);
    assert!(m.is_empty());
}

#[test]
fn refmap_matches_any_order() {
    let mut m = RefMap::new();
    for k in [3, 1, 2] {
        m.apply(&Op::Insert(k, Value::for_key(k))).unwrap();
    }
    let pairs = [
        (2, Value::for_key(2)),
        (3, Value::for_key(3)),
        (1, Value::for_key(1)),
    ];
    assert!(m.matches(pairs));
    assert!(!m.matches(pairs[..2].to_vec()));
    assert_eq!(m.to_vec()[0].0, 1);
}

#[test]
fn shadow_diff_examples() {
    let img = vec![0u8; 128];
    assert_eq!(
        ShadowDiff::new(img.clone(), img.clone())
            .diff_bytes()
            .unwrap(),
        0
    );
    let mut bumped = img.clone();
    bumped[8..16].copy_from_slice(&1u64.to_le_bytes());
    let d = ShadowDiff::new(img.clone(), bumped).diff_bytes().unwrap();
    assert!((1..=8).contains(&d));
    assert!(ShadowDiff::new(img.clone(), vec![0; 64])
        .diff_bytes()
        .is_err());
    let mut two = img.clone();
    two[3] = 1;
    two[100] = 2;
    assert_eq!(ShadowDiff::new(img, two).changed_offsets(), vec![3, 100]);
}

#[test]
fn enumeration_counts_and_bounds() {
    assert_eq!(enumerate_crash_points(0, 1).len(), 1);
    assert_eq!(enumerate_crash_points(17, 1).len(), 18);
    let big = enumerate_crash_points(50_000, 5);
    assert!(big.len() <= EXHAUSTIVE_LIMIT);
    assert_eq!(big.first().unwrap().crash_point, 0);
    assert_eq!(big.last().unwrap().crash_point, 50_000);
    let again = enumerate_crash_points(50_000, 5);
    assert_eq!(
        big.iter().map(|p| p.crash_point).collect::<Vec<_>>(),
        again.iter().map(|p| p.crash_point).collect::<Vec<_>>()
    );
}

#[test]
fn every_plan_replays_and_last_is_durable_state() {
    let mut a = Arena::with_size(1 << 14).unwrap();
    let r = a.allocate(256, 64).unwrap();
    a.start_trace();
    a.store(&r, 0, &[1; 100]).unwrap();
    a.flush(&r, 0, 64).unwrap();
    a.fence();
    a.store(&r, 128, &[2; 8]).unwrap();
    let trace = a.trace().unwrap().clone();
    let plans = enumerate_crash_points(trace.events.len(), 0);
    assert_eq!(plans.len(), trace.events.len() + 1);
    for p in &plans {
        let img = a.crash(p).unwrap();
        assert_eq!(
            img.data(),
            &CrashOracle::image_at(&trace, p.crash_point)[..]
        );
    }
    let last = a.crash(plans.last().unwrap()).unwrap();
    assert_eq!(last.data(), a.durable_image());
    assert_eq!(
        a.crash_image(CrashMode::DeterministicDrop),
        a.durable_image()
    );
}

#[test]
fn generator_is_seeded_and_weighted() {
    let a: Vec<Op> = OpGenerator::new(9, 100).take(500).collect();
    let b: Vec<Op> = OpGenerator::new(9, 100).take(500).collect();
    assert_eq!(a, b);
    let c: Vec<Op> = OpGenerator::new(10, 100).take(500).collect();
    assert_ne!(a, c);
    assert!(a.iter().all(|op| op.key().unwrap() < 100));
    let only_search = OpWeights {
        insert: 0,
        search: 1,
        erase: 0,
    };
    assert!(OpGenerator::with_weights(1, 5, only_search)
        .take(50)
        .all(|op| matches!(op, Op::Search(_))));
    let inserts = OpGenerator::new(3, 1000)
        .take(10_000)
        .filter(|op| matches!(op, Op::Insert(..)))
        .count();
    assert!((4500..5500).contains(&inserts));
}

#[test]
fn replay_format_round_trip() {
    let ops = vec![
        Op::Insert(5, Value::new(-1, 2, 0.1)),
        Op::Search(5),
        Op::Erase(5),
        Op::Split,
        Op::Balance,
        Op::Merge,
    ];
    let text = write_replay(&ops);
    assert_eq!(text.lines().next().unwrap(), "insert 5 -1 2 0.1");
    assert_eq!(parse_replay(&text).unwrap(), ops);
    assert_eq!(
        parse_replay("# comment\n\nsearch 3\n").unwrap(),
        vec![Op::Search(3)]
    );
    assert!(parse_replay("insert 1 2").is_err());
    assert!(parse_replay("frobnicate 1").is_err());
}

proptest! {
    #[test]
    fn replay_round_trips_generated_sequences(seed in any::<u64>(), n in 0usize..200) {
        let ops: Vec<Op> = OpGenerator::new(seed, 1 << 40).take(n).collect();
        prop_assert_eq!(parse_replay(&write_replay(&ops)).unwrap(), ops);
    }
}
