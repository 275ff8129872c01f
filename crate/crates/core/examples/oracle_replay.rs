//! Generates a seeded op sequence, writes it as a replay file, reads it back
//! and checks a tree against the reference map after every step.

use pmem_prims::nodes::{InsertOutcome, LayoutKind};
use pmem_prims::oracle::{parse_replay, write_replay, Op, OpGenerator, OpOutcome, RefMap};
use pmem_prims::tree::{Tree, TreeConfig};
use pmem_prims::{Error, Result};

fn main() -> Result<()> {
    let mut gen = OpGenerator::new(7, 500);
    let ops: Vec<Op> = (0..2000)
        .map(|_| gen.next_op())
        .filter(|op| op.key().is_some())
        .collect();
    let path = std::env::temp_dir().join("ops.replay");
    std::fs::write(&path, write_replay(&ops))?;
    let replayed = parse_replay(&std::fs::read_to_string(&path)?)?;
    assert_eq!(replayed, ops);

    let mut tree = Tree::new(TreeConfig::new(LayoutKind::Hashing, 512))?;
    let mut model = RefMap::new();
    for (i, op) in replayed.iter().enumerate() {
        let expected = settle(model.apply(op))?;
        let got = settle(match *op {
            Op::Insert(k, v) => tree.insert(k, v).map(|o| match o {
                InsertOutcome::Inserted => OpOutcome::Inserted,
                InsertOutcome::Updated => OpOutcome::Updated,
            }),
            Op::Search(k) => tree
                .get(k)
                .map(|v| v.map_or(OpOutcome::NotFound, OpOutcome::Found)),
            Op::Erase(k) => tree.erase(k).map(|()| OpOutcome::Erased),
            _ => unreachable!(),
        })?;
        assert_eq!(got, expected, "step {i}: {op:?}");
    }
    assert!(model.matches(tree.entries().into_iter().map(|e| (e.key, e.value))));
    println!(
        "{} ops from {} agree; final size {}",
        replayed.len(),
        path.display(),
        tree.len()
    );
    Ok(())
}

/// Erasing an absent key is an outcome here, not a failure.
fn settle(r: Result<OpOutcome>) -> Result<OpOutcome> {
    match r {
        Err(Error::KeyNotFound(_)) => Ok(OpOutcome::NotFound),
        other => other,
    }
}
