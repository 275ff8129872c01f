use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Op;
use crate::error::{Error, Result};
use crate::nodes::Value;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OpWeights {
    pub insert: u32,
    pub search: u32,
    pub erase: u32,
}

impl Default for OpWeights {
    fn default() -> Self {
        OpWeights {
            insert: 50,
            search: 30,
            erase: 20,
        }
    }
}

/// Seeded, weighted workload generator over keys `0..key_space`.
#[derive(Clone, Debug)]
pub struct OpGenerator {
    rng: ChaCha8Rng,
    weights: OpWeights,
    key_space: u64,
}

impl OpGenerator {
    pub fn new(seed: u64, key_space: u64) -> Self {
        Self::with_weights(seed, key_space, OpWeights::default())
    }

    pub fn with_weights(seed: u64, key_space: u64, weights: OpWeights) -> Self {
        assert!(key_space > 0, "key space must not be empty");
        assert!(
            weights.insert + weights.search + weights.erase > 0,
            "all weights are zero"
        );
        OpGenerator {
            rng: ChaCha8Rng::seed_from_u64(seed),
            weights,
            key_space,
        }
    }

    pub fn next_op(&mut self) -> Op {
        let total = self.weights.insert + self.weights.search + self.weights.erase;
        let roll = self.rng.gen_range(0..total);
        let key = self.rng.gen_range(0..self.key_space);
        if roll < self.weights.insert {
            let v = Value::new(
                self.rng.gen(),
                self.rng.gen(),
                self.rng.gen_range(-1e6..1e6),
            );
            Op::Insert(key, v)
        } else if roll < self.weights.insert + self.weights.search {
            Op::Search(key)
        } else {
            Op::Erase(key)
        }
    }
}

impl Iterator for OpGenerator {
    type Item = Op;

    fn next(&mut self) -> Option<Op> {
        Some(self.next_op())
    }
}

/// One op per line: `opcode [key [a b c]]`.
pub fn write_replay(ops: &[Op]) -> String {
    let mut out = String::new();
    for op in ops {
        match op {
            Op::Insert(k, v) => {
                out.push_str(&format!("insert {k} {} {} {:?}\n", v.a(), v.b(), v.c()))
            }
            Op::Search(k) => out.push_str(&format!("search {k}\n")),
            Op::Erase(k) => out.push_str(&format!("erase {k}\n")),
            other => out.push_str(&format!("{}\n", other.opcode())),
        }
    }
    out
}

pub fn parse_replay(text: &str) -> Result<Vec<Op>> {
    let bad = |line: &str| Error::Parse(format!("bad replay line `{line}`"));
    let mut ops = Vec::new();
    for line in text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
    {
        let parts: Vec<&str> = line.split_whitespace().collect();
        let key = || -> Result<u64> {
            parts
                .get(1)
                .ok_or_else(|| bad(line))?
                .parse()
                .map_err(|_| bad(line))
        };
        let op = match parts[0] {
            "insert" => {
                if parts.len() != 5 {
                    return Err(bad(line));
                }
                let a = parts[2].parse().map_err(|_| bad(line))?;
                let b = parts[3].parse().map_err(|_| bad(line))?;
                let c = parts[4].parse().map_err(|_| bad(line))?;
                Op::Insert(key()?, Value::new(a, b, c))
            }
            "search" => Op::Search(key()?),
            "erase" => Op::Erase(key()?),
            "split" => Op::Split,
            "balance" => Op::Balance,
            "merge" => Op::Merge,
            _ => return Err(bad(line)),
        };
        ops.push(op);
    }
    Ok(ops)
}
