use std::fmt::Write as _;

use super::{Node, Value};
use crate::error::{Error, Result};
use crate::pstore::Arena;

/// One line of a node dump: `rank pos key a b c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DumpLine {
    pub rank: usize,
    pub pos: usize,
    pub key: u64,
    pub value: Value,
}

impl Node {
    /// Textual dump: a `#` header line, then one line per valid entry in
    /// [`positions`](Node::positions) order. The value's float is printed
    /// with full round-trip precision.
    pub fn dump(&self, a: &Arena) -> String {
        let mut out = format!(
            "# node offset={} layout={} size={} count={}\n",
            self.pref.offset,
            self.layout.kind,
            self.layout.node_size,
            self.len(a)
        );
        for (rank, pos) in self.positions(a).into_iter().enumerate() {
            let v = self.value_at(a, pos);
            let _ = writeln!(
                out,
                "{rank} {pos} {} {} {} {:?}",
                self.key_at(a, pos),
                v.a(),
                v.b(),
                v.c()
            );
        }
        out
    }
}

pub fn parse_dump(text: &str) -> Result<Vec<DumpLine>> {
    let bad = |l: &str| Error::Parse(format!("bad dump line `{l}`"));
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|line| {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 6 {
                return Err(bad(line));
            }
            let p = |i: usize| f[i].parse::<u64>().map_err(|_| bad(line));
            Ok(DumpLine {
                rank: p(0)? as usize,
                pos: p(1)? as usize,
                key: p(2)?,
                value: Value::new(
                    f[3].parse().map_err(|_| bad(line))?,
                    f[4].parse().map_err(|_| bad(line))?,
                    f[5].parse().map_err(|_| bad(line))?,
                ),
            })
        })
        .collect()
}
