use std::collections::BTreeMap;
use std::path::Path;

use super::ResultRow;
use crate::error::{Error, Result};
use crate::nodes::{capacity, LayoutKind, SearchMethod};
use crate::tree::IterMode;

/// Profile axes in output order.
pub const AXES: [&str; 9] = [
    "search",
    "iterate",
    "insert",
    "erase",
    "split",
    "balance",
    "merge",
    "write_reduction",
    "memory",
];

/// Normalized scores of one layout; `scores[i]` belongs to `AXES[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileScore {
    pub layout: LayoutKind,
    pub scores: [f64; AXES.len()],
}

impl ProfileScore {
    pub fn score(&self, axis: &str) -> Option<f64> {
        AXES.iter().position(|a| *a == axis).map(|i| self.scores[i])
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (n, s) = xs.fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    (n > 0).then(|| s / n as f64)
}

/// Counter cost of one axis for one layout, or `None` without data.
fn cost(rows: &[&ResultRow], kind: LayoutKind, axis: &str) -> Result<Option<f64>> {
    let of = |exp: &'static str| rows.iter().filter(move |r| r.experiment == exp);
    Ok(match axis {
        "search" => {
            let m = SearchMethod::default_for(kind).to_string();
            mean(
                of("E1")
                    .filter(|r| r.param("method") == Some(&m))
                    .map(|r| r.lines_read_mean),
            )
        }
        "iterate" => {
            let m = IterMode::default_for(kind).to_string();
            mean(
                of("E3")
                    .filter(|r| r.param("mode") == Some(&m))
                    .map(|r| r.lines_read_mean),
            )
        }
        "insert" => mean(of("E4").map(|r| r.modified_bytes_mean)),
        "erase" => mean(of("E8").map(|r| r.modified_bytes_mean)),
        // The layout's cheaper applicable strategy.
        "split" => {
            let mut by: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
            for r in of("E5") {
                by.entry(r.param("split").unwrap_or(""))
                    .or_default()
                    .push(r.modified_bytes_mean);
            }
            by.into_values()
                .filter_map(|v| mean(v.into_iter()))
                .reduce(f64::min)
        }
        "balance" => mean(of("E9").map(|r| r.modified_bytes_mean)),
        "merge" => mean(of("E10").map(|r| r.modified_bytes_mean)),
        "write_reduction" => mean(
            rows.iter()
                .filter(|r| matches!(r.experiment.as_str(), "E4" | "E5" | "E8" | "E9" | "E10"))
                .map(|r| r.written_bytes_mean),
        ),
        "memory" => {
            let mut sizes: Vec<u64> = rows.iter().map(|r| r.node_size).collect();
            sizes.sort_unstable();
            sizes.dedup();
            let per_entry = sizes
                .into_iter()
                .map(|s| capacity(kind, s).map(|c| s as f64 / c as f64))
                .collect::<Result<Vec<_>>>()?;
            mean(per_entry.into_iter())
        }
        _ => None,
    })
}

/// Scores every node layout present in `rows` on every axis. A cost is
/// clamped to at least one counter unit, so scores stay in `(0, 1]`.
pub fn build_profile(rows: &[ResultRow]) -> Result<Vec<ProfileScore>> {
    let mut by_layout: BTreeMap<String, (LayoutKind, Vec<&ResultRow>)> = BTreeMap::new();
    for r in rows {
        // Traversal and LSM rows feed no axis.
        if matches!(r.experiment.as_str(), "E2" | "E6" | "E7") {
            continue;
        }
        if let Ok(kind) = r.layout.parse::<LayoutKind>() {
            by_layout
                .entry(r.layout.clone())
                .or_insert_with(|| (kind, Vec::new()))
                .1
                .push(r);
        }
    }
    if by_layout.is_empty() {
        return Err(Error::EmptyRows);
    }
    let mut costs = Vec::new();
    for (name, (kind, rs)) in &by_layout {
        let mut c = [0.0; AXES.len()];
        for (i, axis) in AXES.iter().enumerate() {
            c[i] = cost(rs, *kind, axis)?
                .ok_or_else(|| Error::MissingAxis {
                    layout: name.clone(),
                    axis: axis.to_string(),
                })?
                .max(1.0);
        }
        costs.push((*kind, c));
    }
    let mut best = [f64::INFINITY; AXES.len()];
    for (_, c) in &costs {
        for i in 0..AXES.len() {
            best[i] = best[i].min(c[i]);
        }
    }
    Ok(costs
        .into_iter()
        .map(|(layout, c)| ProfileScore {
            layout,
            scores: std::array::from_fn(|i| best[i] / c[i]),
        })
        .collect())
}

/// Writes `layout,<axes...>` with one line per layout.
pub fn emit_profile(scores: &[ProfileScore], path: impl AsRef<Path>) -> Result<()> {
    if scores.is_empty() {
        return Err(Error::EmptyRows);
    }
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["layout"];
    header.extend(AXES);
    w.write_record(&header)?;
    for s in scores {
        let mut rec = vec![s.layout.name().to_string()];
        rec.extend(s.scores.iter().map(|x| format!("{x:.6}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
