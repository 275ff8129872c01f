use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pstore::WriteStats;

/// One CSV line: a cell's counter means over all iterations.
///
/// `params` holds the cell's remaining parameters as `key=value` pairs joined
/// by `;` in a fixed order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub layout: String,
    pub node_size: u64,
    pub params: String,
    pub latency_ns_mean: f64,
    pub latency_ns_p50: f64,
    pub modified_bytes_mean: f64,
    pub written_bytes_mean: f64,
    pub flushed_lines_mean: f64,
    pub fences_mean: f64,
    pub lines_read_mean: f64,
    pub allocations_mean: f64,
    pub log_bytes_mean: f64,
    pub iterations: u64,
    pub seed: u64,
}

impl ResultRow {
    /// Value of one `key=value` parameter.
    pub fn param(&self, key: &str) -> Option<&str> {
        self.params
            .split(';')
            .filter_map(|kv| kv.split_once('='))
            .find(|(k, _)| *k == key)
            .map(|(_, v)| v)
    }
}

/// Per-iteration measurements of one cell.
#[derive(Debug, Default)]
pub(crate) struct Samples {
    total: WriteStats,
    latencies: Vec<u64>,
}

impl Samples {
    pub(crate) fn push(&mut self, stats: WriteStats, ns: u64) {
        self.total += stats;
        self.latencies.push(ns);
    }

    pub(crate) fn into_row(
        mut self,
        experiment: &str,
        layout: &str,
        node_size: u64,
        params: String,
        seed: u64,
    ) -> ResultRow {
        let n = self.latencies.len().max(1) as f64;
        let t = self.total;
        self.latencies.sort_unstable();
        let p50 = self
            .latencies
            .get(self.latencies.len() / 2)
            .copied()
            .unwrap_or(0) as f64;
        ResultRow {
            experiment: experiment.to_string(),
            layout: layout.to_string(),
            node_size,
            params,
            latency_ns_mean: self.latencies.iter().sum::<u64>() as f64 / n,
            latency_ns_p50: p50,
            modified_bytes_mean: t.modified_bytes as f64 / n,
            written_bytes_mean: t.written_bytes as f64 / n,
            flushed_lines_mean: t.flushed_lines as f64 / n,
            fences_mean: t.fences as f64 / n,
            lines_read_mean: t.lines_read as f64 / n,
            allocations_mean: t.allocations as f64 / n,
            log_bytes_mean: t.log_bytes as f64 / n,
            iterations: self.latencies.len() as u64,
            seed,
        }
    }
}

/// Writes the header and one line per row.
pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::EmptyRows);
    }
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::EmptyRows);
    }
    let file = std::fs::File::create(path)?;
    write_csv(rows, std::io::BufWriter::new(file))
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}
