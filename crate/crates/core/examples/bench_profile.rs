//! Runs small versions of the node experiments, writes their CSV and prints
//! the resulting performance profile.

use pmem_prims::bench::{
    build_profile, emit_csv, run, Experiment, ExperimentConfig, Position, AXES,
};
use pmem_prims::Result;

fn main() -> Result<()> {
    let mut rows = Vec::new();
    for id in [
        Experiment::E1,
        Experiment::E3,
        Experiment::E4,
        Experiment::E5,
        Experiment::E8,
        Experiment::E9,
        Experiment::E10,
    ] {
        let mut cfg = ExperimentConfig::new(id);
        cfg.node_sizes = vec![1024];
        cfg.positions = vec![Position::First, Position::Last];
        cfg.iterations = 50;
        cfg.pool_bytes = 256 << 10;
        let report = run(&cfg)?;
        println!(
            "{id}: {} rows, {} skipped",
            report.rows.len(),
            report.skipped.len()
        );
        rows.extend(report.rows);
    }
    let path = std::env::temp_dir().join("bench_rows.csv");
    emit_csv(&rows, &path)?;
    println!("rows -> {}\n", path.display());
    println!(
        "{:<12}{}",
        "layout",
        AXES.map(|a| format!("{a:>16}")).concat()
    );
    for p in build_profile(&rows)? {
        println!(
            "{:<12}{}",
            p.layout.name(),
            p.scores.map(|s| format!("{s:>16.3}")).concat()
        );
    }
    Ok(())
}
