//! Stores, flushes, fences and an undo-log transaction on the instrumented
//! arena, then a raw image dump/reload and the event log as CSV.

use pmem_prims::pstore::{Arena, ArenaConfig, CrashPlan};
use pmem_prims::Result;

fn main() -> Result<()> {
    let cfg = ArenaConfig::new(64 << 10);
    let mut arena = Arena::new(cfg.clone())?;
    let r = arena.allocate(256, 64)?;

    arena.start_trace();
    arena.store(&r, 0, b"persisted")?;
    arena.flush(&r, 0, 9)?;
    arena.fence();

    arena.tx_begin()?;
    arena.tx_snapshot(&r, 64, 16)?;
    arena.store(&r, 64, b"transactional!!!")?;
    arena.tx_commit()?;

    // Never flushed: gone after a crash.
    arena.store(&r, 128, b"volatile")?;
    println!("counters: {:?}", arena.stats());

    // Before the first store and right after its fence.
    for point in [0, 3] {
        let crashed = arena.crash(&CrashPlan::deterministic(point))?;
        println!(
            "crash at event {point}: {:?}",
            String::from_utf8_lossy(crashed.peek(r.offset as usize, 9))
        );
    }
    let trace = arena.stop_trace().expect("tracing was on");
    let dir = std::env::temp_dir();
    trace.write_csv(dir.join("arena_events.csv"))?;
    println!(
        "{} events, first lines:\n{}",
        trace.events.len(),
        trace
            .to_csv()
            .lines()
            .take(4)
            .collect::<Vec<_>>()
            .join("\n")
    );

    let img = dir.join("arena.img");
    arena.dump_durable(&img)?;
    let reloaded = Arena::load_image(cfg, &img)?;
    println!(
        "reloaded image: {:?} / {:?} / unflushed bytes {:?}",
        String::from_utf8_lossy(reloaded.peek(r.offset as usize, 9)),
        String::from_utf8_lossy(reloaded.peek(r.offset as usize + 64, 16)),
        reloaded.peek(r.offset as usize + 128, 8)
    );
    Ok(())
}
