use crate::error::Result;
use crate::pstore::{Arena, FaStrategy};

/// Ordered stores of one mutation, grouped into persistence phases.
///
/// Under `Individual` and `None` every phase is stored, flushed and fenced
/// before the next one starts, so data lines become durable before the
/// count / validity words that publish them. Under `Tx` all phases run inside
/// one undo-log transaction; if the caller already opened one, it is reused.
/// On a volatile arena the stores are applied without flushes or fences.
#[derive(Debug, Default)]
pub(crate) struct WriteSet {
    phases: Vec<Vec<(u64, Vec<u8>)>>,
}

impl WriteSet {
    pub fn new() -> Self {
        WriteSet {
            phases: vec![Vec::new()],
        }
    }

    pub fn put(&mut self, abs: u64, bytes: &[u8]) {
        if !bytes.is_empty() {
            self.phases.last_mut().unwrap().push((abs, bytes.to_vec()));
        }
    }

    pub fn put_u64(&mut self, abs: u64, v: u64) {
        self.put(abs, &v.to_le_bytes());
    }

    /// Starts a new phase; writes added afterwards persist strictly later.
    pub fn barrier(&mut self) {
        if !self.phases.last().unwrap().is_empty() {
            self.phases.push(Vec::new());
        }
    }

    pub fn into_writes(self) -> impl Iterator<Item = (u64, Vec<u8>)> {
        self.phases.into_iter().flatten()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.iter().all(Vec::is_empty)
    }

    /// Sorted, merged ranges touched by all phases.
    fn ranges(&self) -> Vec<(u64, u64)> {
        let mut r: Vec<(u64, u64)> = self
            .phases
            .iter()
            .flatten()
            .map(|(a, b)| (*a, *a + b.len() as u64))
            .collect();
        r.sort_unstable();
        let mut out: Vec<(u64, u64)> = Vec::with_capacity(r.len());
        for (s, e) in r {
            match out.last_mut() {
                Some(last) if s <= last.1 => last.1 = last.1.max(e),
                _ => out.push((s, e)),
            }
        }
        out
    }

    pub fn apply(self, arena: &mut Arena, fa: FaStrategy) -> Result<()> {
        if self.is_empty() {
            return Ok(());
        }
        if arena.is_volatile() {
            for (abs, bytes) in self.phases.iter().flatten() {
                arena.store_at(*abs, bytes)?;
            }
            return Ok(());
        }
        match fa {
            FaStrategy::Tx => {
                let own = !arena.in_tx();
                if own {
                    arena.tx_begin()?;
                }
                let res = (|| {
                    for (s, e) in self.ranges() {
                        arena.tx_snapshot_at(s, e - s)?;
                    }
                    for (abs, bytes) in self.phases.iter().flatten() {
                        arena.store_at(*abs, bytes)?;
                    }
                    Ok(())
                })();
                match res {
                    Ok(()) if own => arena.tx_commit(),
                    Ok(()) => Ok(()),
                    Err(e) => {
                        if own {
                            arena.tx_abort()?;
                        }
                        Err(e)
                    }
                }
            }
            FaStrategy::Individual | FaStrategy::None => {
                for phase in self.phases.iter().filter(|p| !p.is_empty()) {
                    for (abs, bytes) in phase {
                        arena.store_at(*abs, bytes)?;
                    }
                    for (abs, bytes) in phase {
                        arena.flush_at(*abs, bytes.len() as u64)?;
                    }
                    arena.fence();
                }
                Ok(())
            }
        }
    }
}
