use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::pstore::{CrashPlan, Event, LineState, Trace};

const LINE: usize = 64;

/// Enumeration switches to seeded sampling above this many events.
pub const EXHAUSTIVE_LIMIT: usize = 10_000;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Line {
    Dirty,
    Flushed,
}

/// Independent re-execution of an event trace that tracks, per line, whether
/// it is dirty or flushed-but-unfenced, and what the media holds.
#[derive(Clone, Debug)]
pub struct CrashOracle {
    working: Vec<u8>,
    media: Vec<u8>,
    unfenced: BTreeMap<usize, Line>,
}

impl CrashOracle {
    pub fn from_trace(trace: &Trace) -> Self {
        let base = trace.baseline();
        let lines = base.size() / LINE;
        let unfenced = (0..lines)
            .filter_map(|l| match base.line_state(l) {
                LineState::Clean => None,
                LineState::Dirty => Some((l, Line::Dirty)),
                LineState::Pending => Some((l, Line::Flushed)),
            })
            .collect();
        CrashOracle {
            working: base.data().to_vec(),
            media: base.durable_image().to_vec(),
            unfenced,
        }
    }

    pub fn step(&mut self, ev: &Event) {
        match ev {
            Event::Store { offset, data } => {
                let o = *offset as usize;
                self.working[o..o + data.len()].copy_from_slice(data);
                if !data.is_empty() {
                    for l in o / LINE..=(o + data.len() - 1) / LINE {
                        self.unfenced.insert(l, Line::Dirty);
                    }
                }
            }
            Event::Flush { offset, len } => {
                let o = *offset as usize;
                let n = *len as usize;
                if n > 0 {
                    for l in o / LINE..=(o + n - 1) / LINE {
                        if let Some(s) = self.unfenced.get_mut(&l) {
                            *s = Line::Flushed;
                        }
                    }
                }
            }
            Event::Fence => {
                let done: Vec<usize> = self
                    .unfenced
                    .iter()
                    .filter(|(_, s)| **s == Line::Flushed)
                    .map(|(l, _)| *l)
                    .collect();
                for l in done {
                    let s = l * LINE;
                    self.media[s..s + LINE].copy_from_slice(&self.working[s..s + LINE]);
                    self.unfenced.remove(&l);
                }
            }
            Event::Poke { offset, data } => {
                let o = *offset as usize;
                self.working[o..o + data.len()].copy_from_slice(data);
                self.media[o..o + data.len()].copy_from_slice(data);
            }
        }
    }

    /// Expected image for a deterministic-drop crash at the current point.
    pub fn deterministic_image(&self) -> Vec<u8> {
        self.media.clone()
    }

    pub fn working_image(&self) -> &[u8] {
        &self.working
    }

    pub fn unfenced_lines(&self) -> impl Iterator<Item = usize> + '_ {
        self.unfenced.keys().copied()
    }

    /// Expected image after replaying `events[..point]` on top of the trace
    /// baseline.
    pub fn image_at(trace: &Trace, point: usize) -> Vec<u8> {
        let mut o = CrashOracle::from_trace(trace);
        for ev in &trace.events[..point] {
            o.step(ev);
        }
        o.deterministic_image()
    }

    /// Offsets of 8-byte words in `image` that are neither the old (`media`)
    /// nor the new (`working`) value.
    pub fn torn_words(&self, image: &[u8]) -> Vec<usize> {
        (0..image.len() / 8)
            .map(|w| w * 8)
            .filter(|&s| {
                let got = &image[s..s + 8];
                got != &self.media[s..s + 8] && got != &self.working[s..s + 8]
            })
            .collect()
    }
}

/// One deterministic-drop plan per event boundary (`n + 1` plans for `n`
/// events) when `n <= EXHAUSTIVE_LIMIT`; otherwise a seeded sample of
/// `EXHAUSTIVE_LIMIT` boundaries that always includes both ends.
pub fn enumerate_crash_points(events: usize, seed: u64) -> Vec<CrashPlan> {
    if events <= EXHAUSTIVE_LIMIT {
        return (0..=events).map(CrashPlan::deterministic).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<usize> = (0..EXHAUSTIVE_LIMIT - 2)
        .map(|_| rng.gen_range(1..events))
        .collect();
    points.push(0);
    points.push(events);
    points.sort_unstable();
    points.dedup();
    points.into_iter().map(CrashPlan::deterministic).collect()
}
