use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    read_log, Arena, ArenaConfig, Event, LineState, LINE_SIZE, LOG_ACTIVE, META_COUNT, META_STATE,
};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CrashMode {
    /// Every line not fenced at the crash point reverts to its durable content.
    DeterministicDrop,
    /// Each 8-byte word of an unfenced dirty line independently persists or
    /// reverts. Aligned words are never torn.
    Adversarial { seed: u64 },
}

/// Where and how to crash: after `crash_point` recorded events
/// (stores, flushes, fences) of the arena's trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CrashPlan {
    pub mode: CrashMode,
    pub crash_point: usize,
}

impl CrashPlan {
    pub fn deterministic(crash_point: usize) -> Self {
        CrashPlan {
            mode: CrashMode::DeterministicDrop,
            crash_point,
        }
    }

    pub fn adversarial(crash_point: usize, seed: u64) -> Self {
        CrashPlan {
            mode: CrashMode::Adversarial { seed },
            crash_point,
        }
    }
}

impl Arena {
    /// Simulates a power failure at `plan.crash_point` and returns the
    /// recovered arena. A crash point equal to the number of recorded events
    /// (zero when not tracing) crashes the current state.
    pub fn crash(&self, plan: &CrashPlan) -> Result<Arena> {
        let events = self.recorded_events();
        if plan.crash_point > events {
            return Err(Error::InvalidCrashPoint {
                point: plan.crash_point,
                events,
            });
        }
        let image = if plan.crash_point == events {
            self.crash_image(plan.mode)
        } else {
            let mut replay = self.replay()?;
            replay.advance_to(plan.crash_point);
            replay.image(plan.mode)
        };
        Arena::recover_image(self.config.clone(), image)
    }

    /// The bytes that would survive a crash right now.
    pub fn crash_image(&self, mode: CrashMode) -> Vec<u8> {
        if self.config.volatile {
            return vec![0u8; self.config.size];
        }
        let mut image = self.durable.clone();
        if let CrashMode::Adversarial { seed } = mode {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for (l, state) in self.lines.iter().enumerate() {
                if *state == LineState::Clean {
                    continue;
                }
                for w in 0..LINE_SIZE / 8 {
                    if rng.gen_bool(0.5) {
                        let s = l * LINE_SIZE + w * 8;
                        image[s..s + 8].copy_from_slice(&self.data[s..s + 8]);
                    }
                }
            }
        }
        image
    }

    /// Rebuilds an arena from a crash image, rolling back an uncommitted
    /// transaction if the log is still marked active.
    pub fn recover_image(config: ArenaConfig, mut image: Vec<u8>) -> Result<Arena> {
        let heap_end = config
            .size
            .checked_sub(64 + config.log_capacity)
            .ok_or_else(|| Error::InvalidArgument("arena too small".into()))?;
        if image.len() != config.size {
            return Err(Error::InvalidArgument(format!(
                "image of {} bytes does not match arena size {}",
                image.len(),
                config.size
            )));
        }
        let word = |img: &[u8], at: usize| u64::from_le_bytes(img[at..at + 8].try_into().unwrap());
        if word(&image, heap_end + META_STATE) == LOG_ACTIVE {
            let count = word(&image, heap_end + META_COUNT);
            let entries = read_log(&image, heap_end, count)?;
            for (abs, pre) in entries.iter().rev() {
                let a = *abs as usize;
                image[a..a + pre.len()].copy_from_slice(pre);
            }
            image[heap_end + META_STATE..heap_end + META_STATE + 16].fill(0);
        }
        Arena::from_image(config, Some(image))
    }

    /// Replays the recorded trace from its baseline.
    pub fn replay(&self) -> Result<Replay<'_>> {
        let trace = self
            .trace
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("arena is not tracing".into()))?;
        Ok(Replay {
            arena: (*trace.baseline).clone(),
            events: &trace.events,
            pos: 0,
        })
    }
}

/// Incremental re-execution of a trace; yields crash images at every event
/// boundary in O(1) amortized replay work per step.
pub struct Replay<'a> {
    arena: Arena,
    events: &'a [Event],
    pos: usize,
}

impl Replay<'_> {
    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Applies the next event. Returns false at the end of the trace.
    pub fn advance(&mut self) -> bool {
        match self.events.get(self.pos) {
            Some(ev) => {
                self.arena.apply_event(ev);
                self.pos += 1;
                true
            }
            None => false,
        }
    }

    pub fn advance_to(&mut self, point: usize) {
        while self.pos < point && self.advance() {}
    }

    /// State the program observed at this point (all stores visible).
    pub fn working_image(&self) -> &[u8] {
        self.arena.data()
    }

    pub fn durable_image(&self) -> &[u8] {
        self.arena.durable_image()
    }

    pub fn image(&self, mode: CrashMode) -> Vec<u8> {
        self.arena.crash_image(mode)
    }

    pub fn crash(&self, mode: CrashMode) -> Result<Arena> {
        Arena::recover_image(self.arena.config.clone(), self.image(mode))
    }
}
