use std::fs;
use std::io::Write;
use std::path::Path;

use super::{Arena, ArenaConfig};
use crate::error::Result;

/// One instrumentation event, with absolute arena offsets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Event {
    Store {
        offset: u64,
        data: Vec<u8>,
    },
    Flush {
        offset: u64,
        len: u64,
    },
    Fence,
    /// Uninstrumented fixture write (working and durable image at once).
    Poke {
        offset: u64,
        data: Vec<u8>,
    },
}

impl Event {
    pub fn kind(&self) -> &'static str {
        match self {
            Event::Store { .. } => "store",
            Event::Flush { .. } => "flush",
            Event::Fence => "fence",
            Event::Poke { .. } => "poke",
        }
    }

    pub fn offset(&self) -> u64 {
        match self {
            Event::Store { offset, .. }
            | Event::Flush { offset, .. }
            | Event::Poke { offset, .. } => *offset,
            Event::Fence => 0,
        }
    }

    pub fn len(&self) -> u64 {
        match self {
            Event::Store { data, .. } | Event::Poke { data, .. } => data.len() as u64,
            Event::Flush { len, .. } => *len,
            Event::Fence => 0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone)]
pub struct Trace {
    pub(crate) baseline: Box<Arena>,
    pub events: Vec<Event>,
}

impl Trace {
    pub fn baseline(&self) -> &Arena {
        &self.baseline
    }

    /// `event_index,kind,offset,length` with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("event_index,kind,offset,length\n");
        for (i, ev) in self.events.iter().enumerate() {
            out.push_str(&format!("{i},{},{},{}\n", ev.kind(), ev.offset(), ev.len()));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }
}

impl Arena {
    /// Dumps the durable image as raw bytes, no header.
    pub fn dump_durable(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, &self.durable)?;
        Ok(())
    }

    /// Loads a raw durable image and runs crash recovery on it.
    pub fn load_image(config: ArenaConfig, path: impl AsRef<Path>) -> Result<Arena> {
        let image = fs::read(path)?;
        Arena::recover_image(config, image)
    }
}
