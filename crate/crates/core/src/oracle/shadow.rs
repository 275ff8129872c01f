use crate::error::{Error, Result};

/// Byte images captured right before and after one operation.
#[derive(Clone, Debug)]
pub struct ShadowDiff {
    pub before: Vec<u8>,
    pub after: Vec<u8>,
}

impl ShadowDiff {
    pub fn new(before: Vec<u8>, after: Vec<u8>) -> Self {
        ShadowDiff { before, after }
    }

    /// Number of differing bytes. Never larger than an honest modified-bytes
    /// counter for the same operation.
    pub fn diff_bytes(&self) -> Result<u64> {
        if self.before.len() != self.after.len() {
            return Err(Error::InvalidArgument(format!(
                "shadow images differ in length: {} vs {}",
                self.before.len(),
                self.after.len()
            )));
        }
        Ok(self
            .before
            .iter()
            .zip(&self.after)
            .filter(|(a, b)| a != b)
            .count() as u64)
    }

    /// Offsets of differing bytes, ascending.
    pub fn changed_offsets(&self) -> Vec<usize> {
        self.before
            .iter()
            .zip(&self.after)
            .enumerate()
            .filter_map(|(i, (a, b))| (a != b).then_some(i))
            .collect()
    }
}
