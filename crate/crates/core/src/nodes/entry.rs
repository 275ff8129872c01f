use std::fmt;

use crate::pstore::PRef;

pub const KEY_BYTES: usize = 8;
pub const VALUE_BYTES: usize = 16;
pub const ENTRY_BYTES: usize = KEY_BYTES + VALUE_BYTES;

/// 16-byte record `<int32, int32, float64>`, stored little-endian.
///
/// Equality is bytewise so that values round-trip exactly through node
/// images (including NaN payloads). Inner tree nodes reuse the same slot to
/// hold a child reference.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Value([u8; VALUE_BYTES]);

impl Value {
    pub fn new(a: i32, b: i32, c: f64) -> Self {
        let mut out = [0u8; VALUE_BYTES];
        out[..4].copy_from_slice(&a.to_le_bytes());
        out[4..8].copy_from_slice(&b.to_le_bytes());
        out[8..].copy_from_slice(&c.to_le_bytes());
        Value(out)
    }

    /// Deterministic value derived from a key; handy for fixtures.
    pub fn for_key(key: u64) -> Self {
        Value::new(key as i32, (key >> 32) as i32, key as f64 * 0.5)
    }

    pub fn a(&self) -> i32 {
        i32::from_le_bytes(self.0[..4].try_into().unwrap())
    }

    pub fn b(&self) -> i32 {
        i32::from_le_bytes(self.0[4..8].try_into().unwrap())
    }

    pub fn c(&self) -> f64 {
        f64::from_le_bytes(self.0[8..].try_into().unwrap())
    }

    pub fn from_bytes(bytes: &[u8]) -> Self {
        Value(bytes[..VALUE_BYTES].try_into().unwrap())
    }

    pub fn as_bytes(&self) -> &[u8; VALUE_BYTES] {
        &self.0
    }

    pub fn from_child(child: PRef) -> Self {
        Value(child.to_bytes())
    }

    pub fn as_child(&self) -> PRef {
        PRef::from_bytes(&self.0)
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}, {}, {}>", self.a(), self.b(), self.c())
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.a(), self.b(), self.c())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Entry {
    pub key: u64,
    pub value: Value,
}

impl Entry {
    pub fn new(key: u64, value: Value) -> Self {
        Entry { key, value }
    }
}

/// 1-byte key fingerprint: top byte of a multiplicative hash.
#[inline]
pub fn fingerprint(key: u64) -> u8 {
    (key.wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 56) as u8
}
