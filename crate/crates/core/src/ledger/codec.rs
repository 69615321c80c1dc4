//! Canonical byte encoding for events and block headers.
//!
//! Layout rules:
//!
//! ```text
//! integer      8 bytes, big-endian
//! text/bytes   4-byte big-endian length, then the raw bytes
//! value        1 tag byte (0x01 text, 0x02 integer, 0x03 boolean), then payload
//! boolean      1 byte, 0x00 or 0x01
//! attributes   4-byte big-endian entry count, then (key, value) pairs in ascending key order
//! ```
//!
//! Every field is self-delimiting, so concatenating encodings stays unambiguous.

use super::event::{Attributes, Value};

pub(crate) const TAG_TEXT: u8 = 0x01;
pub(crate) const TAG_INT: u8 = 0x02;
pub(crate) const TAG_BOOL: u8 = 0x03;

/// Types with a single, deterministic byte encoding.
pub trait Canonical {
    fn write_canonical(&self, out: &mut CanonicalWriter);

    fn canonical_bytes(&self) -> Vec<u8> {
        let mut w = CanonicalWriter::default();
        self.write_canonical(&mut w);
        w.into_bytes()
    }
}

/// Encodes `x` with the canonical layout.
pub fn canonical_serialize<T: Canonical + ?Sized>(x: &T) -> Vec<u8> {
    x.canonical_bytes()
}

#[derive(Debug, Default)]
pub struct CanonicalWriter {
    buf: Vec<u8>,
}

impl CanonicalWriter {
    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }

    pub fn put_u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    pub fn put_i64(&mut self, v: i64) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    pub fn put_bytes(&mut self, bytes: &[u8]) {
        let len = u32::try_from(bytes.len()).expect("field longer than 4 GiB");
        self.buf.extend_from_slice(&len.to_be_bytes());
        self.buf.extend_from_slice(bytes);
    }

    pub fn put_str(&mut self, s: &str) {
        self.put_bytes(s.as_bytes());
    }

    pub fn put_value(&mut self, v: &Value) {
        match v {
            Value::Text(s) => {
                self.buf.push(TAG_TEXT);
                self.put_str(s);
            }
            Value::Int(i) => {
                self.buf.push(TAG_INT);
                self.put_i64(*i);
            }
            Value::Bool(b) => {
                self.buf.push(TAG_BOOL);
                self.buf.push(u8::from(*b));
            }
        }
    }

    pub fn put_attributes(&mut self, attrs: &Attributes) {
        let count = u32::try_from(attrs.len()).expect("too many attributes");
        self.buf.extend_from_slice(&count.to_be_bytes());
        // BTreeMap iteration is already ascending by key.
        for (k, v) in attrs {
            self.put_str(k);
            self.put_value(v);
        }
    }
}
