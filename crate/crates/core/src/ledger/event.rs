//! Events: the attributed, emitter-signed occurrences recorded on the ledger.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest as _, Sha256};

use super::codec::{Canonical, CanonicalWriter};

pub type PrincipalId = String;

/// Scalar attribute value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Text(String),
    Int(i64),
    Bool(bool),
}

impl Value {
    pub fn text(s: impl Into<String>) -> Self {
        Value::Text(s.into())
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Text(s) => write!(f, "{s:?}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_string())
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

pub type Attributes = BTreeMap<String, Value>;

/// A 32-byte SHA-256 digest. Serialized as lowercase hex.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub const ZERO: Digest = Digest([0u8; 32]);

    pub fn sha256(bytes: &[u8]) -> Digest {
        Digest(Sha256::digest(bytes).into())
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Digest, hex::FromHexError> {
        let mut out = [0u8; 32];
        hex::decode_to_slice(s, &mut out)?;
        Ok(Digest(out))
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({}..)", &self.to_hex()[..12])
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Digest {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Digest {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Digest::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// SHA-256(secret ‖ message). Stands in for a real signature scheme.
pub fn keyed_digest(secret: &str, message: &[u8]) -> Digest {
    let mut h = Sha256::new();
    h.update(secret.as_bytes());
    h.update(message);
    Digest(h.finalize().into())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub event_id: String,
    pub event_type: String,
    pub attributes: Attributes,
    pub emitter: PrincipalId,
    pub logical_ts: u64,
    pub signature: Digest,
}

impl Event {
    /// Builds an event and signs it with `secret`.
    pub fn signed(
        event_id: impl Into<String>,
        event_type: impl Into<String>,
        attributes: Attributes,
        emitter: impl Into<PrincipalId>,
        logical_ts: u64,
        secret: &str,
    ) -> Event {
        let mut e = Event {
            event_id: event_id.into(),
            event_type: event_type.into(),
            attributes,
            emitter: emitter.into(),
            logical_ts,
            signature: Digest::ZERO,
        };
        e.signature = keyed_digest(secret, &e.signing_bytes());
        e
    }

    /// Canonical bytes of every field except the signature.
    pub fn signing_bytes(&self) -> Vec<u8> {
        let mut w = CanonicalWriter::default();
        self.write_unsigned(&mut w);
        w.into_bytes()
    }

    fn write_unsigned(&self, w: &mut CanonicalWriter) {
        w.put_str(&self.event_id);
        w.put_str(&self.event_type);
        w.put_attributes(&self.attributes);
        w.put_str(&self.emitter);
        w.put_u64(self.logical_ts);
    }

    pub fn verify_signature(&self, secret: &str) -> bool {
        keyed_digest(secret, &self.signing_bytes()) == self.signature
    }
}

impl Canonical for Event {
    fn write_canonical(&self, w: &mut CanonicalWriter) {
        self.write_unsigned(w);
        w.put_bytes(&self.signature.0);
    }
}

/// The approved principals of a permissioned network and their signing secrets.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Roster {
    secrets: BTreeMap<PrincipalId, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RosterEntry {
    id: PrincipalId,
    secret: String,
}

impl Roster {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, id: impl Into<PrincipalId>, secret: impl Into<String>) -> Self {
        self.insert(id, secret);
        self
    }

    pub fn insert(&mut self, id: impl Into<PrincipalId>, secret: impl Into<String>) {
        self.secrets.insert(id.into(), secret.into());
    }

    pub fn secret(&self, id: &str) -> Option<&str> {
        self.secrets.get(id).map(String::as_str)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.secrets.contains_key(id)
    }

    pub fn principals(&self) -> impl Iterator<Item = &PrincipalId> {
        self.secrets.keys()
    }

    pub fn len(&self) -> usize {
        self.secrets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.secrets.is_empty()
    }
}

impl Serialize for Roster {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let entries: Vec<RosterEntry> = self
            .secrets
            .iter()
            .map(|(id, secret)| RosterEntry { id: id.clone(), secret: secret.clone() })
            .collect();
        entries.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Roster {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let entries = Vec::<RosterEntry>::deserialize(d)?;
        let mut roster = Roster::new();
        for e in entries {
            if roster.contains(&e.id) {
                return Err(serde::de::Error::custom(format!("duplicate principal `{}`", e.id)));
            }
            roster.insert(e.id, e.secret);
        }
        Ok(roster)
    }
}
