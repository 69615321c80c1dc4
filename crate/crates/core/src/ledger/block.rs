//! Blocks, headers, proof-of-work targets and chains.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::codec::{Canonical, CanonicalWriter};
use super::event::{Digest, Event, PrincipalId};
use super::LedgerError;

pub const GENESIS_MINER: &str = "genesis";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockHeader {
    pub index: u64,
    pub prev_hash: Digest,
    pub events_digest: Digest,
    pub miner: PrincipalId,
    pub nonce: u64,
}

impl Canonical for BlockHeader {
    fn write_canonical(&self, w: &mut CanonicalWriter) {
        w.put_u64(self.index);
        w.put_bytes(&self.prev_hash.0);
        w.put_bytes(&self.events_digest.0);
        w.put_str(&self.miner);
        w.put_u64(self.nonce);
    }
}

impl BlockHeader {
    /// The fixed genesis header shared by every chain.
    pub fn genesis() -> BlockHeader {
        BlockHeader {
            index: 0,
            prev_hash: Digest::ZERO,
            events_digest: events_digest(&[]),
            miner: GENESIS_MINER.to_string(),
            nonce: 0,
        }
    }

    pub fn hash(&self) -> Digest {
        hash_block_header(self)
    }
}

/// SHA-256 of the header's canonical encoding.
pub fn hash_block_header(h: &BlockHeader) -> Digest {
    Digest::sha256(&h.canonical_bytes())
}

/// SHA-256 over the concatenated canonical encodings of `events`, in order.
pub fn events_digest(events: &[Event]) -> Digest {
    let mut w = CanonicalWriter::default();
    for e in events {
        e.write_canonical(&mut w);
    }
    Digest::sha256(&w.into_bytes())
}

/// A 256-bit proof-of-work bound; a header qualifies when its hash is
/// numerically below it (big-endian comparison).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Target(pub [u8; 32]);

impl Target {
    pub const MAX: Target = Target([0xff; 32]);

    /// `2^bits`, for `bits < 256`.
    pub fn pow2(bits: u32) -> Target {
        assert!(bits < 256, "2^{bits} does not fit in 256 bits");
        let mut out = [0u8; 32];
        let byte = 31 - (bits / 8) as usize;
        out[byte] = 1 << (bits % 8);
        Target(out)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|b| *b == 0)
    }

    pub fn is_met_by(&self, hash: &Digest) -> bool {
        hash.0 < self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    /// Parses up to 64 hex digits (optional `0x` prefix), left-padded with zeros.
    pub fn from_hex(s: &str) -> Result<Target, LedgerError> {
        let digits = s.strip_prefix("0x").unwrap_or(s);
        if digits.is_empty() || digits.len() > 64 {
            return Err(LedgerError::BadTarget(s.to_string()));
        }
        let padded = format!("{digits:0>64}");
        let mut out = [0u8; 32];
        hex::decode_to_slice(&padded, &mut out).map_err(|_| LedgerError::BadTarget(s.to_string()))?;
        Ok(Target(out))
    }
}

impl fmt::Debug for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Target({})", self.to_hex())
    }
}

impl Serialize for Target {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Target {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Target::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// Searches nonces upward from zero until the header hash falls below `target`.
pub fn mine_block(
    events: &[Event],
    prev: &BlockHeader,
    target: Target,
    miner: &str,
) -> Result<BlockHeader, LedgerError> {
    if target.is_zero() {
        return Err(LedgerError::BadTarget("0".into()));
    }
    let mut header = BlockHeader {
        index: prev.index + 1,
        prev_hash: prev.hash(),
        events_digest: events_digest(events),
        miner: miner.to_string(),
        nonce: 0,
    };
    // The nonce is the trailing 8 bytes of the encoding; rewrite only those.
    let mut bytes = header.canonical_bytes();
    let tail = bytes.len() - 8;
    let mut nonce: u64 = 0;
    loop {
        bytes[tail..].copy_from_slice(&nonce.to_be_bytes());
        if target.is_met_by(&Digest::sha256(&bytes)) {
            header.nonce = nonce;
            return Ok(header);
        }
        nonce = nonce.checked_add(1).ok_or(LedgerError::NonceExhausted)?;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub header: BlockHeader,
    pub events: Vec<Event>,
}

impl Block {
    pub fn genesis() -> Block {
        Block { header: BlockHeader::genesis(), events: Vec::new() }
    }

    pub fn hash(&self) -> Digest {
        self.header.hash()
    }

    /// Mines a block on top of `prev` carrying `events`.
    pub fn mine(
        events: Vec<Event>,
        prev: &BlockHeader,
        target: Target,
        miner: &str,
    ) -> Result<Block, LedgerError> {
        let header = mine_block(&events, prev, target, miner)?;
        Ok(Block { header, events })
    }
}

/// A sequence of hash-linked blocks starting at genesis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chain {
    pub blocks: Vec<Block>,
}

impl Default for Chain {
    fn default() -> Self {
        Chain::genesis()
    }
}

impl Chain {
    pub fn genesis() -> Chain {
        Chain { blocks: vec![Block::genesis()] }
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn tip(&self) -> &Block {
        self.blocks.last().expect("chain has no blocks")
    }

    pub fn tip_hash(&self) -> Digest {
        self.tip().hash()
    }

    pub fn push(&mut self, block: Block) {
        self.blocks.push(block);
    }

    /// Mines `events` onto the tip and appends the block.
    pub fn mine_and_push(
        &mut self,
        events: Vec<Event>,
        target: Target,
        miner: &str,
    ) -> Result<&Block, LedgerError> {
        let block = Block::mine(events, &self.tip().header, target, miner)?;
        self.blocks.push(block);
        Ok(self.tip())
    }

    pub fn events(&self) -> impl Iterator<Item = &Event> {
        self.blocks.iter().flat_map(|b| b.events.iter())
    }

    /// The first `n` blocks as a chain of their own.
    pub fn prefix(&self, n: usize) -> Chain {
        Chain { blocks: self.blocks[..n.min(self.blocks.len())].to_vec() }
    }
}
