//! Append-only, hash-chained, proof-of-work ledger and its network simulation.

mod block;
mod codec;
mod event;
mod network;
mod verify;

use thiserror::Error;

pub use block::{
    events_digest, hash_block_header, mine_block, Block, BlockHeader, Chain, Target, GENESIS_MINER,
};
pub use codec::{canonical_serialize, Canonical, CanonicalWriter};
pub use event::{keyed_digest, Attributes, Digest, Event, PrincipalId, Roster, Value};
pub use network::{
    run_network, sign_submissions, submission_event_id, NetworkConfig, NetworkResult, Submission,
};
pub use verify::{
    chain_preference, select_active_chain, validate_block, verify_chain, BadBlock, ChainPolicy,
    RejectReason,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("no nonce in the 64-bit range meets the target")]
    NonceExhausted,
    #[error("invalid target `{0}`")]
    BadTarget(String),
    #[error("no candidate chains")]
    EmptyCandidateSet,
    #[error("emitter `{0}` is not on the roster")]
    UnrosteredEmitter(String),
    #[error("network has no peers")]
    NoPeers,
    #[error("peer `{0}` listed twice")]
    DuplicatePeer(String),
    #[error("submission scheduled for round {round} but the run stops after {max_rounds} rounds")]
    SubmissionAfterLastRound { round: u64, max_rounds: u64 },
}

/// Position of an event in the ledger's total order.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize,
)]
pub struct Position {
    pub block_index: u64,
    pub offset_in_block: u64,
}

impl Position {
    pub fn new(block_index: u64, offset_in_block: u64) -> Self {
        Position { block_index, offset_in_block }
    }

    /// Start of a block, where height-based lapses take effect.
    pub fn block_start(block_index: u64) -> Self {
        Position { block_index, offset_in_block: 0 }
    }
}

impl std::fmt::Display for Position {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}.{}", self.block_index, self.offset_in_block)
    }
}

#[derive(Debug, Error)]
#[error("line {line}: {source}")]
pub struct ScenarioError {
    pub line: usize,
    #[source]
    pub source: serde_json::Error,
}

/// Parses a JSON Lines scenario; blank lines are skipped.
pub fn parse_scenario(text: &str) -> Result<Vec<Submission>, ScenarioError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|source| ScenarioError { line: i + 1, source }))
        .collect()
}
