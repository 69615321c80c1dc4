//! Block validation, whole-chain verification and active-chain selection.

use std::cmp::Ordering;
use std::collections::HashSet;

use thiserror::Error;

use super::block::{events_digest, Block, BlockHeader, Chain, Target};
use super::event::{Digest, Roster};
use super::LedgerError;
use crate::validator::{admit, IntegrityIndex, IntegrityRuleSet};

/// Why a block was rejected. Checks run in declaration order; the first
/// failure wins.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RejectReason {
    #[error("BadGenesis")]
    BadGenesis,
    #[error("BadLink")]
    BadLink,
    #[error("AboveTarget")]
    AboveTarget,
    #[error("BadIndex")]
    BadIndex,
    #[error("BadEventsDigest")]
    BadEventsDigest,
    #[error("BadSignature({event_id})")]
    BadSignature { event_id: String },
    #[error("DuplicateEventId({0})")]
    DuplicateEventId(String),
    #[error("IntegrityViolation({event_id}: {detail})")]
    IntegrityViolation { event_id: String, detail: String },
}

impl RejectReason {
    pub fn name(&self) -> &'static str {
        match self {
            RejectReason::BadGenesis => "BadGenesis",
            RejectReason::BadLink => "BadLink",
            RejectReason::AboveTarget => "AboveTarget",
            RejectReason::BadIndex => "BadIndex",
            RejectReason::BadEventsDigest => "BadEventsDigest",
            RejectReason::BadSignature { .. } => "BadSignature",
            RejectReason::DuplicateEventId(_) => "DuplicateEventId",
            RejectReason::IntegrityViolation { .. } => "IntegrityViolation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("block {index} rejected: {reason}")]
pub struct BadBlock {
    pub index: usize,
    pub reason: RejectReason,
}

/// What a verifier knows beyond the chain itself. Absent parts are skipped:
/// without a roster signatures go unchecked, without a target the
/// proof-of-work bound does, and without rules so does admission.
#[derive(Debug, Clone, Default)]
pub struct ChainPolicy {
    pub target: Option<Target>,
    pub roster: Option<Roster>,
    pub integrity: Option<IntegrityRuleSet>,
}

impl ChainPolicy {
    /// Hash links, indices, digests and event-id uniqueness only.
    pub fn structural() -> Self {
        Self::default()
    }

    pub fn new(target: Target, roster: Roster) -> Self {
        ChainPolicy { target: Some(target), roster: Some(roster), integrity: None }
    }

    pub fn with_integrity(mut self, rules: IntegrityRuleSet) -> Self {
        self.integrity = Some(rules);
        self
    }
}

/// Running verification state at a chain tip.
#[derive(Debug, Clone)]
pub(crate) struct ChainCursor {
    tip_hash: Digest,
    tip_index: u64,
    ids: HashSet<String>,
    index: IntegrityIndex,
}

impl ChainCursor {
    pub(crate) fn at_genesis() -> Self {
        ChainCursor {
            tip_hash: BlockHeader::genesis().hash(),
            tip_index: 0,
            ids: HashSet::new(),
            index: IntegrityIndex::new(),
        }
    }

    /// Replays an already-trusted chain without re-checking it.
    pub(crate) fn replay(chain: &Chain, policy: &ChainPolicy) -> Self {
        let mut c = ChainCursor::at_genesis();
        for b in chain.blocks.iter().skip(1) {
            c.advance(b, policy);
        }
        c
    }

    pub(crate) fn index(&self) -> &IntegrityIndex {
        &self.index
    }

    pub(crate) fn contains_event(&self, id: &str) -> bool {
        self.ids.contains(id)
    }

    pub(crate) fn check(&self, b: &Block, policy: &ChainPolicy) -> Result<(), RejectReason> {
        let h = &b.header;
        if h.prev_hash != self.tip_hash {
            return Err(RejectReason::BadLink);
        }
        if let Some(t) = policy.target {
            if !t.is_met_by(&h.hash()) {
                return Err(RejectReason::AboveTarget);
            }
        }
        if h.index != self.tip_index + 1 {
            return Err(RejectReason::BadIndex);
        }
        if h.events_digest != events_digest(&b.events) {
            return Err(RejectReason::BadEventsDigest);
        }
        if let Some(roster) = &policy.roster {
            for e in &b.events {
                let ok = roster.secret(&e.emitter).is_some_and(|s| e.verify_signature(s));
                if !ok {
                    return Err(RejectReason::BadSignature { event_id: e.event_id.clone() });
                }
            }
        }
        let mut in_block = HashSet::new();
        for e in &b.events {
            if self.ids.contains(&e.event_id) || !in_block.insert(e.event_id.as_str()) {
                return Err(RejectReason::DuplicateEventId(e.event_id.clone()));
            }
        }
        if let Some(rules) = &policy.integrity {
            // Each event sees the prefix plus the earlier events of its own block.
            let mut index = self.index.clone();
            for e in &b.events {
                admit(e, &index, rules).map_err(|err| RejectReason::IntegrityViolation {
                    event_id: e.event_id.clone(),
                    detail: err.to_string(),
                })?;
                index.record(e, rules);
            }
        }
        Ok(())
    }

    pub(crate) fn advance(&mut self, b: &Block, policy: &ChainPolicy) {
        self.tip_hash = b.hash();
        self.tip_index = b.header.index;
        for e in &b.events {
            self.ids.insert(e.event_id.clone());
            if let Some(rules) = &policy.integrity {
                self.index.record(e, rules);
            }
        }
    }
}

/// Validates `b` as the next block after `chain`'s tip.
pub fn validate_block(chain: &Chain, b: &Block, policy: &ChainPolicy) -> Result<(), RejectReason> {
    ChainCursor::replay(chain, policy).check(b, policy)
}

/// Checks every block against its prefix; reports the lowest failing index.
pub fn verify_chain(chain: &Chain, policy: &ChainPolicy) -> Result<(), BadBlock> {
    match chain.blocks.first() {
        Some(g) if *g == Block::genesis() => {}
        _ => return Err(BadBlock { index: 0, reason: RejectReason::BadGenesis }),
    }
    let mut cursor = ChainCursor::at_genesis();
    for (i, b) in chain.blocks.iter().enumerate().skip(1) {
        cursor.check(b, policy).map_err(|reason| BadBlock { index: i, reason })?;
        cursor.advance(b, policy);
    }
    Ok(())
}

/// Fork-choice order: longer wins; equal lengths prefer the smaller tip digest.
pub fn chain_preference(a: &Chain, b: &Chain) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| b.tip_hash().cmp(&a.tip_hash()))
}

/// Picks the longest candidate, breaking ties by lexicographically smallest tip digest.
pub fn select_active_chain(candidates: &[Chain]) -> Result<&Chain, LedgerError> {
    candidates
        .iter()
        .max_by(|a, b| chain_preference(a, b))
        .ok_or(LedgerError::EmptyCandidateSet)
}
