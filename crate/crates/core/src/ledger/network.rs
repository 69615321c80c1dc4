//! Round-based simulation of a permissioned peer network.
//!
//! Every round, client submissions for that round reach their entry peer.
//! Peers then run in id order: each drains its inbox in an order drawn from
//! the seeded generator, validates and forwards what is new, and mines at
//! most one block from its pending events. Messages sent in a round are
//! delivered at the start of the next one. The run stops after `max_rounds`
//! or as soon as a round sends nothing and no submissions remain.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::block::{Block, Chain, Target};
use super::event::{Attributes, Digest, Event, PrincipalId, Roster};
use super::verify::{chain_preference, select_active_chain, ChainCursor, ChainPolicy};
use super::LedgerError;
use crate::validator::{admit, validate_event_schema, IntegrityRuleSet};

/// One line of a scenario file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Submission {
    pub round: u64,
    pub event_type: String,
    #[serde(default)]
    pub attributes: Attributes,
    pub emitter: PrincipalId,
    #[serde(default)]
    pub logical_ts: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub principals: Roster,
    pub peers: Vec<String>,
    pub target: Target,
    pub gossip_seed: u64,
    pub max_rounds: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkResult {
    /// Final active chain of every peer, keyed by peer id.
    pub chains: BTreeMap<String, Chain>,
    pub converged: bool,
    pub rounds_used: u64,
}

impl NetworkResult {
    /// The preferred chain across all peers.
    pub fn active_chain(&self) -> &Chain {
        let all: Vec<Chain> = self.chains.values().cloned().collect();
        let best = select_active_chain(&all).expect("at least one peer").tip_hash();
        self.chains.values().find(|c| c.tip_hash() == best).expect("chain present")
    }
}

/// Event id assigned to the `index`-th submission of a scenario.
pub fn submission_event_id(index: usize) -> String {
    format!("e{index}")
}

/// Signs every submission with its emitter's secret.
pub fn sign_submissions(scenario: &[Submission], roster: &Roster) -> Result<Vec<Event>, LedgerError> {
    scenario
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let secret = roster
                .secret(&s.emitter)
                .ok_or_else(|| LedgerError::UnrosteredEmitter(s.emitter.clone()))?;
            Ok(Event::signed(
                submission_event_id(i),
                s.event_type.clone(),
                s.attributes.clone(),
                s.emitter.clone(),
                s.logical_ts,
                secret,
            ))
        })
        .collect()
}

#[derive(Debug, Clone)]
enum Message {
    Event(Event),
    Block(Block),
}

struct Peer {
    id: String,
    blocks: HashMap<Digest, Block>,
    active: Chain,
    cursor: ChainCursor,
    pool: Vec<Event>,
    pool_ids: HashSet<String>,
    orphans: Vec<Block>,
}

impl Peer {
    fn new(id: String) -> Self {
        let genesis = Block::genesis();
        let mut blocks = HashMap::new();
        blocks.insert(genesis.hash(), genesis);
        Peer {
            id,
            blocks,
            active: Chain::genesis(),
            cursor: ChainCursor::at_genesis(),
            pool: Vec::new(),
            pool_ids: HashSet::new(),
            orphans: Vec::new(),
        }
    }

    fn branch_to(&self, tip: Digest) -> Chain {
        let mut blocks = Vec::new();
        let mut cur = tip;
        loop {
            let b = &self.blocks[&cur];
            blocks.push(b.clone());
            if b.header.index == 0 {
                break;
            }
            cur = b.header.prev_hash;
        }
        blocks.reverse();
        Chain { blocks }
    }

    fn receive_event(&mut self, e: Event, policy: &ChainPolicy) -> Option<Message> {
        if self.pool_ids.contains(&e.event_id) {
            return None;
        }
        let signed = policy
            .roster
            .as_ref()
            .is_none_or(|r| r.secret(&e.emitter).is_some_and(|s| e.verify_signature(s)));
        let schema_ok = policy.integrity.as_ref().is_none_or(|rules| validate_event_schema(&e, rules).is_ok());
        if !signed || !schema_ok {
            return None;
        }
        self.pool_ids.insert(e.event_id.clone());
        self.pool.push(e.clone());
        Some(Message::Event(e))
    }

    /// Accepts `b` (and any orphans it unblocks); returns blocks to forward.
    fn receive_block(&mut self, b: Block, policy: &ChainPolicy) -> Vec<Message> {
        let mut out = Vec::new();
        let mut queue = vec![b];
        while let Some(b) = queue.pop() {
            let hash = b.hash();
            if self.blocks.contains_key(&hash) {
                continue;
            }
            if !self.blocks.contains_key(&b.header.prev_hash) {
                if !self.orphans.iter().any(|o| o.hash() == hash) {
                    self.orphans.push(b);
                }
                continue;
            }
            let mut branch = self.branch_to(b.header.prev_hash);
            if super::verify::validate_block(&branch, &b, policy).is_err() {
                continue;
            }
            self.blocks.insert(hash, b.clone());
            branch.push(b.clone());
            self.adopt_if_preferred(branch, policy);
            out.push(Message::Block(b));
            let (ready, waiting): (Vec<Block>, Vec<Block>) =
                std::mem::take(&mut self.orphans).into_iter().partition(|o| o.header.prev_hash == hash);
            self.orphans = waiting;
            queue.extend(ready);
        }
        out
    }

    fn adopt_if_preferred(&mut self, candidate: Chain, policy: &ChainPolicy) {
        if chain_preference(&candidate, &self.active).is_gt() {
            self.cursor = ChainCursor::replay(&candidate, policy);
            self.active = candidate;
        }
    }

    /// Mines one block from admissible pending events, if there are any.
    fn mine(&mut self, policy: &ChainPolicy, target: Target) -> Result<Option<Block>, LedgerError> {
        let mut index = self.cursor.index().clone();
        let mut picked = Vec::new();
        for e in &self.pool {
            if self.cursor.contains_event(&e.event_id) {
                continue;
            }
            if let Some(rules) = &policy.integrity {
                if admit(e, &index, rules).is_err() {
                    continue;
                }
                index.record(e, rules);
            }
            picked.push(e.clone());
        }
        if picked.is_empty() {
            return Ok(None);
        }
        let block = Block::mine(picked, &self.active.tip().header, target, &self.id)?;
        self.blocks.insert(block.hash(), block.clone());
        let mut next = self.active.clone();
        next.push(block.clone());
        self.cursor.advance(&block, policy);
        self.active = next;
        Ok(Some(block))
    }
}

/// Runs the gossip simulation to completion. Fully deterministic in its inputs.
pub fn run_network(
    scenario: &[Submission],
    config: &NetworkConfig,
    rules: Option<&IntegrityRuleSet>,
) -> Result<NetworkResult, LedgerError> {
    let events = sign_submissions(scenario, &config.principals)?;
    let mut peer_ids = config.peers.clone();
    peer_ids.sort();
    if peer_ids.is_empty() {
        return Err(LedgerError::NoPeers);
    }
    if let Some(w) = peer_ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(LedgerError::DuplicatePeer(w[0].clone()));
    }
    if let Some(s) = scenario.iter().find(|s| s.round >= config.max_rounds) {
        return Err(LedgerError::SubmissionAfterLastRound { round: s.round, max_rounds: config.max_rounds });
    }
    let policy = ChainPolicy {
        target: Some(config.target),
        roster: Some(config.principals.clone()),
        integrity: rules.cloned(),
    };
    let n = peer_ids.len();
    let mut peers: Vec<Peer> = peer_ids.iter().cloned().map(Peer::new).collect();
    let mut inboxes: Vec<Vec<Message>> = vec![Vec::new(); n];
    let mut rng = ChaCha8Rng::seed_from_u64(config.gossip_seed);
    let last_round = scenario.iter().map(|s| s.round).max();
    let mut rounds_used = 0;

    for round in 0..config.max_rounds {
        rounds_used = round + 1;
        for (i, (s, e)) in scenario.iter().zip(&events).enumerate() {
            if s.round == round {
                inboxes[i % n].push(Message::Event(e.clone()));
            }
        }
        let mut next: Vec<Vec<Message>> = vec![Vec::new(); n];
        let mut sent = false;
        for p in 0..n {
            let mut inbox = std::mem::take(&mut inboxes[p]);
            inbox.shuffle(&mut rng);
            let mut outgoing = Vec::new();
            for msg in inbox {
                match msg {
                    Message::Event(e) => outgoing.extend(peers[p].receive_event(e, &policy)),
                    Message::Block(b) => outgoing.extend(peers[p].receive_block(b, &policy)),
                }
            }
            if let Some(b) = peers[p].mine(&policy, config.target)? {
                outgoing.push(Message::Block(b));
            }
            for (q, inbox) in next.iter_mut().enumerate() {
                if q != p {
                    inbox.extend(outgoing.iter().cloned());
                }
            }
            sent |= !outgoing.is_empty() && n > 1;
        }
        inboxes = next;
        let submissions_left = last_round.is_some_and(|r| r > round);
        if !sent && !submissions_left {
            break;
        }
    }

    let chains: BTreeMap<String, Chain> = peers.into_iter().map(|p| (p.id, p.active)).collect();
    let first_tip = chains.values().next().map(Chain::tip_hash);
    let converged = chains.values().all(|c| Some(c.tip_hash()) == first_tip);
    Ok(NetworkResult { chains, converged, rounds_used })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::{verify_chain, Value};

    fn config(peers: &[&str], seed: u64) -> NetworkConfig {
        NetworkConfig {
            principals: Roster::new().with("alice", "a").with("bob", "b"),
            peers: peers.iter().map(|s| s.to_string()).collect(),
            target: Target::pow2(252),
            gossip_seed: seed,
            max_rounds: 40,
        }
    }

    fn scenario(n: u64) -> Vec<Submission> {
        (0..n)
            .map(|i| {
                let mut attributes = Attributes::new();
                attributes.insert("n".into(), Value::Int(i as i64));
                Submission {
                    round: i / 2,
                    event_type: "Tick".into(),
                    attributes,
                    emitter: if i % 2 == 0 { "alice" } else { "bob" }.into(),
                    logical_ts: i,
                }
            })
            .collect()
    }

    #[test]
    fn single_peer_includes_everything() {
        let r = run_network(&scenario(6), &config(&["p0"], 1), None).unwrap();
        assert!(r.converged);
        let chain = &r.chains["p0"];
        assert_eq!(chain.events().count(), 6);
        assert_eq!(verify_chain(chain, &ChainPolicy::new(Target::pow2(252), config(&["p0"], 1).principals)), Ok(()));
    }

    #[test]
    fn honest_peers_converge() {
        let cfg = config(&["p0", "p1", "p2"], 7);
        let r = run_network(&scenario(8), &cfg, None).unwrap();
        assert!(r.converged);
        assert_eq!(r.active_chain().events().count(), 8);
    }

    #[test]
    fn deterministic() {
        let cfg = config(&["p0", "p1", "p2"], 3);
        assert_eq!(run_network(&scenario(8), &cfg, None), run_network(&scenario(8), &cfg, None));
    }

    #[test]
    fn unrostered_emitter_rejected() {
        let mut s = scenario(2);
        s[1].emitter = "mallory".into();
        assert!(matches!(
            run_network(&s, &config(&["p0"], 0), None),
            Err(LedgerError::UnrosteredEmitter(e)) if e == "mallory"
        ));
    }

    #[test]
    fn empty_scenario_stays_at_genesis() {
        let r = run_network(&[], &config(&["p0", "p1"], 0), None).unwrap();
        assert!(r.converged);
        assert_eq!(r.active_chain(), &Chain::genesis());
        assert_eq!(r.rounds_used, 1);
    }
}
