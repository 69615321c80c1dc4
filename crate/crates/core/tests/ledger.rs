mod common;

use compacts::ledger::{
    canonical_serialize, events_digest, mine_block, run_network, verify_chain, Block, BlockHeader, Chain, Digest,
    Event, NetworkConfig, RejectReason, Target,
};
use compacts::pipeline::chain_policy;
use compacts::validator::IntegrityRuleSet;
use rand::Rng;

fn hospital_net(seed: u64) -> NetworkConfig {
    NetworkConfig { gossip_seed: seed, ..common::net("hospital") }
}

#[test]
fn genesis_matches_reference_encoding() {
    let g = BlockHeader::genesis();
    assert_eq!(hex::encode(canonical_serialize(&g)), common::golden("genesis_header.hex"));
    assert_eq!(g.hash().to_hex(), common::golden("genesis_hash.hex"));
    assert_eq!(events_digest(&[]).to_hex(), common::golden("empty_events_digest.hex"));
}

#[test]
fn least_nonce_under_2_pow_252() {
    let golden: serde_json::Value = serde_json::from_str(&common::read("golden/mined_2pow252.json")).unwrap();
    let e: Event = serde_json::from_value(golden["event"].clone()).unwrap();
    assert_eq!(hex::encode(canonical_serialize(&e)), common::golden("admit_event.hex"));
    assert!(e.verify_signature("hospital-secret"));

    let target = Target::pow2(252);
    let h = mine_block(std::slice::from_ref(&e), &BlockHeader::genesis(), target, "p1").unwrap();
    let expected: BlockHeader = serde_json::from_value(golden["header"].clone()).unwrap();
    assert_eq!(h, expected);
    assert_eq!(h.hash().to_hex(), golden["hash"].as_str().unwrap());
    for n in 0..h.nonce {
        assert!(!target.is_met_by(&BlockHeader { nonce: n, ..h.clone() }.hash()));
    }
}

#[test]
fn golden_chain_verifies_under_full_policy() {
    let chain = common::golden_chain();
    assert_eq!(chain.len(), 11);
    let mut net = common::net("hospital");
    net.target = Target::pow2(252);
    verify_chain(&chain, &chain_policy(&common::spec("hospital"), &net).unwrap()).unwrap();
    assert_eq!(chain.tip_hash().to_hex(), common::golden("chain10_tip.hex"));
}

#[test]
fn event_tampering_is_caught_at_or_before_its_block() {
    common::props::tampering_detected(&common::golden_chain(), &common::props::tamper_policy(), 300, 6).unwrap();
}

#[test]
fn header_tampering_is_caught_by_the_next_block() {
    let clean = common::golden_chain();
    let policy = common::props::tamper_policy();
    let mut r = common::random::rng(9);
    for i in 1..clean.len() {
        for _ in 0..10 {
            let mut chain = clean.clone();
            let h = &mut chain.blocks[i].header;
            match r.random_range(0..4) {
                0 => h.nonce ^= 1 << r.random_range(0..64),
                1 => h.prev_hash.0[r.random_range(0..32)] ^= 1 << r.random_range(0..8),
                2 => h.events_digest.0[r.random_range(0..32)] ^= 1 << r.random_range(0..8),
                _ => h.miner.push('x'),
            }
            let bad = verify_chain(&chain, &policy).expect_err("header tampering went unnoticed");
            assert!(bad.index <= i + 1);
        }
    }
}

#[test]
fn tampered_attribute_in_block_four() {
    let mut chain = common::golden_chain();
    chain.blocks[4].events[0].attributes.insert("nurse".into(), "mallory".into());
    let policy = common::props::tamper_policy();
    let bad = verify_chain(&chain, &policy).unwrap_err();
    assert_eq!(bad.index, 4);
    assert!(matches!(bad.reason, RejectReason::BadEventsDigest | RejectReason::BadSignature { .. }));
}

#[test]
fn genesis_only_chain_verifies() {
    verify_chain(&Chain::genesis(), &compacts::ledger::ChainPolicy::structural()).unwrap();
    let mut wrong = Chain::genesis();
    wrong.blocks[0].header.nonce = 1;
    assert_eq!(verify_chain(&wrong, &compacts::ledger::ChainPolicy::structural()).unwrap_err().index, 0);
}

#[test]
fn honest_peers_converge_over_twenty_seeds() {
    for seed in 0..20 {
        common::props::converges(seed).unwrap();
    }
}

#[test]
fn network_run_is_deterministic_and_frozen() {
    let spec = common::spec("hospital");
    let rules = IntegrityRuleSet::from_spec(&spec).unwrap();
    let scenario = common::scenario("network20");
    let a = run_network(&scenario, &hospital_net(42), Some(&rules)).unwrap();
    let b = run_network(&scenario, &hospital_net(42), Some(&rules)).unwrap();
    assert_eq!(a, b);
    assert!(a.converged);
    assert_eq!(a.active_chain().tip_hash().to_hex(), common::golden("network_seed42_tip.hex"));
}

#[test]
fn single_peer_keeps_every_event() {
    let mut net = common::net("hospital");
    net.peers = vec!["solo".into()];
    let res = run_network(&common::scenario("network20"), &net, None).unwrap();
    assert!(res.converged);
    assert_eq!(res.active_chain().events().count(), 20);
}

#[test]
fn empty_block_digest() {
    let b = Block::mine(vec![], &BlockHeader::genesis(), Target::MAX, "p1").unwrap();
    assert_eq!(b.header.nonce, 0);
    assert_eq!(b.header.events_digest, Digest::sha256(&[]));
}
