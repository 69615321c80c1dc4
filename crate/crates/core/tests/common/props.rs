//! Property checks shared by the module tests and the acceptance target.
//! Each returns a description of the first counterexample.

use compacts::eval::{apply_chain, evaluate, CompiledSpec};
use compacts::lang::parse_compact;
use compacts::ledger::{run_network, verify_chain, Chain, ChainPolicy, Event, NetworkConfig, Target, Value};
use compacts::pipeline::chain_policy;
use compacts::validator::{check_integrity, Adornment, IntegrityError, IntegrityRuleSet};
use rand::Rng;

use super::random::{self, Scenario};

pub fn compiled(src: &str) -> CompiledSpec {
    let spec = parse_compact(src).unwrap_or_else(|e| panic!("{e}\n{src}"));
    CompiledSpec::new(&spec).unwrap_or_else(|e| panic!("{e:?}\n{src}"))
}

pub fn replay_equivalent(s: &Scenario) -> Result<(), String> {
    let spec = compiled(&s.spec_src);
    let batch = evaluate(&s.chain, &spec).map_err(|e| e.to_string())?;
    let inc = apply_chain(&s.chain, &spec).map_err(|e| e.to_string())?;
    if inc != batch {
        return Err(format!("incremental and batch differ for spec:\n{}", s.spec_src));
    }
    Ok(())
}

pub fn terminal_stable(s: &Scenario, seed: u64) -> Result<(), String> {
    let spec = compiled(&s.spec_src);
    let before = evaluate(&s.chain, &spec).map_err(|e| e.to_string())?;
    let mut r = random::rng(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut longer = s.chain.clone();
    random::extend_chain(&mut r, &mut longer, 20, s.chain.events().count());
    let after = evaluate(&longer, &spec).map_err(|e| e.to_string())?;
    for (k, i) in &before.instances {
        if i.state.is_terminal() && after.instances.get(k) != Some(i) {
            return Err(format!("{} {:?} changed after extension; spec:\n{}", k.norm_id, k.bindings, s.spec_src));
        }
    }
    Ok(())
}

fn binds(view: &[Event], rules: &IntegrityRuleSet, name: &str, value: &Value) -> bool {
    view.iter().any(|prior| {
        rules.schema(&prior.event_type).is_some_and(|s| {
            s.param(name).is_some_and(|p| p.adornment != Adornment::In) && prior.attributes.get(name) == Some(value)
        })
    })
}

/// Draws random prefixes and candidate events until `wanted` rejections
/// have each been re-checked against a random extension of their prefix.
/// Key conflicts must persist; an unbound in-parameter must persist unless
/// the extension binds exactly that value.
pub fn rejections_persist(rules: &IntegrityRuleSet, wanted: usize, seed: u64) -> Result<usize, String> {
    let mut r = random::rng(seed);
    let mut rejected = 0;
    let mut trial = 0;
    while rejected < wanted {
        trial += 1;
        let base = trial * 100;
        let prefix: Vec<Event> = (0..r.random_range(0..12)).map(|i| random::hospital_event(&mut r, base + i)).collect();
        let e = random::hospital_event(&mut r, base + 50);
        let Err(before) = check_integrity(&e, &prefix, rules) else { continue };
        rejected += 1;
        let mut extended = prefix.clone();
        extended.extend((0..r.random_range(1..10)).map(|i| random::hospital_event(&mut r, base + 60 + i)));
        let after = check_integrity(&e, &extended, rules).err().unwrap_or_default();
        for err in &before {
            let healed = !after.contains(err);
            let allowed = match err {
                IntegrityError::KeyConflict { .. } => false,
                IntegrityError::UnboundInParameter { name, value } => binds(&extended[prefix.len()..], rules, name, value),
            };
            if healed != allowed {
                return Err(format!("trial {trial}: `{err}` healed={healed}, expected {allowed}"));
            }
        }
    }
    Ok(trial)
}

/// Mutates `n` single event bytes of `clean`, one copy each, and checks
/// every mutation is flagged at or before the block it touched.
pub fn tampering_detected(clean: &Chain, policy: &ChainPolicy, n: usize, seed: u64) -> Result<(), String> {
    let mut r = random::rng(seed);
    for i in 0..n {
        let mut chain = clean.clone();
        let at = super::tamper::mutate_event_byte(&mut chain, &mut r);
        match verify_chain(&chain, policy) {
            Ok(()) => return Err(format!("mutation {i} in block {at} went unnoticed")),
            Err(bad) if bad.index > at => {
                return Err(format!("mutation {i} in block {at} flagged late at {}", bad.index))
            }
            Err(_) => {}
        }
    }
    Ok(())
}

pub fn tamper_policy() -> ChainPolicy {
    ChainPolicy::new(Target::pow2(252), super::net("hospital").principals)
}

/// Runs the 20-event hospital scenario under `seed` and checks that all
/// peers end on one identical, fully verified chain carrying every event.
pub fn converges(seed: u64) -> Result<(), String> {
    let spec = super::spec("hospital");
    let rules = IntegrityRuleSet::from_spec(&spec).map_err(|e| e.to_string())?;
    let scenario = super::scenario("network20");
    let net = NetworkConfig { gossip_seed: seed, ..super::net("hospital") };
    let policy = chain_policy(&spec, &net).map_err(|e| e.to_string())?;
    let res = run_network(&scenario, &net, Some(&rules)).map_err(|e| e.to_string())?;
    if !res.converged {
        return Err(format!("seed {seed}: peers did not converge in {} rounds", res.rounds_used));
    }
    let chains: Vec<&Chain> = res.chains.values().collect();
    if chains.len() != net.peers.len() || chains.windows(2).any(|w| w[0] != w[1]) {
        return Err(format!("seed {seed}: peer chains differ"));
    }
    for c in chains {
        verify_chain(c, &policy).map_err(|b| format!("seed {seed}: {b}"))?;
        if c.events().count() != scenario.len() {
            return Err(format!("seed {seed}: {} of {} events on chain", c.events().count(), scenario.len()));
        }
    }
    Ok(())
}
