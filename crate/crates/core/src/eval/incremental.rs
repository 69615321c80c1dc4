//! Block-at-a-time state machine.
//!
//! Each block first takes a lapse step at its start position (expiries and
//! missed deadlines), then one step per event in order. After every step,
//! creations and transitions repeat until nothing changes.

use super::{match_condition, Bindings, CompiledSpec, EvalError, EvalState, InstanceKey, NormInstance, TraceEntry};
use crate::governance::counts_as_for_event;
use crate::lang::{NormDecl, NormKind, NormState};
use crate::ledger::{Block, Chain, Position};

/// Extends `state` by one block. The block must be the successor of the
/// last applied one (genesis first).
pub fn apply_block(mut state: EvalState, spec: &CompiledSpec, block: &Block) -> Result<EvalState, EvalError> {
    let expected = state.height.map_or(0, |h| h + 1);
    if block.header.index != expected || block.header.prev_hash != state.tip {
        return Err(EvalError::NonContiguousBlock { expected, found: block.header.index });
    }
    let h = block.header.index;
    let tick = Position::block_start(h);
    lapse(&mut state, spec, h, tick);
    settle(&mut state, spec, tick);
    for (i, e) in block.events.iter().enumerate() {
        let pos = Position::new(h, i as u64);
        state.trace.push(TraceEntry { position: pos, event: e.clone() });
        for f in counts_as_for_event(pos, e, &spec.spec().counts_as, spec.org()) {
            state.facts.insert(f);
        }
        settle(&mut state, spec, pos);
        state.frontier = Some(pos);
    }
    state.height = Some(h);
    state.tip = block.hash();
    Ok(state)
}

/// Folds [`apply_block`] over a whole chain from genesis.
pub fn apply_chain(chain: &Chain, spec: &CompiledSpec) -> Result<EvalState, EvalError> {
    chain.blocks.iter().try_fold(EvalState::new(), |s, b| apply_block(s, spec, b))
}

fn lapse(state: &mut EvalState, spec: &CompiledSpec, h: u64, tick: Position) {
    let mut changed = Vec::new();
    for inst in state.instances.values_mut() {
        if inst.kind != NormKind::Commitment {
            continue;
        }
        let norm = norm(spec, &inst.norm_id);
        match inst.state {
            NormState::Active => {
                if let Some(e) = norm.expires {
                    if h > inst.created_at.block_index + e as u64 {
                        inst.state = NormState::Expired;
                        inst.closed_at = Some(tick);
                        changed.push(inst.key());
                    }
                }
            }
            NormState::Detached => {
                if let (Some(n), Some(d)) = (norm.within, inst.detached_at) {
                    if h > d.block_index + n as u64 {
                        inst.state = NormState::Violated;
                        inst.closed_at = Some(tick);
                        changed.push(inst.key());
                    }
                }
            }
            _ => {}
        }
    }
    for k in changed {
        announce(state, &k, tick);
    }
}

fn settle(state: &mut EvalState, spec: &CompiledSpec, now: Position) {
    loop {
        let created = !create_instances(state, spec, now, |_| true).is_empty();
        let moved = transitions(state, spec, now);
        if !created && !moved {
            break;
        }
    }
}

fn norm<'a>(spec: &'a CompiledSpec, id: &str) -> &'a NormDecl {
    spec.spec().norm(id).expect("instance of a declared norm")
}

/// Records the fact for an instance's current state, witnessed at `now`.
fn announce(state: &mut EvalState, key: &InstanceKey, now: Position) {
    let inst = &state.instances[key];
    let f = inst.state_fact(inst.state, now);
    state.facts.insert(f);
}

/// Creates an instance for every create match with an unseen key among the
/// norms selected by `which`. Returns the new keys.
pub(crate) fn create_instances(
    state: &mut EvalState,
    spec: &CompiledSpec,
    now: Position,
    which: impl Fn(&NormDecl) -> bool,
) -> Vec<InstanceKey> {
    let mut created = Vec::new();
    for norm in spec.spec().norms.iter().filter(|n| which(n)) {
        let matches = match_condition(&norm.create, &state.trace, &state.facts, &Bindings::new(), now);
        for m in matches {
            let key = InstanceKey { norm_id: norm.id.clone(), bindings: spec.project_key(&norm.id, &m.bindings) };
            if state.instances.contains_key(&key) {
                continue;
            }
            let mut inst = NormInstance::new(norm, spec.spec(), key.bindings.clone(), m.witness);
            let detach = norm.kind == NormKind::Commitment && norm.antecedent.is_none();
            if detach {
                inst.state = NormState::Detached;
                inst.detached_at = Some(inst.created_at);
            }
            let at = inst.created_at;
            state.instances.insert(key.clone(), inst);
            if detach {
                announce(state, &key, at);
            }
            created.push(key);
        }
    }
    created
}

fn transitions(state: &mut EvalState, spec: &CompiledSpec, now: Position) -> bool {
    let open: Vec<InstanceKey> = state
        .instances
        .iter()
        .filter(|(_, i)| !i.state.is_terminal())
        .map(|(k, _)| k.clone())
        .collect();
    let mut moved = false;
    for key in open {
        let norm = norm(spec, &key.norm_id);
        let inst = &state.instances[&key];
        let holds = |c| !match_condition(c, &state.trace, &state.facts, &key.bindings, now).is_empty();
        let mut next = inst.clone();
        match norm.kind {
            NormKind::Commitment => {
                if next.state == NormState::Active {
                    if let Some(a) = &norm.antecedent {
                        if holds(a) {
                            next.state = NormState::Detached;
                            next.detached_at = Some(now);
                        }
                    }
                }
                if holds(&norm.consequent) {
                    next.state = NormState::Satisfied;
                    next.closed_at = Some(now);
                }
            }
            NormKind::Prohibition => {
                let created = inst.created_at;
                let forbidden = match_condition(&norm.consequent, &state.trace, &state.facts, &key.bindings, now);
                let breach = forbidden.into_iter().filter(|m| m.witness >= created).find(|m| {
                    !norm.exemption.as_ref().is_some_and(|ex| {
                        match_condition(ex, &state.trace, &state.facts, &m.bindings, m.witness)
                            .iter()
                            .any(|e| e.witness < m.witness)
                    })
                });
                if let Some(m) = breach {
                    next.state = NormState::Violated;
                    next.closed_at = Some(now);
                    next.violating_event = m.event;
                } else if let Some(u) = &norm.until {
                    let ended = match_condition(u, &state.trace, &state.facts, &key.bindings, now)
                        .iter()
                        .any(|m| m.witness >= created);
                    if ended {
                        next.state = NormState::Satisfied;
                        next.closed_at = Some(now);
                    }
                }
            }
        }
        if next != *inst {
            let detached_now = inst.detached_at.is_none() && next.detached_at.is_some();
            let closed_now = next.state.is_terminal();
            state.instances.insert(key.clone(), next);
            if detached_now {
                let f = state.instances[&key].state_fact(NormState::Detached, now);
                state.facts.insert(f);
            }
            if closed_now {
                announce(state, &key, now);
            }
            moved = true;
        }
    }
    moved
}
