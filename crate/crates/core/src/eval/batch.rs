//! Whole-chain evaluation from closed-form lifecycle rules.
//!
//! For each instance the relevant instants are computed directly:
//! creation `c`, detach `d`, discharge `s`, the expiry tick `X` and the
//! deadline tick `V`. A tick is the start of a block and comes before any
//! event at the same position. Derived state facts feed creation of other
//! instances, so the computation iterates until the fact set is stable.

use std::collections::{BTreeMap, BTreeSet};

use super::{
    match_condition, Bindings, CompiledSpec, EvalError, EvalState, FactSet, InstanceKey, Match,
    NormInstance, TraceEntry,
};
use crate::governance::apply_counts_as;
use crate::lang::{Condition, NormDecl, NormKind, NormState};
use crate::ledger::{verify_chain, Chain, ChainPolicy, Position};

const MAX_ROUNDS: usize = 256;

const END: Position = Position { block_index: u64::MAX, offset_in_block: u64::MAX };

/// Evaluates `spec` over the whole chain.
///
/// Only the chain's structure is checked here (links, digests, indices,
/// event-id uniqueness); proof-of-work and signatures are the ledger's job.
pub fn evaluate(chain: &Chain, spec: &CompiledSpec) -> Result<EvalState, EvalError> {
    verify_chain(chain, &ChainPolicy::structural()).map_err(EvalError::ChainInvalid)?;
    let trace: Vec<TraceEntry> = chain
        .blocks
        .iter()
        .flat_map(|b| {
            b.events.iter().enumerate().map(move |(i, e)| TraceEntry {
                position: Position::new(b.header.index, i as u64),
                event: e.clone(),
            })
        })
        .collect();
    let height = chain.tip().header.index;
    let base = apply_counts_as(&trace, &spec.spec().counts_as, spec.org());

    let mut facts = base.clone();
    for _ in 0..MAX_ROUNDS {
        let instances = closed_form(spec, &trace, &facts, height);
        let mut next = base.clone();
        for i in instances.values() {
            for f in i.state_facts() {
                next.insert(f);
            }
        }
        if next == facts {
            return Ok(EvalState {
                instances,
                facts,
                frontier: trace.last().map(|t| t.position),
                trace,
                height: Some(height),
                tip: chain.tip_hash(),
            });
        }
        facts = next;
    }
    Err(EvalError::NoFixpoint)
}

fn closed_form(
    spec: &CompiledSpec,
    trace: &[TraceEntry],
    facts: &FactSet,
    height: u64,
) -> BTreeMap<InstanceKey, NormInstance> {
    let mut out = BTreeMap::new();
    for norm in &spec.spec().norms {
        let mut created: BTreeMap<Bindings, Position> = BTreeMap::new();
        for m in match_condition(&norm.create, trace, facts, &Bindings::new(), END) {
            let key = spec.project_key(&norm.id, &m.bindings);
            let c = created.entry(key).or_insert(m.witness);
            *c = (*c).min(m.witness);
        }
        for (key, c) in created {
            let mut inst = NormInstance::new(norm, spec.spec(), key.clone(), c);
            let first = |cond: &Condition, from: Position| -> Option<Match> {
                match_condition(cond, trace, facts, &key, END).into_iter().find(|m| m.witness >= from)
            };
            match norm.kind {
                NormKind::Commitment => commitment(&mut inst, norm, height, &first),
                NormKind::Prohibition => prohibition(&mut inst, norm, trace, facts, &first),
            }
            out.insert(inst.key(), inst);
        }
    }
    out
}

/// Start of block `b` if the chain reaches it.
fn tick(b: u64, height: u64) -> Option<Position> {
    (b <= height).then(|| Position::block_start(b))
}

fn commitment(
    inst: &mut NormInstance,
    norm: &NormDecl,
    height: u64,
    first: &dyn Fn(&Condition, Position) -> Option<Match>,
) {
    let c = inst.created_at;
    // Occurrences before creation take effect at creation.
    let at_least_c = |m: Option<Match>| m.map(|m| m.witness.max(c));
    let d = match &norm.antecedent {
        None => Some(c),
        Some(a) => at_least_c(first(a, Position::new(0, 0))),
    };
    let s = at_least_c(first(&norm.consequent, Position::new(0, 0)));
    let x = norm.expires.and_then(|e| tick(c.block_index + e as u64 + 1, height));
    let before = |a: Option<Position>, b: Option<Position>| match (a, b) {
        (Some(a), Some(b)) => a < b,
        (Some(_), None) => true,
        (None, _) => false,
    };

    if x.is_some() && !before(d, x) && !before(s, x) {
        inst.state = NormState::Expired;
        inst.closed_at = x;
        return;
    }
    match d {
        Some(d) => {
            let v = norm.within.and_then(|n| tick(d.block_index + n as u64 + 1, height));
            if before(s, v) {
                let s = s.expect("before() implies a discharge");
                inst.state = NormState::Satisfied;
                inst.closed_at = Some(s);
                inst.detached_at = (d <= s).then_some(d);
            } else if let Some(v) = v {
                inst.state = NormState::Violated;
                inst.closed_at = Some(v);
                inst.detached_at = Some(d);
            } else {
                inst.state = NormState::Detached;
                inst.detached_at = Some(d);
            }
        }
        None => {
            if let Some(s) = s {
                inst.state = NormState::Satisfied;
                inst.closed_at = Some(s);
            }
        }
    }
}

fn prohibition(
    inst: &mut NormInstance,
    norm: &NormDecl,
    trace: &[TraceEntry],
    facts: &FactSet,
    first: &dyn Fn(&Condition, Position) -> Option<Match>,
) {
    let c = inst.created_at;
    let covered = |m: &Match| {
        norm.exemption.as_ref().is_some_and(|ex| {
            let earlier: BTreeSet<Match> = match_condition(ex, trace, facts, &m.bindings, m.witness);
            earlier.iter().any(|e| e.witness < m.witness)
        })
    };
    let v = match_condition(&norm.consequent, trace, facts, &inst.key_bindings, END)
        .into_iter()
        .filter(|m| m.witness >= c)
        .find(|m| !covered(m));
    let u = norm.until.as_ref().and_then(|u| first(u, c));
    match (v, u) {
        (Some(v), u) if u.as_ref().is_none_or(|u| v.witness <= u.witness) => {
            inst.state = NormState::Violated;
            inst.closed_at = Some(v.witness);
            inst.violating_event = v.event;
        }
        (_, Some(u)) => {
            inst.state = NormState::Satisfied;
            inst.closed_at = Some(u.witness);
        }
        _ => {}
    }
}
