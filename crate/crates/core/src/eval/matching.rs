use std::collections::BTreeSet;

use super::{Bindings, FactSet, Match, TraceEntry};
use crate::lang::{Condition, Constraint, EventPattern, FactPattern, Term};
use crate::ledger::{Attributes, Event, Position};

/// Every extension of `bindings` under which `c` holds using trace entries
/// and facts at or before `now`.
pub fn match_condition(
    c: &Condition,
    trace: &[TraceEntry],
    facts: &FactSet,
    bindings: &Bindings,
    now: Position,
) -> BTreeSet<Match> {
    let end = trace.partition_point(|t| t.position <= now);
    let mut out = BTreeSet::new();
    collect(c, &trace[..end], facts, bindings, now, &mut out);
    out
}

fn collect(
    c: &Condition,
    trace: &[TraceEntry],
    facts: &FactSet,
    bindings: &Bindings,
    now: Position,
    out: &mut BTreeSet<Match>,
) {
    match c {
        Condition::Event(p) => {
            for t in trace {
                if let Some(b) = match_event(p, &t.event, bindings) {
                    out.insert(Match { witness: t.position, bindings: b, event: Some(t.event.event_id.clone()) });
                }
            }
        }
        Condition::Fact(p) => match_fact(p, facts, bindings, now, out),
        Condition::Or(a, b) => {
            collect(a, trace, facts, bindings, now, out);
            collect(b, trace, facts, bindings, now, out);
        }
        Condition::And(a, b) | Condition::Before(a, b) => {
            let sequential = matches!(c, Condition::Before(..));
            let mut left = BTreeSet::new();
            collect(a, trace, facts, bindings, now, &mut left);
            for l in left {
                let mut right = BTreeSet::new();
                collect(b, trace, facts, &l.bindings, now, &mut right);
                for r in right {
                    if sequential && l.witness >= r.witness {
                        continue;
                    }
                    let (witness, event) =
                        if l.witness > r.witness { (l.witness, l.event.clone()) } else { (r.witness, r.event) };
                    out.insert(Match { witness, bindings: r.bindings, event });
                }
            }
        }
    }
}

fn match_fact(p: &FactPattern, facts: &FactSet, bindings: &Bindings, now: Position, out: &mut BTreeSet<Match>) {
    for f in facts.with_ref(&p.fact) {
        if f.witness > now {
            continue;
        }
        if let Some(b) = bind(&p.constraints, &f.bindings, bindings) {
            out.insert(Match { witness: f.witness, bindings: b, event: f.source_event.clone() });
        }
    }
}

/// Matches one event against a pattern, extending `bindings`.
pub fn match_event(p: &EventPattern, e: &Event, bindings: &Bindings) -> Option<Bindings> {
    if e.event_type != p.event_type {
        return None;
    }
    bind(&p.constraints, &e.attributes, bindings)
}

fn bind(constraints: &[Constraint], attrs: &Attributes, bindings: &Bindings) -> Option<Bindings> {
    let mut b = bindings.clone();
    for c in constraints {
        let v = attrs.get(&c.attr)?;
        match &c.term {
            Term::Wildcard => {}
            Term::Lit(l) => {
                if l != v {
                    return None;
                }
            }
            Term::Var(x) => match b.get(x) {
                Some(bound) if bound != v => return None,
                Some(_) => {}
                None => {
                    b.insert(x.clone(), v.clone());
                }
            },
        }
    }
    Some(b)
}
