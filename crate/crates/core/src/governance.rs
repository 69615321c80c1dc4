//! Organizational contexts: counts-as rules, governance norms triggered by
//! derived facts, and the built-in complaint/sanction/exoneration events.
//!
//! Governance norms are ordinary norms whose create condition refers to
//! another norm's state; no separate engine runs them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::eval::{create_instances, match_event, Bindings, CompiledSpec, DerivedFact, EvalState, FactSet, NormInstance, TraceEntry};
use crate::lang::{CompactSpec, CountsAsRule, FactRef, Party, Term};
use crate::ledger::{Attributes, Event, Position, PrincipalId, Roster};
use crate::validator::{validate_event_schema, IntegrityRuleSet, SchemaError, COMPLAINT, EXONERATION, SANCTION};

/// The context of a compact, treated as a principal like any other.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Organization {
    pub id: PrincipalId,
    pub members: BTreeMap<PrincipalId, BTreeSet<String>>,
    /// Norms in which the organization itself is subject or object.
    pub governance_norms: Vec<String>,
}

impl Organization {
    pub fn from_spec(spec: &CompactSpec) -> Self {
        let mut members: BTreeMap<PrincipalId, BTreeSet<String>> = BTreeMap::new();
        for m in &spec.members {
            members.entry(m.principal.clone()).or_default().extend(m.roles.iter().cloned());
        }
        let is_org = |p: &Party| matches!(p, Party::Principal(x) if *x == spec.context);
        Organization {
            id: spec.context.clone(),
            members,
            governance_norms: spec
                .norms
                .iter()
                .filter(|n| is_org(&n.subject.party) || is_org(&n.object.party))
                .map(|n| n.id.clone())
                .collect(),
        }
    }

    pub fn holds(&self, principal: &str, role: &str) -> bool {
        self.members.get(principal).is_some_and(|r| r.contains(role))
    }
}

/// Facts a single event establishes, given the emitter's roles.
pub fn counts_as_for_event(
    position: Position,
    e: &Event,
    rules: &[CountsAsRule],
    org: &Organization,
) -> Vec<DerivedFact> {
    rules
        .iter()
        .filter(|r| org.holds(&e.emitter, &r.required_role))
        .filter_map(|r| {
            let b = match_event(&r.source, e, &Bindings::new())?;
            let bindings = r
                .projection
                .iter()
                .filter_map(|c| {
                    let v = match &c.term {
                        Term::Var(x) => b.get(x)?.clone(),
                        Term::Lit(v) => v.clone(),
                        Term::Wildcard => return None,
                    };
                    Some((c.attr.clone(), v))
                })
                .collect();
            Some(DerivedFact {
                fact: FactRef::Institutional(r.fact.clone()),
                bindings,
                witness: position,
                source_event: Some(e.event_id.clone()),
            })
        })
        .collect()
}

/// All counts-as facts over a trace prefix. A fact derived more than once
/// keeps its earliest witness.
pub fn apply_counts_as(trace: &[TraceEntry], rules: &[CountsAsRule], org: &Organization) -> FactSet {
    trace.iter().flat_map(|t| counts_as_for_event(t.position, &t.event, rules, org)).collect()
}

/// Spawns instances of norms created on other norms' states for every state
/// fact not yet acted on. Idempotent: a second call creates nothing.
pub fn governance_step(state: &mut EvalState, spec: &CompiledSpec) -> Vec<NormInstance> {
    let now = state.clock();
    let keys = create_instances(state, spec, now, |n| {
        n.create.fact_refs().iter().any(|f| matches!(f, FactRef::State(..)))
    });
    keys.iter().map(|k| state.instances[k].clone()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GovernanceKind {
    Complaint,
    Sanction,
    Exoneration,
}

impl GovernanceKind {
    pub fn event_type(self) -> &'static str {
        match self {
            GovernanceKind::Complaint => COMPLAINT,
            GovernanceKind::Sanction => SANCTION,
            GovernanceKind::Exoneration => EXONERATION,
        }
    }
}

impl fmt::Display for GovernanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.event_type())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GovernanceError {
    #[error("emitter `{0}` is not on the roster")]
    UnrosteredEmitter(PrincipalId),
    #[error("attributes do not fit the {kind} schema: {errors:?}")]
    InvalidBindings { kind: GovernanceKind, errors: Vec<SchemaError> },
}

/// Builds and signs a governance event. The event must still pass admission.
pub fn build_governance_event(
    kind: GovernanceKind,
    attributes: Attributes,
    emitter: &str,
    roster: &Roster,
    event_id: &str,
    logical_ts: u64,
) -> Result<Event, GovernanceError> {
    let secret = roster.secret(emitter).ok_or_else(|| GovernanceError::UnrosteredEmitter(emitter.into()))?;
    let e = Event::signed(event_id, kind.event_type(), attributes, emitter, logical_ts, secret);
    let rules = IntegrityRuleSet::governance_only([emitter.to_string()]);
    validate_event_schema(&e, &rules).map_err(|errors| GovernanceError::InvalidBindings { kind, errors })?;
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_compact;
    use crate::ledger::Value;

    const TUMOR: &str = r#"compact Clinic context "clinic" {
  roles TumorBoard, Physician;
  member "board": TumorBoard;
  member "bob": TumorBoard;
  member "doc": Physician;
  schema Assert(key tumor: text, out finding: text, out patient: text);
  channel all members TumorBoard, Physician carries Assert;
  counts-as Assert(finding = "benign", tumor = t, patient = p) by TumorBoard as Benign(tumor = t, patient = p);
}"#;

    fn assert_ev(id: &str, emitter: &str, tumor: &str) -> Event {
        let attrs: Attributes = [
            ("tumor".to_string(), Value::text(tumor)),
            ("finding".to_string(), Value::text("benign")),
            ("patient".to_string(), Value::text("charlie")),
        ]
        .into();
        Event::signed(id, "Assert", attrs, emitter, 0, "s")
    }

    fn entry(pos: u64, e: Event) -> TraceEntry {
        TraceEntry { position: Position::new(1, pos), event: e }
    }

    #[test]
    fn role_gate() {
        let spec = parse_compact(TUMOR).unwrap();
        let org = Organization::from_spec(&spec);
        let facts = apply_counts_as(&[entry(0, assert_ev("e0", "board", "t7"))], &spec.counts_as, &org);
        assert_eq!(facts.len(), 1);
        let f = facts.iter().next().unwrap();
        assert_eq!(f.name(), "Benign");
        assert_eq!(f.bindings["tumor"], Value::text("t7"));
        let none = apply_counts_as(&[entry(0, assert_ev("e0", "doc", "t7"))], &spec.counts_as, &org);
        assert!(none.is_empty());
    }

    #[test]
    fn repeated_assertions_one_fact_earliest_witness() {
        let spec = parse_compact(TUMOR).unwrap();
        let org = Organization::from_spec(&spec);
        let trace = [entry(0, assert_ev("e0", "board", "t7")), entry(1, assert_ev("e1", "bob", "t7"))];
        let facts = apply_counts_as(&trace, &spec.counts_as, &org);
        assert_eq!(facts.len(), 1);
        let f = facts.iter().next().unwrap();
        assert_eq!(f.witness, Position::new(1, 0));
        assert_eq!(f.source_event.as_deref(), Some("e0"));
    }

    #[test]
    fn governance_events() {
        let roster = Roster::new().with("charlie", "c").with("hospital", "h");
        let e = build_governance_event(
            GovernanceKind::Complaint,
            [("case".to_string(), Value::text("charlie"))].into(),
            "charlie",
            &roster,
            "g0",
            0,
        )
        .unwrap();
        assert!(e.verify_signature("c"));
        let s = build_governance_event(
            GovernanceKind::Sanction,
            [("case".to_string(), Value::text("k1")), ("against".to_string(), Value::text("bob"))].into(),
            "hospital",
            &roster,
            "g1",
            0,
        );
        assert!(s.is_ok());
        let err = build_governance_event(GovernanceKind::Complaint, Attributes::new(), "mallory", &roster, "g2", 0);
        assert_eq!(err.unwrap_err(), GovernanceError::UnrosteredEmitter("mallory".into()));
        let bad = build_governance_event(
            GovernanceKind::Complaint,
            [("patient".to_string(), Value::text("charlie"))].into(),
            "charlie",
            &roster,
            "g3",
            0,
        );
        assert!(matches!(bad, Err(GovernanceError::InvalidBindings { .. })));
    }
}
