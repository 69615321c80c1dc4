//! Admission control for events: schema conformance, channel membership and
//! information-level integrity (key uniqueness, in-causality).
//!
//! The validator only produces verdicts. It never creates or rewrites events.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::lang::{ChannelMember, CompactSpec, Loc};
use crate::ledger::{Attributes, Event, PrincipalId, Value};

pub const COMPLAINT: &str = "Complaint";
pub const SANCTION: &str = "Sanction";
pub const EXONERATION: &str = "Exoneration";
pub const GOVERNANCE_CHANNEL: &str = "governance";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ValueKind {
    Text,
    Int,
    Bool,
}

impl ValueKind {
    pub fn of(v: &Value) -> ValueKind {
        match v {
            Value::Text(_) => ValueKind::Text,
            Value::Int(_) => ValueKind::Int,
            Value::Bool(_) => ValueKind::Bool,
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            ValueKind::Text => "text",
            ValueKind::Int => "int",
            ValueKind::Bool => "bool",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Adornment {
    /// Identifies the event; together the key parameters determine the outs.
    Key,
    /// Produced by the event.
    Out,
    /// Must already be bound by an earlier event.
    In,
}

impl Adornment {
    pub fn keyword(self) -> &'static str {
        match self {
            Adornment::Key => "key",
            Adornment::Out => "out",
            Adornment::In => "in",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Parameter {
    pub name: String,
    pub kind: ValueKind,
    pub adornment: Adornment,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaDecl {
    pub event_type: String,
    pub parameters: Vec<Parameter>,
    pub loc: Loc,
}

impl SchemaDecl {
    pub fn new(event_type: &str, params: &[(Adornment, &str, ValueKind)]) -> SchemaDecl {
        SchemaDecl {
            event_type: event_type.to_string(),
            parameters: params
                .iter()
                .map(|(a, n, k)| Parameter { name: (*n).to_string(), kind: *k, adornment: *a })
                .collect(),
            loc: Loc::default(),
        }
    }

    pub fn param(&self, name: &str) -> Option<&Parameter> {
        self.parameters.iter().find(|p| p.name == name)
    }

    pub fn params_with(&self, a: Adornment) -> impl Iterator<Item = &Parameter> {
        self.parameters.iter().filter(move |p| p.adornment == a)
    }
}

/// The built-in governance event schemas registered in every rule set.
pub fn governance_schemas() -> Vec<SchemaDecl> {
    use Adornment::*;
    use ValueKind::*;
    vec![
        SchemaDecl::new(COMPLAINT, &[(Key, "case", Text)]),
        SchemaDecl::new(SANCTION, &[(Key, "case", Text), (Out, "against", Text)]),
        SchemaDecl::new(EXONERATION, &[(Key, "case", Text), (Out, "against", Text)]),
    ]
}

pub fn is_governance_type(event_type: &str) -> bool {
    matches!(event_type, COMPLAINT | SANCTION | EXONERATION)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Channel {
    pub name: String,
    pub members: BTreeSet<PrincipalId>,
    pub carries: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleSetError {
    #[error("event type `{0}` declared by more than one schema")]
    DuplicateSchema(String),
    #[error("schema `{0}` has no key parameter")]
    NoKeyParameter(String),
    #[error("schema `{schema}` declares parameter `{param}` twice")]
    DuplicateParameter { schema: String, param: String },
    #[error("event type `{0}` is not carried by any channel")]
    NotCarried(String),
    #[error("channel `{channel}` carries undeclared event type `{event_type}`")]
    UnknownCarried { channel: String, event_type: String },
}

/// Schemas plus channels, resolved to principal ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegrityRuleSet {
    schemas: BTreeMap<String, SchemaDecl>,
    channels: Vec<Channel>,
}

impl IntegrityRuleSet {
    pub fn new(schemas: Vec<SchemaDecl>, channels: Vec<Channel>) -> Result<Self, RuleSetError> {
        let mut map = BTreeMap::new();
        for s in schemas {
            if s.params_with(Adornment::Key).next().is_none() {
                return Err(RuleSetError::NoKeyParameter(s.event_type));
            }
            let mut names = HashSet::new();
            for p in &s.parameters {
                if !names.insert(p.name.as_str()) {
                    return Err(RuleSetError::DuplicateParameter {
                        schema: s.event_type.clone(),
                        param: p.name.clone(),
                    });
                }
            }
            if map.contains_key(&s.event_type) {
                return Err(RuleSetError::DuplicateSchema(s.event_type));
            }
            map.insert(s.event_type.clone(), s);
        }
        for c in &channels {
            if let Some(t) = c.carries.iter().find(|t| !map.contains_key(*t)) {
                return Err(RuleSetError::UnknownCarried {
                    channel: c.name.clone(),
                    event_type: t.clone(),
                });
            }
        }
        if let Some(t) = map.keys().find(|t| !channels.iter().any(|c| c.carries.contains(*t))) {
            return Err(RuleSetError::NotCarried(t.clone()));
        }
        Ok(IntegrityRuleSet { schemas: map, channels })
    }

    /// Rules declared by a compact, plus the built-in governance schemas
    /// carried on a channel open to the context and every member.
    pub fn from_spec(spec: &CompactSpec) -> Result<Self, RuleSetError> {
        let mut role_holders: BTreeMap<&str, BTreeSet<PrincipalId>> = BTreeMap::new();
        let mut everyone: BTreeSet<PrincipalId> = BTreeSet::new();
        everyone.insert(spec.context.clone());
        for m in &spec.members {
            everyone.insert(m.principal.clone());
            for r in &m.roles {
                role_holders.entry(r.as_str()).or_default().insert(m.principal.clone());
            }
        }
        let mut channels: Vec<Channel> = spec
            .channels
            .iter()
            .map(|c| Channel {
                name: c.name.clone(),
                members: c
                    .members
                    .iter()
                    .flat_map(|m| match m {
                        ChannelMember::Principal(p) => vec![p.clone()],
                        ChannelMember::Role(r) => role_holders
                            .get(r.as_str())
                            .map(|s| s.iter().cloned().collect())
                            .unwrap_or_default(),
                    })
                    .collect(),
                carries: c.carries.iter().cloned().collect(),
            })
            .collect();
        channels.push(Channel {
            name: GOVERNANCE_CHANNEL.to_string(),
            members: everyone,
            carries: [COMPLAINT, SANCTION, EXONERATION].iter().map(|s| s.to_string()).collect(),
        });
        let mut schemas = spec.schemas.clone();
        schemas.extend(governance_schemas());
        IntegrityRuleSet::new(schemas, channels)
    }

    /// Only the built-in governance schemas, on a channel open to `members`.
    pub fn governance_only(members: impl IntoIterator<Item = PrincipalId>) -> Self {
        IntegrityRuleSet::new(
            governance_schemas(),
            vec![Channel {
                name: GOVERNANCE_CHANNEL.to_string(),
                members: members.into_iter().collect(),
                carries: [COMPLAINT, SANCTION, EXONERATION].iter().map(|s| s.to_string()).collect(),
            }],
        )
        .expect("built-in schemas are well-formed")
    }

    pub fn schema(&self, event_type: &str) -> Option<&SchemaDecl> {
        self.schemas.get(event_type)
    }

    pub fn schemas(&self) -> impl Iterator<Item = &SchemaDecl> {
        self.schemas.values()
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("unknown event type `{0}`")]
    UnknownEventType(String),
    #[error("missing attribute `{0}`")]
    MissingAttribute(String),
    #[error("attribute `{0}` has the wrong kind")]
    KindMismatch(String),
    #[error("undeclared attribute `{0}`")]
    ExtraAttribute(String),
    #[error("emitter `{emitter}` is not on a channel carrying `{event_type}`")]
    EmitterNotOnChannel { emitter: PrincipalId, event_type: String },
}

/// Checks that `e` has a schema, its attributes match the declared
/// parameters exactly, and its emitter sits on a channel carrying its type.
pub fn validate_event_schema(e: &Event, rules: &IntegrityRuleSet) -> Result<(), Vec<SchemaError>> {
    let Some(schema) = rules.schema(&e.event_type) else {
        return Err(vec![SchemaError::UnknownEventType(e.event_type.clone())]);
    };
    let mut errors = Vec::new();
    for p in &schema.parameters {
        match e.attributes.get(&p.name) {
            None => errors.push(SchemaError::MissingAttribute(p.name.clone())),
            Some(v) if ValueKind::of(v) != p.kind => {
                errors.push(SchemaError::KindMismatch(p.name.clone()))
            }
            Some(_) => {}
        }
    }
    for name in e.attributes.keys() {
        if schema.param(name).is_none() {
            errors.push(SchemaError::ExtraAttribute(name.clone()));
        }
    }
    let on_channel = rules
        .channels
        .iter()
        .any(|c| c.carries.contains(&e.event_type) && c.members.contains(&e.emitter));
    if !on_channel {
        errors.push(SchemaError::EmitterNotOnChannel {
            emitter: e.emitter.clone(),
            event_type: e.event_type.clone(),
        });
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IntegrityError {
    #[error("key conflict on `{event_type}` for keys {}", fmt_attrs(.keys))]
    KeyConflict { event_type: String, keys: Attributes },
    #[error("in parameter `{name}` = {value} is not bound by any earlier event")]
    UnboundInParameter { name: String, value: Value },
}

fn fmt_attrs(a: &Attributes) -> String {
    let parts: Vec<String> = a.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("{{{}}}", parts.join(", "))
}

fn key_values(schema: &SchemaDecl, e: &Event) -> Attributes {
    schema
        .params_with(Adornment::Key)
        .filter_map(|p| e.attributes.get(&p.name).map(|v| (p.name.clone(), v.clone())))
        .collect()
}

fn out_values(schema: &SchemaDecl, e: &Event) -> Vec<Option<Value>> {
    schema.params_with(Adornment::Out).map(|p| e.attributes.get(&p.name).cloned()).collect()
}

/// (name, value) pairs an event binds through its key and out parameters.
fn bindings_produced<'a>(
    schema: &'a SchemaDecl,
    e: &'a Event,
) -> impl Iterator<Item = (&'a str, &'a Value)> + 'a {
    schema
        .parameters
        .iter()
        .filter(|p| p.adornment != Adornment::In)
        .filter_map(move |p| e.attributes.get(&p.name).map(|v| (p.name.as_str(), v)))
}

/// Checks `e` against the events that precede it, scanning `ledger_view`.
///
/// Enforces key uniqueness (an earlier event of the same type agreeing on
/// every key parameter must agree on every out parameter) and in-causality
/// (every in parameter's binding already produced by an earlier event).
pub fn check_integrity(
    e: &Event,
    ledger_view: &[Event],
    rules: &IntegrityRuleSet,
) -> Result<(), Vec<IntegrityError>> {
    let Some(schema) = rules.schema(&e.event_type) else {
        return Ok(());
    };
    let mut errors = Vec::new();
    let keys = key_values(schema, e);
    let outs = out_values(schema, e);
    let conflict = ledger_view.iter().any(|prior| {
        prior.event_type == e.event_type
            && key_values(schema, prior) == keys
            && out_values(schema, prior) != outs
    });
    if conflict {
        errors.push(IntegrityError::KeyConflict { event_type: e.event_type.clone(), keys });
    }
    for p in schema.params_with(Adornment::In) {
        let Some(v) = e.attributes.get(&p.name) else { continue };
        let bound = ledger_view.iter().any(|prior| {
            rules
                .schema(&prior.event_type)
                .is_some_and(|s| bindings_produced(s, prior).any(|(n, pv)| n == p.name && pv == v))
        });
        if !bound {
            errors.push(IntegrityError::UnboundInParameter { name: p.name.clone(), value: v.clone() });
        }
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

/// Incremental form of [`check_integrity`] for admitted event sequences.
#[derive(Debug, Clone, Default)]
pub struct IntegrityIndex {
    outs_by_key: HashMap<(String, Attributes), Vec<Option<Value>>>,
    bound: HashSet<(String, Value)>,
}

impl IntegrityIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn check(&self, e: &Event, rules: &IntegrityRuleSet) -> Result<(), Vec<IntegrityError>> {
        let Some(schema) = rules.schema(&e.event_type) else {
            return Ok(());
        };
        let mut errors = Vec::new();
        let keys = key_values(schema, e);
        let lookup = (e.event_type.clone(), keys);
        if let Some(prior) = self.outs_by_key.get(&lookup) {
            if *prior != out_values(schema, e) {
                errors.push(IntegrityError::KeyConflict {
                    event_type: e.event_type.clone(),
                    keys: lookup.1,
                });
            }
        }
        for p in schema.params_with(Adornment::In) {
            let Some(v) = e.attributes.get(&p.name) else { continue };
            if !self.bound.contains(&(p.name.clone(), v.clone())) {
                errors.push(IntegrityError::UnboundInParameter {
                    name: p.name.clone(),
                    value: v.clone(),
                });
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }

    /// Records an admitted event.
    pub fn record(&mut self, e: &Event, rules: &IntegrityRuleSet) {
        let Some(schema) = rules.schema(&e.event_type) else { return };
        self.outs_by_key
            .entry((e.event_type.clone(), key_values(schema, e)))
            .or_insert_with(|| out_values(schema, e));
        for (n, v) in bindings_produced(schema, e) {
            self.bound.insert((n.to_string(), v.clone()));
        }
    }
}

/// Full admission verdict for one event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AdmissionError {
    Schema(Vec<SchemaError>),
    Integrity(Vec<IntegrityError>),
}

impl fmt::Display for AdmissionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = match self {
            AdmissionError::Schema(es) => es.iter().map(ToString::to_string).collect(),
            AdmissionError::Integrity(es) => es.iter().map(ToString::to_string).collect(),
        };
        f.write_str(&parts.join("; "))
    }
}

impl std::error::Error for AdmissionError {}

/// Schema check followed by integrity check against `index`.
pub fn admit(e: &Event, index: &IntegrityIndex, rules: &IntegrityRuleSet) -> Result<(), AdmissionError> {
    validate_event_schema(e, rules).map_err(AdmissionError::Schema)?;
    index.check(e, rules).map_err(AdmissionError::Integrity)
}
