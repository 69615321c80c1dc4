//! Norm instance evaluation over a chain.
//!
//! Two routes compute the same [`EvalState`]: [`evaluate`] works in batch
//! from closed-form lifecycle rules, [`apply_block`] steps a state machine
//! one block at a time. Neither writes to the ledger.

mod batch;
mod incremental;
mod matching;
mod query;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::governance::Organization;
use crate::lang::{
    check_well_formedness, has_errors, instance_key, CompactSpec, Diagnostic, FactRef, NormDecl,
    NormKind, NormState, Party,
};
use crate::ledger::{BadBlock, Digest, Event, Position, PrincipalId, Value};

pub use batch::evaluate;
pub use incremental::{apply_block, apply_chain};
pub(crate) use incremental::create_instances;
pub use matching::{match_condition, match_event};
pub use query::{query_instances, InstanceFilter};

pub type Bindings = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("chain invalid: {0}")]
    ChainInvalid(BadBlock),
    #[error("compact is ill-formed ({} diagnostics)", .0.len())]
    SpecIllFormed(Vec<Diagnostic>),
    #[error("block {found} does not extend the evaluated prefix (expected block {expected})")]
    NonContiguousBlock { expected: u64, found: u64 },
    #[error("derived facts did not stabilize")]
    NoFixpoint,
}

/// One way a condition holds: the bindings it produces and the position of
/// the pattern occurrence that completed it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Match {
    pub witness: Position,
    pub bindings: Bindings,
    /// The event at the witness, when the witness is an event.
    pub event: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub position: Position,
    pub event: Event,
}

/// A conclusion recomputed from the chain: a norm state change or a
/// counts-as fact. Never recorded on chain.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DerivedFact {
    pub fact: FactRef,
    pub bindings: Bindings,
    pub witness: Position,
    pub source_event: Option<String>,
}

impl DerivedFact {
    pub fn name(&self) -> &str {
        match &self.fact {
            FactRef::State(s, _) => s.name(),
            FactRef::Institutional(n) => n,
        }
    }
}

pub type FactKey = (FactRef, Bindings);

/// Derived facts with set semantics: the first derivation wins.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FactSet {
    facts: BTreeMap<FactKey, DerivedFact>,
}

impl FactSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts `f` unless an equal fact is known; an earlier witness replaces a later one.
    pub fn insert(&mut self, f: DerivedFact) -> bool {
        let key = (f.fact.clone(), f.bindings.clone());
        match self.facts.get(&key) {
            Some(old) if old.witness <= f.witness => false,
            _ => {
                self.facts.insert(key, f);
                true
            }
        }
    }

    pub fn with_ref<'a>(&'a self, fact: &'a FactRef) -> impl Iterator<Item = &'a DerivedFact> + 'a {
        self.facts
            .range((fact.clone(), Bindings::new())..)
            .take_while(move |((f, _), _)| f == fact)
            .map(|(_, v)| v)
    }

    pub fn iter(&self) -> impl Iterator<Item = &DerivedFact> {
        self.facts.values()
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }
}

impl FromIterator<DerivedFact> for FactSet {
    fn from_iter<T: IntoIterator<Item = DerivedFact>>(iter: T) -> Self {
        let mut s = FactSet::new();
        for f in iter {
            s.insert(f);
        }
        s
    }
}

/// Identity of a norm instance.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InstanceKey {
    pub norm_id: String,
    pub bindings: Bindings,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormInstance {
    pub norm_id: String,
    pub kind: NormKind,
    pub key_bindings: Bindings,
    pub subject: PrincipalId,
    pub object: PrincipalId,
    pub context: PrincipalId,
    pub state: NormState,
    pub created_at: Position,
    pub detached_at: Option<Position>,
    pub closed_at: Option<Position>,
    pub violating_event: Option<String>,
}

impl NormInstance {
    pub(crate) fn new(norm: &NormDecl, spec: &CompactSpec, key: Bindings, created_at: Position) -> Self {
        let party = |p: &Party| match p {
            Party::Var(v) => key.get(v).map(value_principal).unwrap_or_default(),
            Party::Principal(p) => p.clone(),
        };
        NormInstance {
            norm_id: norm.id.clone(),
            kind: norm.kind,
            subject: party(&norm.subject.party),
            object: party(&norm.object.party),
            context: norm.context.as_ref().map_or_else(|| spec.context.clone(), |c| party(&c.party)),
            key_bindings: key,
            state: NormState::Active,
            created_at,
            detached_at: None,
            closed_at: None,
            violating_event: None,
        }
    }

    pub fn key(&self) -> InstanceKey {
        InstanceKey { norm_id: self.norm_id.clone(), bindings: self.key_bindings.clone() }
    }

    pub fn involves(&self, principal: &str) -> bool {
        self.subject == principal || self.object == principal || self.context == principal
    }

    /// The fact announcing that this instance reached `state` at `witness`.
    pub fn state_fact(&self, state: NormState, witness: Position) -> DerivedFact {
        DerivedFact {
            fact: FactRef::State(state, self.norm_id.clone()),
            bindings: self.key_bindings.clone(),
            witness,
            source_event: None,
        }
    }

    /// Facts announcing this instance's state changes so far.
    pub fn state_facts(&self) -> Vec<DerivedFact> {
        let mut out = Vec::new();
        if let Some(d) = self.detached_at {
            out.push(self.state_fact(NormState::Detached, d));
        }
        if let Some(c) = self.closed_at {
            out.push(self.state_fact(self.state, c));
        }
        out
    }
}

fn value_principal(v: &Value) -> PrincipalId {
    match v {
        Value::Text(s) => s.clone(),
        other => other.to_string(),
    }
}

/// A spec checked and prepared for evaluation.
#[derive(Debug, Clone)]
pub struct CompiledSpec {
    spec: CompactSpec,
    keys: BTreeMap<String, BTreeSet<String>>,
    org: Organization,
}

impl CompiledSpec {
    /// Fails with the error diagnostics if the spec is not well-formed.
    pub fn new(spec: &CompactSpec) -> Result<Self, EvalError> {
        let diags = check_well_formedness(spec);
        if has_errors(&diags) {
            return Err(EvalError::SpecIllFormed(diags));
        }
        Ok(CompiledSpec {
            keys: spec.norms.iter().map(|n| (n.id.clone(), instance_key(n))).collect(),
            org: Organization::from_spec(spec),
            spec: spec.clone(),
        })
    }

    pub fn spec(&self) -> &CompactSpec {
        &self.spec
    }

    pub fn org(&self) -> &Organization {
        &self.org
    }

    pub fn key_vars(&self, norm_id: &str) -> &BTreeSet<String> {
        &self.keys[norm_id]
    }

    pub(crate) fn project_key(&self, norm_id: &str, b: &Bindings) -> Bindings {
        self.key_vars(norm_id)
            .iter()
            .filter_map(|v| b.get(v).map(|x| (v.clone(), x.clone())))
            .collect()
    }
}

/// Everything known after evaluating a chain prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalState {
    pub instances: BTreeMap<InstanceKey, NormInstance>,
    pub facts: FactSet,
    pub trace: Vec<TraceEntry>,
    /// Position of the last processed event.
    pub frontier: Option<Position>,
    /// Index of the last processed block.
    pub height: Option<u64>,
    pub tip: Digest,
}

impl Default for EvalState {
    fn default() -> Self {
        EvalState {
            instances: BTreeMap::new(),
            facts: FactSet::new(),
            trace: Vec::new(),
            frontier: None,
            height: None,
            tip: Digest::ZERO,
        }
    }
}

impl EvalState {
    /// State before any block, genesis included.
    pub fn new() -> Self {
        Self::default()
    }

    /// The latest position the state accounts for.
    pub fn clock(&self) -> Position {
        let start = Position::block_start(self.height.unwrap_or(0));
        self.frontier.map_or(start, |f| f.max(start))
    }

    pub fn instance(&self, norm_id: &str, bindings: &Bindings) -> Option<&NormInstance> {
        self.instances.get(&InstanceKey { norm_id: norm_id.into(), bindings: bindings.clone() })
    }
}
