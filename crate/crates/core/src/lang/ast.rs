//! Abstract syntax of compact files.
//!
//! Source locations are carried for diagnostics but never participate in
//! equality: two specs that differ only in layout compare equal.

use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};

use crate::ledger::{PrincipalId, Value};
use crate::validator::SchemaDecl;

/// A 1-based source position. Compares equal to every other `Loc`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Loc {
    pub line: u32,
    pub col: u32,
}

impl Loc {
    pub fn new(line: u32, col: u32) -> Self {
        Loc { line, col }
    }
}

impl PartialEq for Loc {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Loc {}

impl Hash for Loc {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompactSpec {
    pub name: String,
    /// The organizational context: a principal on par with any other.
    pub context: PrincipalId,
    pub roles: Vec<RoleDecl>,
    pub members: Vec<MemberDecl>,
    pub schemas: Vec<SchemaDecl>,
    pub channels: Vec<ChannelDecl>,
    pub counts_as: Vec<CountsAsRule>,
    pub norms: Vec<NormDecl>,
    pub loc: Loc,
}

impl CompactSpec {
    pub fn norm(&self, id: &str) -> Option<&NormDecl> {
        self.norms.iter().find(|n| n.id == id)
    }

    pub fn schema(&self, event_type: &str) -> Option<&SchemaDecl> {
        self.schemas.iter().find(|s| s.event_type == event_type)
    }

    pub fn has_role(&self, role: &str) -> bool {
        self.roles.iter().any(|r| r.name == role)
    }

    /// Names of facts produced by counts-as rules.
    pub fn institutional_facts(&self) -> BTreeSet<&str> {
        self.counts_as.iter().map(|r| r.fact.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleDecl {
    pub name: String,
    pub loc: Loc,
}

/// Static role assignment of a principal within the organizational context.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemberDecl {
    pub principal: PrincipalId,
    pub roles: Vec<String>,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum ChannelMember {
    Role(String),
    Principal(PrincipalId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelDecl {
    pub name: String,
    pub members: Vec<ChannelMember>,
    pub carries: Vec<String>,
    pub loc: Loc,
}

/// `counts-as <source> by <role> as <Fact>(<projection>)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountsAsRule {
    pub source: EventPattern,
    pub required_role: String,
    pub fact: String,
    pub projection: Vec<Constraint>,
    pub loc: Loc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NormKind {
    Commitment,
    Prohibition,
}

impl NormKind {
    pub fn keyword(self) -> &'static str {
        match self {
            NormKind::Commitment => "commitment",
            NormKind::Prohibition => "prohibition",
        }
    }
}

/// Who fills a role in a norm: a key variable or a fixed principal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Party {
    Var(String),
    Principal(PrincipalId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleRef {
    pub role: String,
    pub party: Party,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormDecl {
    pub id: String,
    pub kind: NormKind,
    /// Debtor for commitments.
    pub subject: RoleRef,
    /// Creditor or beneficiary.
    pub object: RoleRef,
    pub context: Option<RoleRef>,
    pub create: Condition,
    /// Commitments only; absent means detached on creation.
    pub antecedent: Option<Condition>,
    /// Discharge condition for commitments, forbidden pattern for prohibitions.
    pub consequent: Condition,
    /// Prohibitions only.
    pub exemption: Option<Condition>,
    /// Commitments: blocks allowed after detach.
    pub within: Option<i64>,
    /// Commitments: blocks after creation before an undetached instance expires.
    pub expires: Option<i64>,
    /// Prohibitions: condition that ends the prohibition.
    pub until: Option<Condition>,
    pub loc: Loc,
}

impl NormDecl {
    pub fn role_refs(&self) -> impl Iterator<Item = &RoleRef> {
        [Some(&self.subject), Some(&self.object), self.context.as_ref()].into_iter().flatten()
    }

    /// Lifecycle conditions (everything except `create`), labelled by clause keyword.
    pub fn lifecycle_conditions(&self) -> Vec<(&'static str, &Condition)> {
        let mut out = Vec::new();
        if let Some(a) = &self.antecedent {
            out.push(("antecedent", a));
        }
        out.push((
            match self.kind {
                NormKind::Commitment => "consequent",
                NormKind::Prohibition => "forbids",
            },
            &self.consequent,
        ));
        if let Some(e) = &self.exemption {
            out.push(("unless", e));
        }
        if let Some(u) = &self.until {
            out.push(("until", u));
        }
        out
    }

    pub fn all_conditions(&self) -> Vec<(&'static str, &Condition)> {
        let mut out = vec![("create", &self.create)];
        out.extend(self.lifecycle_conditions());
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Var(String),
    Wildcard,
    Lit(Value),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub attr: String,
    pub term: Term,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventPattern {
    pub event_type: String,
    pub constraints: Vec<Constraint>,
    pub loc: Loc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NormState {
    Active,
    Detached,
    Satisfied,
    Violated,
    Expired,
}

impl NormState {
    pub fn name(self) -> &'static str {
        match self {
            NormState::Active => "Active",
            NormState::Detached => "Detached",
            NormState::Satisfied => "Satisfied",
            NormState::Violated => "Violated",
            NormState::Expired => "Expired",
        }
    }

    pub fn from_name(s: &str) -> Option<NormState> {
        Some(match s {
            "Active" => NormState::Active,
            "Detached" => NormState::Detached,
            "Satisfied" => NormState::Satisfied,
            "Violated" => NormState::Violated,
            "Expired" => NormState::Expired,
            _ => return None,
        })
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, NormState::Satisfied | NormState::Violated | NormState::Expired)
    }
}

impl fmt::Display for NormState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The fact a [`FactPattern`] refers to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FactRef {
    /// A norm instance reached `state`, e.g. `Violated(P1, ...)`.
    State(NormState, String),
    /// A fact established by a counts-as rule.
    Institutional(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactPattern {
    pub fact: FactRef,
    pub constraints: Vec<Constraint>,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Condition {
    Event(EventPattern),
    Fact(FactPattern),
    And(Box<Condition>, Box<Condition>),
    Or(Box<Condition>, Box<Condition>),
    /// Holds when the left witness strictly precedes the right witness.
    Before(Box<Condition>, Box<Condition>),
}

impl Condition {
    pub fn and(a: Condition, b: Condition) -> Condition {
        Condition::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Condition, b: Condition) -> Condition {
        Condition::Or(Box::new(a), Box::new(b))
    }

    pub fn before(a: Condition, b: Condition) -> Condition {
        Condition::Before(Box::new(a), Box::new(b))
    }

    /// Depth-first walk over every pattern leaf.
    pub fn visit_patterns<'a>(&'a self, f: &mut dyn FnMut(PatternRef<'a>)) {
        match self {
            Condition::Event(p) => f(PatternRef::Event(p)),
            Condition::Fact(p) => f(PatternRef::Fact(p)),
            Condition::And(a, b) | Condition::Or(a, b) | Condition::Before(a, b) => {
                a.visit_patterns(f);
                b.visit_patterns(f);
            }
        }
    }

    pub fn event_types(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.visit_patterns(&mut |p| {
            if let PatternRef::Event(e) = p {
                out.insert(e.event_type.as_str());
            }
        });
        out
    }

    pub fn fact_refs(&self) -> BTreeSet<&FactRef> {
        let mut out = BTreeSet::new();
        self.visit_patterns(&mut |p| {
            if let PatternRef::Fact(f) = p {
                out.insert(&f.fact);
            }
        });
        out
    }

    /// Variables bound in every match of this condition.
    pub fn definitely_bound(&self) -> BTreeSet<String> {
        match self {
            Condition::Event(p) => vars_of(&p.constraints),
            Condition::Fact(p) => vars_of(&p.constraints),
            Condition::And(a, b) | Condition::Before(a, b) => {
                let mut s = a.definitely_bound();
                s.extend(b.definitely_bound());
                s
            }
            Condition::Or(a, b) => {
                let l = a.definitely_bound();
                let r = b.definitely_bound();
                l.intersection(&r).cloned().collect()
            }
        }
    }

    /// Every named-variable occurrence, in source order.
    pub fn var_occurrences(&self) -> Vec<(&str, Loc)> {
        let mut out = Vec::new();
        self.visit_patterns(&mut |p| {
            let (cs, loc) = match p {
                PatternRef::Event(e) => (&e.constraints, e.loc),
                PatternRef::Fact(f) => (&f.constraints, f.loc),
            };
            for c in cs {
                if let Term::Var(v) = &c.term {
                    out.push((v.as_str(), loc));
                }
            }
        });
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub enum PatternRef<'a> {
    Event(&'a EventPattern),
    Fact(&'a FactPattern),
}

pub(crate) fn vars_of(constraints: &[Constraint]) -> BTreeSet<String> {
    constraints
        .iter()
        .filter_map(|c| match &c.term {
            Term::Var(v) => Some(v.clone()),
            _ => None,
        })
        .collect()
}
