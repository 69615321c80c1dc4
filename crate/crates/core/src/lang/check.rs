//! Static well-formedness checks over a parsed compact.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::ast::*;
use crate::validator::{governance_schemas, is_governance_type, SchemaDecl, ValueKind, GOVERNANCE_CHANNEL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Warning => "warning",
            Severity::Error => "error",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DiagnosticKind {
    DuplicateNormId,
    DuplicateSchema,
    DuplicateRole,
    DuplicateMember,
    DuplicateChannel,
    DuplicateParam,
    DuplicateConstraint,
    NoKeyParameter,
    ReservedName,
    UndeclaredRole,
    UnknownEventType,
    UnknownNorm,
    UnknownAttribute,
    UnknownFactAttribute,
    LiteralKindMismatch,
    UnboundVariable,
    KeyNotBoundByCreate,
    NonpositiveDeadline,
    NonpositiveExpiry,
    StateFactOutsideCreate,
    ChannelUnknownEventType,
    EventTypeNotCarried,
    CountsAsProjectionUnbound,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub severity: Severity,
    pub message: String,
    pub loc: Loc,
}

impl Diagnostic {
    fn error(kind: DiagnosticKind, loc: Loc, message: String) -> Self {
        Diagnostic { kind, severity: Severity::Error, message, loc }
    }

    /// `file:line:col: severity: message`.
    pub fn render(&self, file: &str) -> String {
        format!("{file}:{self}")
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}: {}", self.loc.line, self.loc.col, self.severity, self.message)
    }
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(|d| d.severity == Severity::Error)
}

/// Instance key of a norm: the variables every create match binds.
pub fn instance_key(norm: &NormDecl) -> BTreeSet<String> {
    norm.create.definitely_bound()
}

/// Attribute names a counts-as fact can carry.
pub fn fact_attributes<'a>(spec: &'a CompactSpec, fact: &str) -> BTreeSet<&'a str> {
    spec.counts_as
        .iter()
        .filter(|r| r.fact == fact)
        .flat_map(|r| r.projection.iter().map(|c| c.attr.as_str()))
        .collect()
}

/// Runs every static check; an empty result means the spec is well-formed.
pub fn check_well_formedness(spec: &CompactSpec) -> Vec<Diagnostic> {
    let mut c = Checker { spec, out: Vec::new(), schemas: BTreeMap::new() };
    c.run();
    c.out
}

struct Checker<'a> {
    spec: &'a CompactSpec,
    out: Vec<Diagnostic>,
    schemas: BTreeMap<String, SchemaDecl>,
}

use DiagnosticKind as K;

impl<'a> Checker<'a> {
    fn err(&mut self, kind: DiagnosticKind, loc: Loc, message: String) {
        self.out.push(Diagnostic::error(kind, loc, message));
    }

    fn run(&mut self) {
        self.roles();
        self.schemas();
        self.members();
        self.channels();
        self.counts_as();
        self.norms();
    }

    fn role_declared(&mut self, role: &str, loc: Loc) {
        if !self.spec.has_role(role) {
            self.err(K::UndeclaredRole, loc, format!("role `{role}` is not declared"));
        }
    }

    fn roles(&mut self) {
        let mut seen = BTreeSet::new();
        for r in &self.spec.roles {
            if !seen.insert(r.name.as_str()) {
                self.err(K::DuplicateRole, r.loc, format!("role `{}` declared twice", r.name));
            }
        }
    }

    fn members(&mut self) {
        let mut seen = BTreeSet::new();
        for m in &self.spec.members {
            if !seen.insert(m.principal.as_str()) {
                self.err(
                    K::DuplicateMember,
                    m.loc,
                    format!("principal \"{}\" declared as member twice", m.principal),
                );
            }
            for r in &m.roles {
                self.role_declared(r, m.loc);
            }
        }
    }

    fn schemas(&mut self) {
        for s in governance_schemas() {
            self.schemas.insert(s.event_type.clone(), s);
        }
        for s in &self.spec.schemas {
            if is_governance_type(&s.event_type) {
                self.err(
                    K::ReservedName,
                    s.loc,
                    format!("`{}` is a built-in governance event type", s.event_type),
                );
                continue;
            }
            if self.schemas.contains_key(&s.event_type) {
                self.err(K::DuplicateSchema, s.loc, format!("schema `{}` declared twice", s.event_type));
                continue;
            }
            let mut names = BTreeSet::new();
            for p in &s.parameters {
                if !names.insert(p.name.as_str()) {
                    self.err(
                        K::DuplicateParam,
                        s.loc,
                        format!("schema `{}` declares `{}` twice", s.event_type, p.name),
                    );
                }
            }
            if s.params_with(crate::validator::Adornment::Key).next().is_none() {
                self.err(K::NoKeyParameter, s.loc, format!("schema `{}` has no key parameter", s.event_type));
            }
            self.schemas.insert(s.event_type.clone(), s.clone());
        }
    }

    fn channels(&mut self) {
        let mut names = BTreeSet::new();
        let mut carried = BTreeSet::new();
        for c in &self.spec.channels {
            if c.name == GOVERNANCE_CHANNEL {
                self.err(K::ReservedName, c.loc, format!("channel name `{}` is reserved", c.name));
            } else if !names.insert(c.name.as_str()) {
                self.err(K::DuplicateChannel, c.loc, format!("channel `{}` declared twice", c.name));
            }
            for m in &c.members {
                if let ChannelMember::Role(r) = m {
                    self.role_declared(r, c.loc);
                }
            }
            for t in &c.carries {
                if !self.spec.schemas.iter().any(|s| &s.event_type == t) {
                    self.err(
                        K::ChannelUnknownEventType,
                        c.loc,
                        format!("channel `{}` carries undeclared event type `{t}`", c.name),
                    );
                }
                carried.insert(t.as_str());
            }
        }
        for s in &self.spec.schemas {
            if !is_governance_type(&s.event_type) && !carried.contains(s.event_type.as_str()) {
                self.err(
                    K::EventTypeNotCarried,
                    s.loc,
                    format!("event type `{}` is not carried by any channel", s.event_type),
                );
            }
        }
    }

    fn counts_as(&mut self) {
        for r in &self.spec.counts_as {
            self.event_pattern(&r.source);
            self.role_declared(&r.required_role, r.loc);
            if self.schemas.contains_key(&r.fact) {
                self.err(
                    K::ReservedName,
                    r.loc,
                    format!("fact `{}` has the name of an event type", r.fact),
                );
            }
            let bound = vars_of(&r.source.constraints);
            let mut attrs = BTreeSet::new();
            for c in &r.projection {
                if !attrs.insert(c.attr.as_str()) {
                    self.err(K::DuplicateConstraint, r.loc, format!("attribute `{}` given twice", c.attr));
                }
                match &c.term {
                    Term::Var(v) if !bound.contains(v) => self.err(
                        K::CountsAsProjectionUnbound,
                        r.loc,
                        format!("variable `{v}` in `{}` is not bound by `{}`", r.fact, r.source.event_type),
                    ),
                    Term::Wildcard => self.err(
                        K::CountsAsProjectionUnbound,
                        r.loc,
                        format!("attribute `{}` of `{}` needs a value, not `_`", c.attr, r.fact),
                    ),
                    _ => {}
                }
            }
        }
    }

    fn norms(&mut self) {
        let mut ids = BTreeSet::new();
        for n in &self.spec.norms {
            if !ids.insert(n.id.as_str()) {
                self.err(K::DuplicateNormId, n.loc, format!("norm `{}` declared twice", n.id));
            }
        }
        for n in &self.spec.norms {
            self.norm(n);
        }
    }

    fn norm(&mut self, n: &NormDecl) {
        let key = instance_key(n);
        for r in n.role_refs() {
            self.role_declared(&r.role, r.loc);
            if let Party::Var(v) = &r.party {
                if !key.contains(v) {
                    self.err(
                        K::KeyNotBoundByCreate,
                        r.loc,
                        format!("`{v}` in `{}` is not bound by every match of the create condition", r.role),
                    );
                }
            }
        }
        for (label, c) in n.all_conditions() {
            self.condition_patterns(c, label == "create");
        }
        let forbid_bound = n.consequent.definitely_bound();
        // A forbidden match's bindings carry over into its exemption, so a
        // variable joined there counts as used.
        let exempt_vars: BTreeSet<String> =
            n.exemption.iter().flat_map(|e| e.var_occurrences()).map(|(v, _)| v.to_string()).collect();
        for (label, c) in n.lifecycle_conditions() {
            let mut bound = key.clone();
            match label {
                "unless" => bound.extend(forbid_bound.iter().cloned()),
                "forbids" => bound.extend(exempt_vars.iter().filter(|v| forbid_bound.contains(*v)).cloned()),
                _ => {}
            }
            let mut counts: BTreeMap<&str, (usize, Loc)> = BTreeMap::new();
            for (v, loc) in c.var_occurrences() {
                counts.entry(v).or_insert((0, loc)).0 += 1;
            }
            for (v, (count, loc)) in counts {
                if count < 2 && !bound.contains(v) {
                    self.err(
                        K::UnboundVariable,
                        loc,
                        format!(
                            "variable `{v}` in the {label} of `{}` is neither an instance key nor joined locally",
                            n.id
                        ),
                    );
                }
            }
        }
        if let Some(w) = n.within {
            if w <= 0 {
                self.err(K::NonpositiveDeadline, n.loc, format!("deadline of `{}` must be positive", n.id));
            }
        }
        if let Some(e) = n.expires {
            if e <= 0 {
                self.err(K::NonpositiveExpiry, n.loc, format!("expiry of `{}` must be positive", n.id));
            }
        }
    }

    fn condition_patterns(&mut self, c: &Condition, in_create: bool) {
        let mut events = Vec::new();
        let mut facts = Vec::new();
        c.visit_patterns(&mut |p| match p {
            PatternRef::Event(e) => events.push(e),
            PatternRef::Fact(f) => facts.push(f),
        });
        for e in events {
            self.event_pattern(e);
        }
        for f in facts {
            self.fact_pattern(f, in_create);
        }
    }

    fn duplicate_constraints(&mut self, cs: &[Constraint], loc: Loc) {
        let mut seen = BTreeSet::new();
        for c in cs {
            if !seen.insert(c.attr.as_str()) {
                self.err(K::DuplicateConstraint, loc, format!("attribute `{}` constrained twice", c.attr));
            }
        }
    }

    fn event_pattern(&mut self, p: &EventPattern) {
        self.duplicate_constraints(&p.constraints, p.loc);
        let Some(schema) = self.schemas.get(&p.event_type).cloned() else {
            self.err(K::UnknownEventType, p.loc, format!("unknown event type `{}`", p.event_type));
            return;
        };
        for c in &p.constraints {
            match schema.param(&c.attr) {
                None => self.err(
                    K::UnknownAttribute,
                    p.loc,
                    format!("`{}` has no attribute `{}`", p.event_type, c.attr),
                ),
                Some(param) => {
                    if let Term::Lit(v) = &c.term {
                        if ValueKind::of(v) != param.kind {
                            self.err(
                                K::LiteralKindMismatch,
                                p.loc,
                                format!(
                                    "`{}.{}` is {}, literal {v} is not",
                                    p.event_type,
                                    c.attr,
                                    param.kind.keyword()
                                ),
                            );
                        }
                    }
                }
            }
        }
    }

    fn fact_pattern(&mut self, f: &FactPattern, in_create: bool) {
        self.duplicate_constraints(&f.constraints, f.loc);
        match &f.fact {
            FactRef::State(state, norm) => {
                if !in_create {
                    self.err(
                        K::StateFactOutsideCreate,
                        f.loc,
                        format!("`{state}({norm})` may only appear in a create condition"),
                    );
                }
                let Some(target) = self.spec.norm(norm) else {
                    self.err(K::UnknownNorm, f.loc, format!("unknown norm `{norm}`"));
                    return;
                };
                let key = instance_key(target);
                for c in &f.constraints {
                    if !key.contains(&c.attr) {
                        self.err(
                            K::UnknownFactAttribute,
                            f.loc,
                            format!("`{norm}` instances have no key variable `{}`", c.attr),
                        );
                    }
                }
            }
            FactRef::Institutional(name) => {
                let attrs = fact_attributes(self.spec, name);
                for c in &f.constraints {
                    if !attrs.contains(c.attr.as_str()) {
                        self.err(
                            K::UnknownFactAttribute,
                            f.loc,
                            format!("fact `{name}` has no attribute `{}`", c.attr),
                        );
                    }
                }
            }
        }
    }
}
