use std::fmt::Write;

use super::ast::*;
use crate::ledger::Value;

/// Renders a spec in canonical layout. `parse_compact(pretty_print(s)) == s`.
pub fn pretty_print(spec: &CompactSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "compact {} context {} {{", spec.name, quote(&spec.context));
    let names: Vec<_> = spec.roles.iter().map(|r| r.name.as_str()).collect();
    if names.is_empty() {
        out.push_str("  roles;\n");
    } else {
        let _ = writeln!(out, "  roles {};", names.join(", "));
    }
    for m in &spec.members {
        let _ = writeln!(out, "  member {}: {};", quote(&m.principal), m.roles.join(", "));
    }
    for s in &spec.schemas {
        let params: Vec<_> = s
            .parameters
            .iter()
            .map(|p| format!("{} {}: {}", p.adornment.keyword(), p.name, p.kind.keyword()))
            .collect();
        let _ = writeln!(out, "  schema {}({});", s.event_type, params.join(", "));
    }
    for c in &spec.channels {
        let members: Vec<_> = c
            .members
            .iter()
            .map(|m| match m {
                ChannelMember::Role(r) => r.clone(),
                ChannelMember::Principal(p) => quote(p),
            })
            .collect();
        let _ = writeln!(
            out,
            "  channel {} members {} carries {};",
            c.name,
            members.join(", "),
            c.carries.join(", ")
        );
    }
    for r in &spec.counts_as {
        let _ = writeln!(
            out,
            "  counts-as {}{} by {} as {}{};",
            r.source.event_type,
            constraints(&r.source.constraints),
            r.required_role,
            r.fact,
            constraints(&r.projection)
        );
    }
    for n in &spec.norms {
        out.push('\n');
        print_norm(&mut out, n);
    }
    out.push_str("}\n");
    out
}

fn print_norm(out: &mut String, n: &NormDecl) {
    let _ = writeln!(out, "  {} {} {{", n.kind.keyword(), n.id);
    let _ = writeln!(out, "    subject {};", role_ref(&n.subject));
    let _ = writeln!(out, "    object {};", role_ref(&n.object));
    if let Some(c) = &n.context {
        let _ = writeln!(out, "    context {};", role_ref(c));
    }
    let _ = writeln!(out, "    create on {};", condition(&n.create));
    for (label, c) in n.lifecycle_conditions() {
        let _ = writeln!(out, "    {label} {};", condition(c));
    }
    if let Some(w) = n.within {
        let _ = writeln!(out, "    within {w} blocks;");
    }
    if let Some(e) = n.expires {
        let _ = writeln!(out, "    expires after {e} blocks;");
    }
    out.push_str("  }\n");
}

fn role_ref(r: &RoleRef) -> String {
    match &r.party {
        Party::Var(v) => format!("{}({v})", r.role),
        Party::Principal(p) => format!("{}({})", r.role, quote(p)),
    }
}

/// Renders a condition with the fewest parentheses that preserve its shape.
pub fn condition(c: &Condition) -> String {
    let mut s = String::new();
    write_condition(&mut s, c, 0);
    s
}

fn precedence(c: &Condition) -> u8 {
    match c {
        Condition::Or(..) => 1,
        Condition::And(..) => 2,
        Condition::Before(..) => 3,
        Condition::Event(_) | Condition::Fact(_) => 4,
    }
}

fn write_condition(out: &mut String, c: &Condition, min: u8) {
    let wrap = precedence(c) < min;
    if wrap {
        out.push('(');
    }
    match c {
        Condition::Event(p) => {
            out.push_str(&p.event_type);
            out.push_str(&constraints(&p.constraints));
        }
        Condition::Fact(f) => match &f.fact {
            FactRef::Institutional(name) => {
                out.push_str(name);
                out.push_str(&constraints(&f.constraints));
            }
            FactRef::State(state, norm) => {
                let _ = write!(out, "{state}({norm}");
                for c in &f.constraints {
                    let _ = write!(out, ", {}", constraint(c));
                }
                out.push(')');
            }
        },
        Condition::Or(a, b) => {
            write_condition(out, a, 1);
            out.push_str(" or ");
            write_condition(out, b, 2);
        }
        Condition::And(a, b) => {
            write_condition(out, a, 2);
            out.push_str(" and ");
            write_condition(out, b, 3);
        }
        Condition::Before(a, b) => {
            write_condition(out, a, 4);
            out.push_str(" before ");
            write_condition(out, b, 4);
        }
    }
    if wrap {
        out.push(')');
    }
}

fn constraints(cs: &[Constraint]) -> String {
    let parts: Vec<_> = cs.iter().map(constraint).collect();
    format!("({})", parts.join(", "))
}

fn constraint(c: &Constraint) -> String {
    let term = match &c.term {
        Term::Var(v) => v.clone(),
        Term::Wildcard => "_".into(),
        Term::Lit(Value::Text(s)) => quote(s),
        Term::Lit(Value::Int(i)) => i.to_string(),
        Term::Lit(Value::Bool(b)) => b.to_string(),
    };
    format!("{} = {term}", c.attr)
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}
