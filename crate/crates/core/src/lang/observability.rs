//! Static check that every party to a norm can see the events its state
//! depends on.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use crate::validator::is_governance_type;

/// Event types a party to a norm cannot observe.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ObservabilityGap {
    pub norm_id: String,
    pub role: String,
    pub unseen: BTreeSet<String>,
}

/// Lists, per norm and per subject/object/context role, the event types in
/// the norm's conditions not carried on any channel that role sits on.
/// Governance events travel on the built-in channel open to every member.
///
/// An empty result means every party can compute every norm's state.
pub fn check_observability(spec: &CompactSpec, channels: &[ChannelDecl]) -> Vec<ObservabilityGap> {
    let mut gaps = Vec::new();
    for n in &spec.norms {
        let mut visited = BTreeSet::new();
        let types = norm_event_types(spec, n, &mut visited);
        let mut per_role: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for r in n.role_refs() {
            let visible = visible_types(spec, channels, r);
            let unseen: BTreeSet<String> = types
                .iter()
                .filter(|t| !is_governance_type(t) && !visible.contains(t.as_str()))
                .cloned()
                .collect();
            if !unseen.is_empty() {
                per_role.entry(r.role.clone()).or_default().extend(unseen);
            }
        }
        // Without an explicit context role the compact's own context is a party.
        if n.context.is_none() {
            let visible = principal_visible(spec, channels, &spec.context);
            let unseen: BTreeSet<String> = types
                .iter()
                .filter(|t| !is_governance_type(t) && !visible.contains(t.as_str()))
                .cloned()
                .collect();
            if !unseen.is_empty() {
                per_role.entry(format!("context \"{}\"", spec.context)).or_default().extend(unseen);
            }
        }
        gaps.extend(per_role.into_iter().map(|(role, unseen)| ObservabilityGap {
            norm_id: n.id.clone(),
            role,
            unseen,
        }));
    }
    gaps
}

/// Event types a norm's state depends on, following counts-as facts to their
/// source events and state facts to the referenced norm.
fn norm_event_types(spec: &CompactSpec, n: &NormDecl, visited: &mut BTreeSet<String>) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    if !visited.insert(n.id.clone()) {
        return out;
    }
    for (_, c) in n.all_conditions() {
        out.extend(c.event_types().into_iter().map(String::from));
        for f in c.fact_refs() {
            match f {
                FactRef::Institutional(name) => {
                    out.extend(
                        spec.counts_as
                            .iter()
                            .filter(|r| &r.fact == name)
                            .map(|r| r.source.event_type.clone()),
                    );
                }
                FactRef::State(_, id) => {
                    if let Some(m) = spec.norm(id) {
                        out.extend(norm_event_types(spec, m, visited));
                    }
                }
            }
        }
    }
    out
}

fn visible_types<'a>(spec: &CompactSpec, channels: &'a [ChannelDecl], r: &RoleRef) -> BTreeSet<&'a str> {
    match &r.party {
        Party::Var(_) => channels
            .iter()
            .filter(|c| c.members.contains(&ChannelMember::Role(r.role.clone())))
            .flat_map(|c| c.carries.iter().map(String::as_str))
            .collect(),
        Party::Principal(p) => {
            let mut v = principal_visible(spec, channels, p);
            v.extend(
                channels
                    .iter()
                    .filter(|c| c.members.contains(&ChannelMember::Role(r.role.clone())))
                    .flat_map(|c| c.carries.iter().map(String::as_str)),
            );
            v
        }
    }
}

fn principal_visible<'a>(spec: &CompactSpec, channels: &'a [ChannelDecl], p: &str) -> BTreeSet<&'a str> {
    let roles: BTreeSet<&str> = spec
        .members
        .iter()
        .filter(|m| m.principal == p)
        .flat_map(|m| m.roles.iter().map(String::as_str))
        .collect();
    channels
        .iter()
        .filter(|c| {
            c.members.iter().any(|m| match m {
                ChannelMember::Principal(q) => q == p,
                ChannelMember::Role(r) => roles.contains(r.as_str()),
            })
        })
        .flat_map(|c| c.carries.iter().map(String::as_str))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::parse_compact;
    use super::*;

    const SRC: &str = r#"compact T context "org" {
  roles A, B;
  member "org": B;
  schema Ask(key id: text, out who: text);
  schema Done(key id: text);
  schema Say(key id: text);
  channel one members A, B carries Ask, Done;
  channel two members A carries Say;
  counts-as Say(id = i) by A as Said(id = i);
  commitment C { subject A(a); object B("org"); context B("org"); create on Ask(id = x, who = a); consequent Done(id = x); }
  commitment D { subject A(a); object B(b); create on Said(id = a) and Ask(id = b, who = _); consequent Complaint(case = a); }
}"#;

    #[test]
    fn gaps_follow_counts_as_sources() {
        let spec = parse_compact(SRC).unwrap();
        let gaps = check_observability(&spec, &spec.channels);
        assert_eq!(
            gaps,
            vec![
                ObservabilityGap {
                    norm_id: "D".into(),
                    role: "B".into(),
                    unseen: ["Say".to_string()].into(),
                },
                ObservabilityGap {
                    norm_id: "D".into(),
                    role: "context \"org\"".into(),
                    unseen: ["Say".to_string()].into(),
                },
            ]
        );
    }

    #[test]
    fn one_channel_for_all_is_clean() {
        let mut spec = parse_compact(SRC).unwrap();
        spec.channels = vec![ChannelDecl {
            name: "all".into(),
            members: vec![ChannelMember::Role("A".into()), ChannelMember::Role("B".into())],
            carries: vec!["Ask".into(), "Done".into(), "Say".into()],
            loc: Loc::default(),
        }];
        assert!(check_observability(&spec, &spec.channels).is_empty());
    }
}
