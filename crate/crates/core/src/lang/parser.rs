//! Recursive-descent parser for compact files. The grammar is LL(1); see
//! `docs/grammar.ebnf`.

use std::collections::BTreeSet;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;
use crate::ledger::Value;
use crate::validator::{Adornment, Parameter, SchemaDecl, ValueKind};

/// Parses compact source text into an AST.
///
/// Patterns whose name matches a counts-as fact are resolved to institutional
/// fact patterns once the whole file has been read.
pub fn parse_compact(src: &str) -> Result<CompactSpec, ParseError> {
    let tokens = tokenize(src)?;
    let mut p = Parser { tokens, pos: 0 };
    let mut spec = p.compact()?;
    resolve_facts(&mut spec);
    Ok(spec)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        let t = &self.tokens[self.pos];
        ParseError {
            line: t.loc.line,
            col: t.loc.col,
            message: message.into(),
            token: t.tok.to_string(),
        }
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Kw(k) if *k == kw)
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> PResult<Loc> {
        if *self.peek() == tok {
            Ok(self.next().loc)
        } else {
            Err(self.error(format!("expected `{tok}`")))
        }
    }

    fn expect_kw(&mut self, kw: &'static str) -> PResult<Loc> {
        self.expect(Tok::Kw(kw))
    }

    fn ident(&mut self, what: &str) -> PResult<(String, Loc)> {
        match self.peek().clone() {
            Tok::Ident(s) => Ok((s, self.next().loc)),
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    fn string(&mut self, what: &str) -> PResult<String> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.next();
                Ok(s)
            }
            _ => Err(self.error(format!("expected {what} string"))),
        }
    }

    fn block_count(&mut self) -> PResult<i64> {
        match *self.peek() {
            Tok::Int(v) => {
                self.next();
                Ok(v)
            }
            _ => Err(self.error("expected a block count")),
        }
    }

    fn compact(&mut self) -> PResult<CompactSpec> {
        let loc = self.expect_kw("compact")?;
        let (name, _) = self.ident("compact name")?;
        self.expect_kw("context")?;
        let context = self.string("context principal")?;
        self.expect(Tok::LBrace)?;
        let mut spec = CompactSpec {
            name,
            context,
            roles: vec![],
            members: vec![],
            schemas: vec![],
            channels: vec![],
            counts_as: vec![],
            norms: vec![],
            loc,
        };
        loop {
            match self.peek() {
                Tok::RBrace => {
                    self.next();
                    break;
                }
                Tok::Kw("roles") => self.roles(&mut spec.roles)?,
                Tok::Kw("member") => spec.members.push(self.member()?),
                Tok::Kw("schema") => spec.schemas.push(self.schema()?),
                Tok::Kw("channel") => spec.channels.push(self.channel()?),
                Tok::Kw("counts-as") => spec.counts_as.push(self.counts_as()?),
                Tok::Kw("commitment") => spec.norms.push(self.norm(NormKind::Commitment)?),
                Tok::Kw("prohibition") => spec.norms.push(self.norm(NormKind::Prohibition)?),
                _ => return Err(self.error("expected a declaration or `}`")),
            }
        }
        if *self.peek() != Tok::Eof {
            return Err(self.error("unexpected input after compact"));
        }
        Ok(spec)
    }

    fn roles(&mut self, out: &mut Vec<RoleDecl>) -> PResult<()> {
        self.expect_kw("roles")?;
        if self.eat(&Tok::Semi) {
            return Ok(());
        }
        loop {
            let (name, loc) = self.ident("role name")?;
            out.push(RoleDecl { name, loc });
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::Semi)?;
        Ok(())
    }

    fn member(&mut self) -> PResult<MemberDecl> {
        let loc = self.expect_kw("member")?;
        let principal = self.string("principal")?;
        self.expect(Tok::Colon)?;
        let mut roles = vec![self.ident("role name")?.0];
        while self.eat(&Tok::Comma) {
            roles.push(self.ident("role name")?.0);
        }
        self.expect(Tok::Semi)?;
        Ok(MemberDecl { principal, roles, loc })
    }

    fn schema(&mut self) -> PResult<SchemaDecl> {
        self.expect_kw("schema")?;
        let (event_type, loc) = self.ident("event type")?;
        self.expect(Tok::LParen)?;
        let mut parameters = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                let adornment = match self.peek() {
                    Tok::Kw("key") => Adornment::Key,
                    Tok::Kw("out") => Adornment::Out,
                    Tok::Kw("in") => Adornment::In,
                    _ => return Err(self.error("expected `key`, `out` or `in`")),
                };
                self.next();
                let (name, _) = self.ident("parameter name")?;
                self.expect(Tok::Colon)?;
                let kind = match self.peek() {
                    Tok::Kw("text") => ValueKind::Text,
                    Tok::Kw("int") => ValueKind::Int,
                    Tok::Kw("bool") => ValueKind::Bool,
                    _ => return Err(self.error("expected `text`, `int` or `bool`")),
                };
                self.next();
                parameters.push(Parameter { name, kind, adornment });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        self.expect(Tok::Semi)?;
        Ok(SchemaDecl { event_type, parameters, loc })
    }

    fn channel(&mut self) -> PResult<ChannelDecl> {
        let loc = self.expect_kw("channel")?;
        let (name, _) = self.ident("channel name")?;
        self.expect_kw("members")?;
        let mut members = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::Ident(r) => {
                    self.next();
                    members.push(ChannelMember::Role(r));
                }
                Tok::Str(p) => {
                    self.next();
                    members.push(ChannelMember::Principal(p));
                }
                _ => return Err(self.error("expected a role or principal")),
            }
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect_kw("carries")?;
        let mut carries = vec![self.ident("event type")?.0];
        while self.eat(&Tok::Comma) {
            carries.push(self.ident("event type")?.0);
        }
        self.expect(Tok::Semi)?;
        Ok(ChannelDecl { name, members, carries, loc })
    }

    fn counts_as(&mut self) -> PResult<CountsAsRule> {
        let loc = self.expect_kw("counts-as")?;
        let (event_type, ploc) = self.ident("event type")?;
        let constraints = self.constraints()?;
        self.expect_kw("by")?;
        let (required_role, _) = self.ident("role name")?;
        self.expect_kw("as")?;
        let (fact, _) = self.ident("fact name")?;
        let projection = self.constraints()?;
        self.expect(Tok::Semi)?;
        Ok(CountsAsRule {
            source: EventPattern { event_type, constraints, loc: ploc },
            required_role,
            fact,
            projection,
            loc,
        })
    }

    fn role_ref(&mut self) -> PResult<RoleRef> {
        let (role, loc) = self.ident("role name")?;
        self.expect(Tok::LParen)?;
        let party = match self.peek().clone() {
            Tok::Ident(v) => {
                self.next();
                Party::Var(v)
            }
            Tok::Str(p) => {
                self.next();
                Party::Principal(p)
            }
            _ => return Err(self.error("expected a variable or principal")),
        };
        self.expect(Tok::RParen)?;
        Ok(RoleRef { role, party, loc })
    }

    fn norm(&mut self, kind: NormKind) -> PResult<NormDecl> {
        let loc = self.next().loc;
        let (id, _) = self.ident("norm identifier")?;
        self.expect(Tok::LBrace)?;

        let mut subject = None;
        let mut object = None;
        let mut context = None;
        let mut create = None;
        let mut antecedent = None;
        let mut consequent = None;
        let mut exemption = None;
        let mut until = None;
        let mut within = None;
        let mut expires = None;

        let mut seen = BTreeSet::new();

        let close = loop {
            let kw = match self.peek().clone() {
                Tok::RBrace => break self.next().loc,
                Tok::Kw(k) => k,
                _ => return Err(self.error("expected a norm clause or `}`")),
            };
            let allowed = match kw {
                "subject" | "object" | "context" | "create" => true,
                "antecedent" | "consequent" | "within" | "expires" => kind == NormKind::Commitment,
                "forbids" | "unless" | "until" => kind == NormKind::Prohibition,
                _ => return Err(self.error("expected a norm clause or `}`")),
            };
            if !allowed {
                return Err(self.error(format!("`{kw}` is not allowed in a {}", kind.keyword())));
            }
            if !seen.insert(kw) {
                return Err(self.error(format!("duplicate `{kw}` clause")));
            }
            self.next();
            match kw {
                "subject" => subject = Some(self.role_ref()?),
                "object" => object = Some(self.role_ref()?),
                "context" => context = Some(self.role_ref()?),
                "create" => {
                    self.expect_kw("on")?;
                    create = Some(self.condition()?)
                }
                "antecedent" => antecedent = Some(self.condition()?),
                "consequent" | "forbids" => consequent = Some(self.condition()?),
                "unless" => exemption = Some(self.condition()?),
                "until" => until = Some(self.condition()?),
                "within" => {
                    let n = self.block_count()?;
                    self.expect_kw("blocks")?;
                    within = Some(n)
                }
                "expires" => {
                    self.expect_kw("after")?;
                    let n = self.block_count()?;
                    self.expect_kw("blocks")?;
                    expires = Some(n)
                }
                _ => unreachable!(),
            }
            self.expect(Tok::Semi)?;
        };

        let missing = |clause: &str| ParseError {
            line: close.line,
            col: close.col,
            message: format!("{} `{id}` is missing its `{clause}` clause", kind.keyword()),
            token: "}".into(),
        };
        let main_clause = match kind {
            NormKind::Commitment => "consequent",
            NormKind::Prohibition => "forbids",
        };
        Ok(NormDecl {
            subject: subject.ok_or_else(|| missing("subject"))?,
            object: object.ok_or_else(|| missing("object"))?,
            create: create.ok_or_else(|| missing("create on"))?,
            consequent: consequent.ok_or_else(|| missing(main_clause))?,
            id,
            kind,
            context,
            antecedent,
            exemption,
            within,
            expires,
            until,
            loc,
        })
    }

    fn condition(&mut self) -> PResult<Condition> {
        let mut lhs = self.conjunction()?;
        while self.at_kw("or") {
            self.next();
            let rhs = self.conjunction()?;
            lhs = Condition::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> PResult<Condition> {
        let mut lhs = self.sequence()?;
        while self.at_kw("and") {
            self.next();
            let rhs = self.sequence()?;
            lhs = Condition::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn sequence(&mut self) -> PResult<Condition> {
        let lhs = self.atom()?;
        if self.at_kw("before") {
            self.next();
            let rhs = self.atom()?;
            if self.at_kw("before") {
                return Err(self.error("`before` does not chain; add parentheses"));
            }
            return Ok(Condition::before(lhs, rhs));
        }
        Ok(lhs)
    }

    fn atom(&mut self) -> PResult<Condition> {
        match self.peek().clone() {
            Tok::LParen => {
                self.next();
                let c = self.condition()?;
                self.expect(Tok::RParen)?;
                Ok(c)
            }
            Tok::Ident(name) => {
                let loc = self.next().loc;
                let constraints = self.constraints()?;
                Ok(Condition::Event(EventPattern { event_type: name, constraints, loc }))
            }
            Tok::Kw(k) if NormState::from_name(k).is_some_and(|s| s != NormState::Active) => {
                let state = NormState::from_name(k).unwrap_or(NormState::Active);
                let loc = self.next().loc;
                self.expect(Tok::LParen)?;
                let (norm, _) = self.ident("norm identifier")?;
                let mut constraints = Vec::new();
                while self.eat(&Tok::Comma) {
                    constraints.push(self.constraint()?);
                }
                self.expect(Tok::RParen)?;
                Ok(Condition::Fact(FactPattern {
                    fact: FactRef::State(state, norm),
                    constraints,
                    loc,
                }))
            }
            _ => Err(self.error("expected a pattern or `(`")),
        }
    }

    fn constraints(&mut self) -> PResult<Vec<Constraint>> {
        self.expect(Tok::LParen)?;
        let mut out = Vec::new();
        if *self.peek() != Tok::RParen {
            out.push(self.constraint()?);
            while self.eat(&Tok::Comma) {
                out.push(self.constraint()?);
            }
        }
        self.expect(Tok::RParen)?;
        Ok(out)
    }

    fn constraint(&mut self) -> PResult<Constraint> {
        let (attr, _) = self.ident("attribute name")?;
        self.expect(Tok::Eq)?;
        let term = match self.peek().clone() {
            Tok::Ident(v) if v == "_" => Term::Wildcard,
            Tok::Ident(v) => Term::Var(v),
            Tok::Str(s) => Term::Lit(Value::Text(s)),
            Tok::Int(i) => Term::Lit(Value::Int(i)),
            Tok::Kw("true") => Term::Lit(Value::Bool(true)),
            Tok::Kw("false") => Term::Lit(Value::Bool(false)),
            _ => return Err(self.error("expected a variable, `_` or literal")),
        };
        self.next();
        Ok(Constraint { attr, term })
    }
}

fn resolve_facts(spec: &mut CompactSpec) {
    let facts: BTreeSet<String> = spec.counts_as.iter().map(|r| r.fact.clone()).collect();
    if facts.is_empty() {
        return;
    }
    fn walk(c: &mut Condition, facts: &BTreeSet<String>) {
        match c {
            Condition::Event(p) if facts.contains(&p.event_type) => {
                let p = p.clone();
                *c = Condition::Fact(FactPattern {
                    fact: FactRef::Institutional(p.event_type),
                    constraints: p.constraints,
                    loc: p.loc,
                });
            }
            Condition::Event(_) | Condition::Fact(_) => {}
            Condition::And(a, b) | Condition::Or(a, b) | Condition::Before(a, b) => {
                walk(a, facts);
                walk(b, facts);
            }
        }
    }
    for n in &mut spec.norms {
        walk(&mut n.create, &facts);
        walk(&mut n.consequent, &facts);
        for c in [&mut n.antecedent, &mut n.exemption, &mut n.until].into_iter().flatten() {
            walk(c, &facts);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
compact Demo context "org" {
  roles A, B;
  member "alice": A;
  schema Ask(key id: text, out who: text);
  schema Done(key id: text);
  commitment C1 {
    subject A(a);
    object B("org");
    create on Ask(id = x, who = a);
    consequent Done(id = x);
    within 5 blocks;
  }
}
"#;

    #[test]
    fn parses_small_compact() {
        let s = parse_compact(SMALL).unwrap();
        assert_eq!(s.name, "Demo");
        assert_eq!(s.context, "org");
        assert_eq!(s.roles.len(), 2);
        assert_eq!(s.members[0].roles, vec!["A"]);
        assert_eq!(s.schemas.len(), 2);
        let n = &s.norms[0];
        assert_eq!(n.within, Some(5));
        assert_eq!(n.object.party, Party::Principal("org".into()));
        assert_eq!(n.subject.loc.line, 8);
    }

    #[test]
    fn precedence_or_and_before() {
        let src = r#"compact X context "c" { prohibition P { subject A(a); object A(a);
            create on A(a = a) or B() and C() before D();
            forbids E(); } }"#;
        let s = parse_compact(src).unwrap();
        let c = &s.norms[0].create;
        let Condition::Or(_, rhs) = c else { panic!("{c:?}") };
        let Condition::And(_, r2) = rhs.as_ref() else { panic!() };
        assert!(matches!(r2.as_ref(), Condition::Before(..)));
    }

    #[test]
    fn before_is_non_associative() {
        let src = r#"compact X context "c" { prohibition P { subject A(a); object A(a);
            create on A() before B() before C(); forbids E(); } }"#;
        let e = parse_compact(src).unwrap_err();
        assert_eq!(e.line, 2);
        assert_eq!(e.token, "before");
    }

    #[test]
    fn empty_input_fails_at_origin() {
        let e = parse_compact("").unwrap_err();
        assert_eq!((e.line, e.col), (1, 1));
    }

    #[test]
    fn missing_clause_reported_at_close() {
        let src = "compact X context \"c\" {\n commitment C { subject A(a); object A(a); create on A(a = a);\n}\n}";
        let e = parse_compact(src).unwrap_err();
        assert_eq!(e.line, 3);
        assert!(e.message.contains("consequent"));
    }

    #[test]
    fn wrong_clause_for_kind() {
        let src = "compact X context \"c\" { prohibition P { within 3 blocks; } }";
        let e = parse_compact(src).unwrap_err();
        assert_eq!(e.token, "within");
    }

    #[test]
    fn duplicate_clause() {
        let src = "compact X context \"c\" { commitment C { subject A(a); subject A(b); } }";
        let e = parse_compact(src).unwrap_err();
        assert!(e.message.contains("duplicate"));
        assert_eq!(e.col, 54);
    }

    #[test]
    fn institutional_facts_resolved() {
        let src = r#"compact X context "c" {
  counts-as Say(v = "yes", who = w) by R as Agreed(who = w);
  commitment C { subject R(w); object R(w); create on Agreed(who = w); consequent Say(who = w); }
}"#;
        let s = parse_compact(src).unwrap();
        let n = &s.norms[0];
        assert!(matches!(&n.create, Condition::Fact(f) if f.fact == FactRef::Institutional("Agreed".into())));
        assert!(matches!(&n.consequent, Condition::Event(_)));
    }

    #[test]
    fn state_fact_pattern() {
        let src = r#"compact X context "c" { commitment C { subject R(w); object R(w);
            create on Violated(P1, patient = w, _x = _); consequent Say(who = w); } }"#;
        let s = parse_compact(src).unwrap();
        let Condition::Fact(f) = &s.norms[0].create else { panic!() };
        assert_eq!(f.fact, FactRef::State(NormState::Violated, "P1".into()));
        assert_eq!(f.constraints[1].term, Term::Wildcard);
    }
}
