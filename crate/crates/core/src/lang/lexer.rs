use std::fmt;

use super::ast::Loc;
use super::ParseError;

pub(crate) const KEYWORDS: &[&str] = &[
    "compact", "context", "roles", "member", "schema", "channel", "members", "carries", "counts-as",
    "by", "as", "commitment", "prohibition", "subject", "object", "create", "on", "antecedent",
    "consequent", "forbids", "unless", "until", "within", "blocks", "expires", "after", "and", "or",
    "before", "key", "out", "in", "text", "int", "bool", "true", "false", "Detached", "Satisfied",
    "Violated", "Expired",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Kw(&'static str),
    Str(String),
    Int(i64),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Colon,
    Eq,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => f.write_str(s),
            Tok::Kw(k) => f.write_str(k),
            Tok::Str(s) => write!(f, "{s:?}"),
            Tok::Int(i) => write!(f, "{i}"),
            Tok::LParen => f.write_str("("),
            Tok::RParen => f.write_str(")"),
            Tok::LBrace => f.write_str("{"),
            Tok::RBrace => f.write_str("}"),
            Tok::Comma => f.write_str(","),
            Tok::Semi => f.write_str(";"),
            Tok::Colon => f.write_str(":"),
            Tok::Eq => f.write_str("="),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub loc: Loc,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);

    macro_rules! bump {
        () => {{
            let c = chars[i];
            i += 1;
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        let loc = Loc::new(line, col);
        let err = |message: &str, token: String| ParseError {
            line: loc.line,
            col: loc.col,
            message: message.to_string(),
            token,
        };
        let tok = match c {
            '(' => { bump!(); Tok::LParen }
            ')' => { bump!(); Tok::RParen }
            '{' => { bump!(); Tok::LBrace }
            '}' => { bump!(); Tok::RBrace }
            ',' => { bump!(); Tok::Comma }
            ';' => { bump!(); Tok::Semi }
            ':' => { bump!(); Tok::Colon }
            '=' => { bump!(); Tok::Eq }
            '"' => {
                bump!();
                let mut s = String::new();
                loop {
                    if i >= chars.len() || chars[i] == '\n' {
                        return Err(err("unterminated string literal", format!("\"{s}")));
                    }
                    match bump!() {
                        '"' => break,
                        '\\' => {
                            let esc = if i < chars.len() { bump!() } else { '\0' };
                            match esc {
                                '"' => s.push('"'),
                                '\\' => s.push('\\'),
                                'n' => s.push('\n'),
                                't' => s.push('\t'),
                                other => {
                                    return Err(err("unknown escape sequence", format!("\\{other}")))
                                }
                            }
                        }
                        ch => s.push(ch),
                    }
                }
                Tok::Str(s)
            }
            c if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                let mut s = String::new();
                s.push(bump!());
                while i < chars.len() && chars[i].is_ascii_digit() {
                    s.push(bump!());
                }
                if i < chars.len() && is_ident_char(chars[i]) {
                    return Err(err("malformed number", format!("{s}{}", chars[i])));
                }
                match s.parse::<i64>() {
                    Ok(v) => Tok::Int(v),
                    Err(_) => return Err(err("integer out of range", s)),
                }
            }
            c if is_ident_start(c) => {
                let mut s = String::new();
                while i < chars.len() && is_ident_char(chars[i]) {
                    s.push(bump!());
                }
                if s == "counts"
                    && chars.get(i) == Some(&'-')
                    && chars.get(i + 1) == Some(&'a')
                    && chars.get(i + 2) == Some(&'s')
                    && !chars.get(i + 3).is_some_and(|c| is_ident_char(*c))
                {
                    bump!();
                    bump!();
                    bump!();
                    s.push_str("-as");
                }
                match KEYWORDS.iter().find(|k| **k == s) {
                    Some(k) => Tok::Kw(k),
                    None => Tok::Ident(s),
                }
            }
            other => return Err(err("unexpected character", other.to_string())),
        };
        out.push(Token { tok, loc });
    }
    out.push(Token { tok: Tok::Eof, loc: Loc::new(line, col) });
    Ok(out)
}
