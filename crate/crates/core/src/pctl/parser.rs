//! Recursive-descent parser for the property language.
//!
//! ```text
//! state   := implies
//! implies := or ( "->" implies )?
//! or      := and ( "or" and )*
//! and     := unary ( "and" unary )*
//! unary   := "not" unary | primary          (+ "X" unary inside a path)
//! primary := "true" | "false" | ident | "(" state ")" | "P" bound "[" path "]"
//! path    := "X" step | "F" step | "G" step | step "U" step
//! bound   := "=?" | ( "=" | "<" | "<=" | ">" | ">=" ) number
//! ```

use std::fmt;

use super::ast::{Bound, PctlFormula};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    /// Byte offset into the input.
    pub position: usize,
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error at position {}: expected ", self.position)?;
        match self.expected.as_slice() {
            [one] => write!(f, "{one}")?,
            many => write!(f, "one of {}", many.join(", "))?,
        }
        write!(f, ", found {}", self.found)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Arrow,
    Query,
    Eq,
    Lt,
    Le,
    Gt,
    Ge,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Number(n) => write!(f, "number {n}"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::LBracket => write!(f, "`[`"),
            Tok::RBracket => write!(f, "`]`"),
            Tok::Arrow => write!(f, "`->`"),
            Tok::Query => write!(f, "`=?`"),
            Tok::Eq => write!(f, "`=`"),
            Tok::Lt => write!(f, "`<`"),
            Tok::Le => write!(f, "`<=`"),
            Tok::Gt => write!(f, "`>`"),
            Tok::Ge => write!(f, "`>=`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

const KEYWORDS: [&str; 10] = ["P", "X", "F", "G", "U", "not", "and", "or", "true", "false"];

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = |t| Some((t, 1));
        let two = |next: u8, long, short| {
            if bytes.get(i + 1) == Some(&next) {
                Some((long, 2))
            } else {
                Some((short, 1))
            }
        };
        let punct = match c {
            b'(' => single(Tok::LParen),
            b')' => single(Tok::RParen),
            b'[' => single(Tok::LBracket),
            b']' => single(Tok::RBracket),
            b'=' => two(b'?', Tok::Query, Tok::Eq),
            b'<' => two(b'=', Tok::Le, Tok::Lt),
            b'>' => two(b'=', Tok::Ge, Tok::Gt),
            b'-' if bytes.get(i + 1) == Some(&b'>') => Some((Tok::Arrow, 2)),
            _ => None,
        };
        if let Some((tok, len)) = punct {
            out.push((tok, start));
            i += len;
        } else if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), start));
        } else if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let value = text[start..i].parse::<f64>().map_err(|_| ParseError {
                position: start,
                expected: vec!["number".into()],
                found: format!("`{}`", &text[start..i]),
            })?;
            out.push((Tok::Number(value), start));
        } else {
            let ch = text[i..].chars().next().unwrap_or('?');
            return Err(ParseError {
                position: start,
                expected: vec!["formula".into()],
                found: format!("character `{ch}`"),
            });
        }
    }
    out.push((Tok::Eof, text.len()));
    Ok(out)
}

struct Parser {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
}

fn is_kw(tok: &Tok, kw: &str) -> bool {
    matches!(tok, Tok::Ident(s) if s == kw)
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].0
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.pos].0.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        ParseError {
            position: self.offset(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().to_string(),
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if is_kw(self.peek(), kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, label: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[label]))
        }
    }

    /// `in_path` enables `X` lookahead inside path operands.
    fn implies(&mut self, in_path: bool) -> Result<PctlFormula, ParseError> {
        let lhs = self.or(in_path)?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.implies(in_path)?;
            return Ok(PctlFormula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self, in_path: bool) -> Result<PctlFormula, ParseError> {
        let mut lhs = self.and(in_path)?;
        while self.eat_kw("or") {
            let rhs = self.and(in_path)?;
            lhs = PctlFormula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self, in_path: bool) -> Result<PctlFormula, ParseError> {
        let mut lhs = self.unary(in_path)?;
        while self.eat_kw("and") {
            let rhs = self.unary(in_path)?;
            lhs = PctlFormula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self, in_path: bool) -> Result<PctlFormula, ParseError> {
        if self.eat_kw("not") {
            return Ok(PctlFormula::not(self.unary(in_path)?));
        }
        if in_path && self.eat_kw("X") {
            return Ok(PctlFormula::next(self.unary(in_path)?));
        }
        self.primary(in_path)
    }

    fn primary(&mut self, in_path: bool) -> Result<PctlFormula, ParseError> {
        let start = self.offset();
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let inner = self.implies(in_path)?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(s) if s == "true" => {
                self.bump();
                Ok(PctlFormula::True)
            }
            Tok::Ident(s) if s == "false" => {
                self.bump();
                Ok(PctlFormula::False)
            }
            Tok::Ident(s) if s == "P" => {
                let f = self.probability()?;
                if let PctlFormula::Prob { bound: Bound::Query, .. } = f {
                    return Err(ParseError {
                        position: start,
                        expected: vec!["probability bound (=?, is only allowed at top level)".into()],
                        found: "`=?`".into(),
                    });
                }
                Ok(f)
            }
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(PctlFormula::Atom(s))
            }
            _ => Err(self.error(&["atom", "`true`", "`false`", "`not`", "`(`", "`P`"])),
        }
    }

    fn bound(&mut self) -> Result<Bound, ParseError> {
        let make: fn(f64) -> Bound = match self.peek() {
            Tok::Query => {
                self.bump();
                return Ok(Bound::Query);
            }
            Tok::Eq => Bound::Eq,
            Tok::Lt => Bound::Lt,
            Tok::Le => Bound::Le,
            Tok::Gt => Bound::Gt,
            Tok::Ge => Bound::Ge,
            _ => return Err(self.error(&["`=?`", "`=`", "`<`", "`<=`", "`>`", "`>=`"])),
        };
        self.bump();
        match self.peek().clone() {
            Tok::Number(v) if (0.0..=1.0).contains(&v) => {
                self.bump();
                Ok(make(v))
            }
            Tok::Number(_) => Err(self.error(&["probability in [0, 1]"])),
            _ => Err(self.error(&["number"])),
        }
    }

    fn probability(&mut self) -> Result<PctlFormula, ParseError> {
        if !self.eat_kw("P") {
            return Err(self.error(&["`P`"]));
        }
        let bound = self.bound()?;
        self.expect(Tok::LBracket, "`[`")?;
        let path = self.path()?;
        self.expect(Tok::RBracket, "`]`")?;
        Ok(PctlFormula::prob(bound, path))
    }

    fn path(&mut self) -> Result<PctlFormula, ParseError> {
        if self.eat_kw("X") {
            return Ok(PctlFormula::next(self.implies(true)?));
        }
        if self.eat_kw("F") {
            return Ok(PctlFormula::future(self.implies(true)?));
        }
        if self.eat_kw("G") {
            return Ok(PctlFormula::globally(self.implies(true)?));
        }
        let lhs = self.implies(true)?;
        if self.eat_kw("U") {
            let rhs = self.implies(true)?;
            return Ok(PctlFormula::until(lhs, rhs));
        }
        Err(self.error(&["`U`"]))
    }
}

/// Parses a complete formula.
pub fn parse_pctl(text: &str) -> Result<PctlFormula, ParseError> {
    let mut p = Parser { tokens: lex(text)?, pos: 0 };
    let f = if is_kw(p.peek(), "P") {
        // A top-level probability operator may be a query, and may still be
        // combined with boolean connectives when it is bounded.
        let save = p.pos;
        let first = p.probability()?;
        if first.is_query() {
            first
        } else {
            p.pos = save;
            p.implies(false)?
        }
    } else {
        p.implies(false)?
    };
    if *p.peek() != Tok::Eof {
        return Err(p.error(&["end of input", "`and`", "`or`", "`->`"]));
    }
    Ok(f)
}
