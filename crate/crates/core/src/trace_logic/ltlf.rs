use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ClassTrace, TraceError};
use crate::class::PatientClass;

/// Linear temporal logic over finite class traces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum LtlfFormula {
    True,
    False,
    Atom(PatientClass),
    Not(Box<LtlfFormula>),
    And(Box<LtlfFormula>, Box<LtlfFormula>),
    Or(Box<LtlfFormula>, Box<LtlfFormula>),
    Implies(Box<LtlfFormula>, Box<LtlfFormula>),
    /// Strong next: a successor position exists and satisfies the operand.
    Next(Box<LtlfFormula>),
    /// Weak next: there is no successor, or it satisfies the operand.
    WeakNext(Box<LtlfFormula>),
    Future(Box<LtlfFormula>),
    Globally(Box<LtlfFormula>),
    Until(Box<LtlfFormula>, Box<LtlfFormula>),
}

impl LtlfFormula {
    pub fn atom(c: PatientClass) -> Self {
        LtlfFormula::Atom(c)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Self) -> Self {
        LtlfFormula::Not(Box::new(f))
    }

    pub fn and(a: Self, b: Self) -> Self {
        LtlfFormula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Self, b: Self) -> Self {
        LtlfFormula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Self, b: Self) -> Self {
        LtlfFormula::Implies(Box::new(a), Box::new(b))
    }

    pub fn next(f: Self) -> Self {
        LtlfFormula::Next(Box::new(f))
    }

    pub fn weak_next(f: Self) -> Self {
        LtlfFormula::WeakNext(Box::new(f))
    }

    pub fn future(f: Self) -> Self {
        LtlfFormula::Future(Box::new(f))
    }

    pub fn globally(f: Self) -> Self {
        LtlfFormula::Globally(Box::new(f))
    }

    pub fn until(a: Self, b: Self) -> Self {
        LtlfFormula::Until(Box::new(a), Box::new(b))
    }

    /// `c1 and F (c2 and F (c1 and ...))` with `2 * cycles` atoms.
    pub fn oscillation(first: PatientClass, second: PatientClass, cycles: usize) -> Self {
        let atoms: Vec<PatientClass> = (0..2 * cycles).map(|i| if i % 2 == 0 { first } else { second }).collect();
        let mut f = LtlfFormula::Atom(*atoms.last().expect("at least one cycle"));
        for &c in atoms.iter().rev().skip(1) {
            f = LtlfFormula::and(LtlfFormula::Atom(c), LtlfFormula::future(f));
        }
        f
    }

    /// `c and X (c and X (... c))` with `k` atoms.
    pub fn repeated(class: PatientClass, k: usize) -> Self {
        let mut f = LtlfFormula::Atom(class);
        for _ in 1..k {
            f = LtlfFormula::and(LtlfFormula::Atom(class), LtlfFormula::next(f));
        }
        f
    }
}

fn precedence(f: &LtlfFormula) -> u8 {
    match f {
        LtlfFormula::Implies(..) => 1,
        LtlfFormula::Or(..) => 2,
        LtlfFormula::And(..) => 3,
        LtlfFormula::Until(..) => 4,
        LtlfFormula::Not(_)
        | LtlfFormula::Next(_)
        | LtlfFormula::WeakNext(_)
        | LtlfFormula::Future(_)
        | LtlfFormula::Globally(_) => 5,
        _ => 6,
    }
}

struct Paren<'a>(&'a LtlfFormula, u8);

impl fmt::Display for Paren<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if precedence(self.0) < self.1 {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl fmt::Display for LtlfFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LtlfFormula::True => write!(f, "true"),
            LtlfFormula::False => write!(f, "false"),
            LtlfFormula::Atom(c) => write!(f, "{c}"),
            LtlfFormula::Not(x) => write!(f, "not {}", Paren(x, 5)),
            LtlfFormula::And(a, b) => write!(f, "{} and {}", Paren(a, 3), Paren(b, 4)),
            LtlfFormula::Or(a, b) => write!(f, "{} or {}", Paren(a, 2), Paren(b, 3)),
            LtlfFormula::Implies(a, b) => write!(f, "{} -> {}", Paren(a, 2), Paren(b, 1)),
            LtlfFormula::Next(x) => write!(f, "X {}", Paren(x, 5)),
            LtlfFormula::WeakNext(x) => write!(f, "WX {}", Paren(x, 5)),
            LtlfFormula::Future(x) => write!(f, "F {}", Paren(x, 5)),
            LtlfFormula::Globally(x) => write!(f, "G {}", Paren(x, 5)),
            LtlfFormula::Until(a, b) => write!(f, "{} U {}", Paren(a, 5), Paren(b, 4)),
        }
    }
}

/// Finite-trace satisfaction at position `i`.
pub fn eval_ltlf(trace: &ClassTrace, formula: &LtlfFormula, i: usize) -> Result<bool, TraceError> {
    let n = trace.len();
    if i >= n {
        return Err(TraceError::PositionOutOfRange { position: i, len: n });
    }
    Ok(eval_at(trace.entries(), formula, i))
}

fn eval_at(t: &[PatientClass], f: &LtlfFormula, i: usize) -> bool {
    let n = t.len();
    match f {
        LtlfFormula::True => true,
        LtlfFormula::False => false,
        LtlfFormula::Atom(c) => t[i] == *c,
        LtlfFormula::Not(g) => !eval_at(t, g, i),
        LtlfFormula::And(a, b) => eval_at(t, a, i) && eval_at(t, b, i),
        LtlfFormula::Or(a, b) => eval_at(t, a, i) || eval_at(t, b, i),
        LtlfFormula::Implies(a, b) => !eval_at(t, a, i) || eval_at(t, b, i),
        LtlfFormula::Next(g) => i + 1 < n && eval_at(t, g, i + 1),
        LtlfFormula::WeakNext(g) => i + 1 >= n || eval_at(t, g, i + 1),
        LtlfFormula::Future(g) => (i..n).any(|j| eval_at(t, g, j)),
        LtlfFormula::Globally(g) => (i..n).all(|j| eval_at(t, g, j)),
        LtlfFormula::Until(a, b) => {
            for j in i..n {
                if eval_at(t, b, j) {
                    return true;
                }
                if !eval_at(t, a, j) {
                    return false;
                }
            }
            false
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("syntax error at position {position}: expected {expected}, found {found}")]
pub struct LtlfParseError {
    pub position: usize,
    pub expected: String,
    pub found: String,
}

/// Parses formulas such as `h and X (h and X h)`. Atoms are the class
/// symbols `h`, `m`, `M`; `WX` is weak next.
pub fn parse_ltlf(text: &str) -> Result<LtlfFormula, LtlfParseError> {
    let tokens = tokenize(text)?;
    let mut p = LtlfParser { tokens, pos: 0, end: text.len() };
    let f = p.implies()?;
    if p.pos != p.tokens.len() {
        return Err(p.error("end of input"));
    }
    Ok(f)
}

fn tokenize(text: &str) -> Result<Vec<(String, usize)>, LtlfParseError> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '(' || c == ')' {
            out.push((c.to_string(), i));
            chars.next();
        } else if c == '-' {
            chars.next();
            match chars.next() {
                Some((_, '>')) => out.push(("->".into(), i)),
                _ => {
                    return Err(LtlfParseError { position: i, expected: "`->`".into(), found: "`-`".into() });
                }
            }
        } else if c.is_alphanumeric() || c == '_' {
            let mut word = String::new();
            while let Some(&(_, d)) = chars.peek() {
                if d.is_alphanumeric() || d == '_' {
                    word.push(d);
                    chars.next();
                } else {
                    break;
                }
            }
            out.push((word, i));
        } else {
            return Err(LtlfParseError { position: i, expected: "formula".into(), found: format!("`{c}`") });
        }
    }
    Ok(out)
}

struct LtlfParser {
    tokens: Vec<(String, usize)>,
    pos: usize,
    end: usize,
}

impl LtlfParser {
    fn peek(&self) -> Option<&str> {
        self.tokens.get(self.pos).map(|(t, _)| t.as_str())
    }

    fn error(&self, expected: &str) -> LtlfParseError {
        match self.tokens.get(self.pos) {
            Some((t, p)) => LtlfParseError { position: *p, expected: expected.into(), found: format!("`{t}`") },
            None => LtlfParseError { position: self.end, expected: expected.into(), found: "end of input".into() },
        }
    }

    fn eat(&mut self, tok: &str) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn implies(&mut self) -> Result<LtlfFormula, LtlfParseError> {
        let lhs = self.or()?;
        if self.eat("->") {
            return Ok(LtlfFormula::implies(lhs, self.implies()?));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<LtlfFormula, LtlfParseError> {
        let mut lhs = self.and()?;
        while self.eat("or") {
            lhs = LtlfFormula::or(lhs, self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<LtlfFormula, LtlfParseError> {
        let mut lhs = self.until()?;
        while self.eat("and") {
            lhs = LtlfFormula::and(lhs, self.until()?);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<LtlfFormula, LtlfParseError> {
        let lhs = self.unary()?;
        if self.eat("U") {
            return Ok(LtlfFormula::until(lhs, self.until()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<LtlfFormula, LtlfParseError> {
        let wrap: Option<fn(LtlfFormula) -> LtlfFormula> = match self.peek() {
            Some("not") => Some(LtlfFormula::not),
            Some("X") => Some(LtlfFormula::next),
            Some("WX") => Some(LtlfFormula::weak_next),
            Some("F") => Some(LtlfFormula::future),
            Some("G") => Some(LtlfFormula::globally),
            _ => None,
        };
        if let Some(wrap) = wrap {
            self.pos += 1;
            return Ok(wrap(self.unary()?));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<LtlfFormula, LtlfParseError> {
        let tok = self.peek().map(str::to_string);
        match tok.as_deref() {
            Some("(") => {
                self.pos += 1;
                let f = self.implies()?;
                if !self.eat(")") {
                    return Err(self.error("`)`"));
                }
                Ok(f)
            }
            Some("true") => {
                self.pos += 1;
                Ok(LtlfFormula::True)
            }
            Some("false") => {
                self.pos += 1;
                Ok(LtlfFormula::False)
            }
            Some(t) => {
                let class = match t {
                    "𝔥" => Some(PatientClass::Healthy),
                    "𝔪" => Some(PatientClass::MildNcd),
                    "𝔐" => Some(PatientClass::MajorNcd),
                    _ => t.parse().ok().filter(|_| t.chars().count() == 1),
                };
                match class {
                    Some(c) => {
                        self.pos += 1;
                        Ok(LtlfFormula::Atom(c))
                    }
                    None => Err(self.error("class atom (h, m or M)")),
                }
            }
            None => Err(self.error("formula")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use PatientClass::*;

    fn trace(s: &str) -> ClassTrace {
        s.parse().unwrap()
    }

    #[test]
    fn atom_at_position() {
        assert!(eval_ltlf(&trace("h"), &LtlfFormula::atom(Healthy), 0).unwrap());
    }

    #[test]
    fn strong_next_needs_a_successor() {
        let f = parse_ltlf("h and X(h and X h)").unwrap();
        assert_eq!(f, LtlfFormula::repeated(Healthy, 3));
        assert!(eval_ltlf(&trace("hhh"), &f, 0).unwrap());
        assert!(!eval_ltlf(&trace("hh"), &f, 0).unwrap());
    }

    #[test]
    fn weak_next_at_end() {
        let t = trace("hm");
        assert!(eval_ltlf(&t, &parse_ltlf("WX false").unwrap(), 1).unwrap());
        assert!(!eval_ltlf(&t, &parse_ltlf("X true").unwrap(), 1).unwrap());
        assert!(eval_ltlf(&t, &parse_ltlf("WX m").unwrap(), 0).unwrap());
    }

    #[test]
    fn future_globally_until() {
        let t = trace("hmMm");
        assert!(eval_ltlf(&t, &parse_ltlf("F M").unwrap(), 0).unwrap());
        assert!(!eval_ltlf(&t, &parse_ltlf("F h").unwrap(), 1).unwrap());
        assert!(eval_ltlf(&t, &parse_ltlf("G not h").unwrap(), 1).unwrap());
        assert!(eval_ltlf(&t, &parse_ltlf("not M U M").unwrap(), 0).unwrap());
        assert!(!eval_ltlf(&t, &parse_ltlf("h U M").unwrap(), 0).unwrap());
    }

    #[test]
    fn position_out_of_range() {
        assert_eq!(
            eval_ltlf(&trace("h"), &LtlfFormula::True, 1),
            Err(TraceError::PositionOutOfRange { position: 1, len: 1 })
        );
    }

    #[test]
    fn nested_future_formula_matches_builder() {
        let text = "m and F (M and F (m and F (M and F(m and F (M and F (m and F M))))))";
        assert_eq!(parse_ltlf(text).unwrap(), LtlfFormula::oscillation(MildNcd, MajorNcd, 4));
        assert_eq!(parse_ltlf("𝔪 and F 𝔐").unwrap(), LtlfFormula::oscillation(MildNcd, MajorNcd, 1));
    }

    #[test]
    fn display_round_trips() {
        for text in ["h and X(h and X h)", "(h U m) U M", "not (h or m) -> WX G M", "F (h -> X m) and M"] {
            let f = parse_ltlf(text).unwrap();
            assert_eq!(parse_ltlf(&f.to_string()).unwrap(), f, "{text} -> {f}");
        }
    }

    #[test]
    fn parse_errors() {
        assert!(parse_ltlf("h and").is_err());
        assert!(parse_ltlf("q").is_err());
        assert!(parse_ltlf("(h").is_err());
        assert!(parse_ltlf("h - m").is_err());
    }
}
