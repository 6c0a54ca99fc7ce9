use std::fmt;

use serde::{Deserialize, Serialize};

/// Comparison carried by a probability operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", content = "value", rename_all = "snake_case")]
pub enum Bound {
    /// `=?`: compute the probability.
    Query,
    Eq(f64),
    Lt(f64),
    Le(f64),
    Gt(f64),
    Ge(f64),
}

impl Bound {
    pub fn value(&self) -> Option<f64> {
        match *self {
            Bound::Query => None,
            Bound::Eq(v) | Bound::Lt(v) | Bound::Le(v) | Bound::Gt(v) | Bound::Ge(v) => Some(v),
        }
    }

    /// Compares a computed probability against the bound with absolute
    /// tolerance `tol`. Strict bounds against 0 and 1 are decided on the exact
    /// value, since the graph analysis produces exact zeros and ones.
    pub fn holds(&self, p: f64, tol: f64) -> bool {
        match *self {
            Bound::Query => true,
            Bound::Eq(v) => (p - v).abs() <= tol,
            Bound::Le(v) => p <= v + tol,
            Bound::Ge(v) => p >= v - tol,
            Bound::Gt(v) if v == 0.0 => p > 0.0,
            Bound::Gt(v) => p > v + tol,
            Bound::Lt(v) if v == 1.0 => p < 1.0,
            Bound::Lt(v) => p < v - tol,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Query => write!(f, "=?"),
            Bound::Eq(v) => write!(f, "={v}"),
            Bound::Lt(v) => write!(f, "<{v}"),
            Bound::Le(v) => write!(f, "<={v}"),
            Bound::Gt(v) => write!(f, ">{v}"),
            Bound::Ge(v) => write!(f, ">={v}"),
        }
    }
}

/// PCTL formula.
///
/// State formulas are the boolean layer plus `Prob`; `Next`, `Future`,
/// `Globally` and `Until` only occur as the path under a `Prob`. The operands
/// of a path operator are state formulas, optionally with `Next` lookahead
/// (as in `G (a -> X b)`); the parser enforces this shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PctlFormula {
    True,
    False,
    Atom(String),
    Not(Box<PctlFormula>),
    And(Box<PctlFormula>, Box<PctlFormula>),
    Or(Box<PctlFormula>, Box<PctlFormula>),
    Implies(Box<PctlFormula>, Box<PctlFormula>),
    Prob { bound: Bound, path: Box<PctlFormula> },
    Next(Box<PctlFormula>),
    Future(Box<PctlFormula>),
    Globally(Box<PctlFormula>),
    Until(Box<PctlFormula>, Box<PctlFormula>),
}

impl PctlFormula {
    pub fn atom(name: &str) -> Self {
        PctlFormula::Atom(name.to_string())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: PctlFormula) -> Self {
        PctlFormula::Not(Box::new(f))
    }

    pub fn and(a: PctlFormula, b: PctlFormula) -> Self {
        PctlFormula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: PctlFormula, b: PctlFormula) -> Self {
        PctlFormula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: PctlFormula, b: PctlFormula) -> Self {
        PctlFormula::Implies(Box::new(a), Box::new(b))
    }

    pub fn prob(bound: Bound, path: PctlFormula) -> Self {
        PctlFormula::Prob { bound, path: Box::new(path) }
    }

    pub fn next(f: PctlFormula) -> Self {
        PctlFormula::Next(Box::new(f))
    }

    pub fn future(f: PctlFormula) -> Self {
        PctlFormula::Future(Box::new(f))
    }

    pub fn globally(f: PctlFormula) -> Self {
        PctlFormula::Globally(Box::new(f))
    }

    pub fn until(a: PctlFormula, b: PctlFormula) -> Self {
        PctlFormula::Until(Box::new(a), Box::new(b))
    }

    /// Top-level `P =? [...]`.
    pub fn is_query(&self) -> bool {
        matches!(self, PctlFormula::Prob { bound: Bound::Query, .. })
    }

    pub fn atoms(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            PctlFormula::True | PctlFormula::False => {}
            PctlFormula::Atom(a) => out.push(a),
            PctlFormula::Not(f)
            | PctlFormula::Next(f)
            | PctlFormula::Future(f)
            | PctlFormula::Globally(f)
            | PctlFormula::Prob { path: f, .. } => f.collect_atoms(out),
            PctlFormula::And(a, b) | PctlFormula::Or(a, b) | PctlFormula::Implies(a, b) | PctlFormula::Until(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    /// Depth of nested `Next` lookahead inside a step formula.
    pub(crate) fn lookahead(&self) -> usize {
        match self {
            PctlFormula::True | PctlFormula::False | PctlFormula::Atom(_) | PctlFormula::Prob { .. } => 0,
            PctlFormula::Not(f) => f.lookahead(),
            PctlFormula::And(a, b) | PctlFormula::Or(a, b) | PctlFormula::Implies(a, b) => {
                a.lookahead().max(b.lookahead())
            }
            PctlFormula::Next(f) => 1 + f.lookahead(),
            PctlFormula::Future(f) | PctlFormula::Globally(f) => f.lookahead(),
            PctlFormula::Until(a, b) => a.lookahead().max(b.lookahead()),
        }
    }
}

fn precedence(f: &PctlFormula) -> u8 {
    match f {
        PctlFormula::Implies(..) => 1,
        PctlFormula::Until(..) => 2,
        PctlFormula::Or(..) => 3,
        PctlFormula::And(..) => 4,
        PctlFormula::Not(_) | PctlFormula::Next(_) | PctlFormula::Future(_) | PctlFormula::Globally(_) => 5,
        _ => 6,
    }
}

struct Paren<'a>(&'a PctlFormula, u8);

impl fmt::Display for Paren<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if precedence(self.0) < self.1 {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// Prints in the same surface syntax the parser reads.
impl fmt::Display for PctlFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PctlFormula::True => write!(f, "true"),
            PctlFormula::False => write!(f, "false"),
            PctlFormula::Atom(a) => write!(f, "{a}"),
            PctlFormula::Not(x) => write!(f, "not {}", Paren(x, 5)),
            PctlFormula::And(a, b) => write!(f, "{} and {}", Paren(a, 4), Paren(b, 5)),
            PctlFormula::Or(a, b) => write!(f, "{} or {}", Paren(a, 3), Paren(b, 4)),
            PctlFormula::Implies(a, b) => write!(f, "{} -> {}", Paren(a, 2), Paren(b, 1)),
            PctlFormula::Prob { bound, path } => write!(f, "P {bound} [{path}]"),
            PctlFormula::Next(x) => write!(f, "X {}", Paren(x, 5)),
            PctlFormula::Future(x) => write!(f, "F {}", Paren(x, 5)),
            PctlFormula::Globally(x) => write!(f, "G {}", Paren(x, 5)),
            PctlFormula::Until(a, b) => write!(f, "{} U {}", Paren(a, 3), Paren(b, 3)),
        }
    }
}
