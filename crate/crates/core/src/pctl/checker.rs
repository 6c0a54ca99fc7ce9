use std::collections::{HashMap, VecDeque};
use std::rc::Rc;

use serde::Serialize;

use super::ast::{Bound, PctlFormula};
use super::solver::{LinearSystem, SolverConfig};
use super::CheckError;
use crate::game_model::{Pdfa, StateId};

/// Outcome of checking a formula at one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum PctlResult {
    Verdict(bool),
    Probability(f64),
}

impl PctlResult {
    pub fn verdict(&self) -> Option<bool> {
        match self {
            PctlResult::Verdict(v) => Some(*v),
            PctlResult::Probability(_) => None,
        }
    }

    pub fn probability(&self) -> Option<f64> {
        match self {
            PctlResult::Probability(p) => Some(*p),
            PctlResult::Verdict(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckerConfig {
    /// Absolute tolerance for comparing probabilities against bounds.
    pub tolerance: f64,
    pub solver: SolverConfig,
    /// Upper limit on the size of the lookahead product for `X` inside paths.
    pub max_product_states: usize,
}

impl Default for CheckerConfig {
    fn default() -> Self {
        CheckerConfig { tolerance: 1e-9, solver: SolverConfig::default(), max_product_states: 2_000_000 }
    }
}

/// Sparse Markov chain: successor rows and predecessor lists.
#[derive(Debug, Clone)]
struct Chain {
    rows: Vec<Vec<(usize, f64)>>,
    preds: Vec<Vec<usize>>,
}

impl Chain {
    fn new(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut preds = vec![Vec::new(); rows.len()];
        for (s, row) in rows.iter().enumerate() {
            for &(t, p) in row {
                if p > 0.0 {
                    preds[t].push(s);
                }
            }
        }
        Chain { rows, preds }
    }

    fn len(&self) -> usize {
        self.rows.len()
    }

    /// States reachable backwards from `targets`, moving only through `via`.
    fn backward_reach(&self, targets: &[bool], via: &[bool]) -> Vec<bool> {
        let mut seen = targets.to_vec();
        let mut queue: VecDeque<usize> = (0..self.len()).filter(|&s| targets[s]).collect();
        while let Some(t) = queue.pop_front() {
            for &s in &self.preds[t] {
                if !seen[s] && via[s] {
                    seen[s] = true;
                    queue.push_back(s);
                }
            }
        }
        seen
    }

    /// Exact probabilities of `phi1 U phi2`, with the graph-determined
    /// zero and one states returned alongside.
    fn until(&self, phi1: &[bool], phi2: &[bool], solver: &SolverConfig) -> Result<UntilSolution, CheckError> {
        let n = self.len();
        let can_reach = self.backward_reach(phi2, phi1);
        let no: Vec<bool> = can_reach.iter().map(|r| !r).collect();
        let pending: Vec<bool> = (0..n).map(|s| phi1[s] && !phi2[s]).collect();
        let may_fail = self.backward_reach(&no, &pending);
        let yes: Vec<bool> = may_fail.iter().map(|r| !r).collect();

        let maybe: Vec<usize> = (0..n).filter(|&s| !yes[s] && !no[s]).collect();
        let mut index = vec![usize::MAX; n];
        for (i, &s) in maybe.iter().enumerate() {
            index[s] = i;
        }
        let mut system = LinearSystem { rows: Vec::with_capacity(maybe.len()), rhs: Vec::with_capacity(maybe.len()) };
        for &s in &maybe {
            let mut row = Vec::new();
            let mut rhs = 0.0;
            for &(t, p) in &self.rows[s] {
                if yes[t] {
                    rhs += p;
                } else if index[t] != usize::MAX {
                    row.push((index[t], p));
                }
            }
            system.rows.push(row);
            system.rhs.push(rhs);
        }
        let solved = system.solve(solver)?;

        let mut probs: Vec<f64> = yes.iter().map(|&y| if y { 1.0 } else { 0.0 }).collect();
        for (i, &s) in maybe.iter().enumerate() {
            probs[s] = solved[i].clamp(0.0, 1.0);
        }
        Ok(UntilSolution { probs, yes, no })
    }

    fn next(&self, phi: &[bool]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().filter(|(t, _)| phi[*t]).map(|(_, p)| p).sum::<f64>().clamp(0.0, 1.0))
            .collect()
    }
}

/// Result of an unbounded until query over every state.
#[derive(Debug, Clone, PartialEq)]
pub struct UntilSolution {
    pub probs: Vec<f64>,
    /// States satisfying the until with probability exactly one.
    pub yes: Vec<bool>,
    /// States satisfying it with probability zero.
    pub no: Vec<bool>,
}

/// Step formula compiled against a model: boolean structure over state sets,
/// with `Next` shifting the evaluation position.
enum Step {
    Const(bool),
    Set(Rc<Vec<bool>>),
    Not(Box<Step>),
    And(Box<Step>, Box<Step>),
    Or(Box<Step>, Box<Step>),
    Next(Box<Step>),
}

impl Step {
    fn eval(&self, window: &[usize]) -> bool {
        match self {
            Step::Const(b) => *b,
            Step::Set(s) => s[window[0]],
            Step::Not(f) => !f.eval(window),
            Step::And(a, b) => a.eval(window) && b.eval(window),
            Step::Or(a, b) => a.eval(window) || b.eval(window),
            Step::Next(f) => f.eval(&window[1..]),
        }
    }
}

/// PCTL model checker over the Markov chain induced by a PDFA.
pub struct Checker<'m> {
    model: &'m Pdfa,
    chain: Chain,
    config: CheckerConfig,
}

impl<'m> Checker<'m> {
    pub fn new(model: &'m Pdfa) -> Self {
        Self::with_config(model, CheckerConfig::default())
    }

    pub fn with_config(model: &'m Pdfa, config: CheckerConfig) -> Self {
        let rows = model
            .state_ids()
            .map(|s| model.successor_distribution(s).into_iter().map(|(t, p)| (t.0, p)).collect())
            .collect();
        Checker { model, chain: Chain::new(rows), config }
    }

    pub fn model(&self) -> &Pdfa {
        self.model
    }

    fn check_atoms(&self, formula: &PctlFormula) -> Result<(), CheckError> {
        let known = self.model.atoms();
        match formula.atoms().into_iter().find(|a| !known.contains(a)) {
            Some(a) => Err(CheckError::UnknownAtom(a.to_string())),
            None => Ok(()),
        }
    }

    /// Set of states satisfying a state formula.
    pub fn sat(&self, formula: &PctlFormula) -> Result<Vec<bool>, CheckError> {
        self.check_atoms(formula)?;
        self.sat_inner(formula)
    }

    fn sat_inner(&self, formula: &PctlFormula) -> Result<Vec<bool>, CheckError> {
        let n = self.chain.len();
        Ok(match formula {
            PctlFormula::True => vec![true; n],
            PctlFormula::False => vec![false; n],
            PctlFormula::Atom(a) => self.model.state_ids().map(|s| self.model.has_label(s, a)).collect(),
            PctlFormula::Not(f) => self.sat_inner(f)?.into_iter().map(|b| !b).collect(),
            PctlFormula::And(a, b) => zip_with(self.sat_inner(a)?, self.sat_inner(b)?, |x, y| x && y),
            PctlFormula::Or(a, b) => zip_with(self.sat_inner(a)?, self.sat_inner(b)?, |x, y| x || y),
            PctlFormula::Implies(a, b) => zip_with(self.sat_inner(a)?, self.sat_inner(b)?, |x, y| !x || y),
            PctlFormula::Prob { bound: Bound::Query, .. } => {
                return Err(CheckError::NotAStateFormula(formula.to_string()))
            }
            PctlFormula::Prob { bound, path } => {
                let probs = self.path_probabilities_inner(path)?;
                probs.into_iter().map(|p| bound.holds(p, self.config.tolerance)).collect()
            }
            PctlFormula::Next(_) | PctlFormula::Future(_) | PctlFormula::Globally(_) | PctlFormula::Until(..) => {
                return Err(CheckError::NotAStateFormula(formula.to_string()))
            }
        })
    }

    /// Probability of `phi`-states one step ahead, for every state.
    pub fn prob_next(&self, phi: &[bool]) -> Vec<f64> {
        self.chain.next(phi)
    }

    /// Exact `phi1 U phi2` probabilities for every state.
    pub fn prob_until(&self, phi1: &[bool], phi2: &[bool]) -> Result<UntilSolution, CheckError> {
        self.chain.until(phi1, phi2, &self.config.solver)
    }

    /// Probability of a path formula from every state.
    pub fn path_probabilities(&self, path: &PctlFormula) -> Result<Vec<f64>, CheckError> {
        self.check_atoms(path)?;
        self.path_probabilities_inner(path)
    }

    fn path_probabilities_inner(&self, path: &PctlFormula) -> Result<Vec<f64>, CheckError> {
        if path.lookahead() > usize::from(matches!(path, PctlFormula::Next(_))) {
            return self.lookahead_probabilities(path);
        }
        let n = self.chain.len();
        match path {
            PctlFormula::Next(f) => Ok(self.prob_next(&self.sat_inner(f)?)),
            PctlFormula::Future(f) => Ok(self.prob_until(&vec![true; n], &self.sat_inner(f)?)?.probs),
            PctlFormula::Globally(f) => {
                let not_f: Vec<bool> = self.sat_inner(f)?.into_iter().map(|b| !b).collect();
                let eventually_not = self.prob_until(&vec![true; n], &not_f)?.probs;
                Ok(eventually_not.into_iter().map(|p| (1.0 - p).clamp(0.0, 1.0)).collect())
            }
            PctlFormula::Until(a, b) => Ok(self.prob_until(&self.sat_inner(a)?, &self.sat_inner(b)?)?.probs),
            other => Err(CheckError::NotAPathFormula(other.to_string())),
        }
    }

    fn compile_step(&self, f: &PctlFormula, cache: &mut HashMap<String, Rc<Vec<bool>>>) -> Result<Step, CheckError> {
        Ok(match f {
            PctlFormula::True => Step::Const(true),
            PctlFormula::False => Step::Const(false),
            PctlFormula::Not(g) => Step::Not(Box::new(self.compile_step(g, cache)?)),
            PctlFormula::And(a, b) => {
                Step::And(Box::new(self.compile_step(a, cache)?), Box::new(self.compile_step(b, cache)?))
            }
            PctlFormula::Or(a, b) => Step::Or(Box::new(self.compile_step(a, cache)?), Box::new(self.compile_step(b, cache)?)),
            PctlFormula::Implies(a, b) => Step::Or(
                Box::new(Step::Not(Box::new(self.compile_step(a, cache)?))),
                Box::new(self.compile_step(b, cache)?),
            ),
            PctlFormula::Next(g) => Step::Next(Box::new(self.compile_step(g, cache)?)),
            PctlFormula::Atom(_) | PctlFormula::Prob { .. } => {
                let key = f.to_string();
                let set = match cache.get(&key) {
                    Some(s) => s.clone(),
                    None => {
                        let s = Rc::new(self.sat_inner(f)?);
                        cache.insert(key, s.clone());
                        s
                    }
                };
                Step::Set(set)
            }
            PctlFormula::Future(_) | PctlFormula::Globally(_) | PctlFormula::Until(..) => {
                return Err(CheckError::Unsupported(format!("temporal operator nested inside a path: {f}")))
            }
        })
    }

    /// Paths whose operands look ahead with `X` are evaluated on the chain of
    /// state windows `(s_i, ..., s_{i+k})`, where each position of the
    /// original path corresponds to exactly one window.
    fn lookahead_probabilities(&self, path: &PctlFormula) -> Result<Vec<f64>, CheckError> {
        let mut cache = HashMap::new();
        // `X psi` at the top is the one-position formula `X psi` read at the
        // first window, so it is folded into the step itself.
        enum Shape {
            Now(Step),
            Future(Step),
            Globally(Step),
            Until(Step, Step),
        }
        let (shape, depth) = match path {
            PctlFormula::Next(_) => (Shape::Now(self.compile_step(path, &mut cache)?), path.lookahead()),
            PctlFormula::Future(f) => (Shape::Future(self.compile_step(f, &mut cache)?), f.lookahead()),
            PctlFormula::Globally(f) => (Shape::Globally(self.compile_step(f, &mut cache)?), f.lookahead()),
            PctlFormula::Until(a, b) => (
                Shape::Until(self.compile_step(a, &mut cache)?, self.compile_step(b, &mut cache)?),
                a.lookahead().max(b.lookahead()),
            ),
            other => return Err(CheckError::NotAPathFormula(other.to_string())),
        };

        let product = WindowProduct::build(&self.chain, depth, self.config.max_product_states)?;
        let holds = |step: &Step| -> Vec<bool> { product.windows.iter().map(|w| step.eval(w)).collect() };
        let m = product.windows.len();
        let window_probs = match &shape {
            Shape::Now(step) => holds(step).into_iter().map(|b| if b { 1.0 } else { 0.0 }).collect(),
            Shape::Future(step) => product.chain.until(&vec![true; m], &holds(step), &self.config.solver)?.probs,
            Shape::Globally(step) => {
                let violated: Vec<bool> = holds(step).into_iter().map(|b| !b).collect();
                product
                    .chain
                    .until(&vec![true; m], &violated, &self.config.solver)?
                    .probs
                    .into_iter()
                    .map(|p| 1.0 - p)
                    .collect()
            }
            Shape::Until(a, b) => product.chain.until(&holds(a), &holds(b), &self.config.solver)?.probs,
        };

        let mut out = vec![0.0; self.chain.len()];
        for (w, &(start, weight)) in product.origin.iter().enumerate() {
            out[start] += weight * window_probs[w];
        }
        Ok(out.into_iter().map(|p| p.clamp(0.0, 1.0)).collect())
    }

    /// Evaluates a formula at a state. A top-level `P =? [...]` yields a
    /// probability; anything else yields a verdict.
    pub fn check(&self, formula: &PctlFormula, state: StateId) -> Result<PctlResult, CheckError> {
        self.check_atoms(formula)?;
        if state.0 >= self.chain.len() {
            return Err(CheckError::UnknownState(state.to_string()));
        }
        match formula {
            PctlFormula::Prob { bound: Bound::Query, path } => {
                Ok(PctlResult::Probability(self.path_probabilities_inner(path)?[state.0]))
            }
            f => Ok(PctlResult::Verdict(self.sat_inner(f)?[state.0])),
        }
    }

    /// Evaluates a formula at every state.
    pub fn check_all(&self, formula: &PctlFormula) -> Result<Vec<PctlResult>, CheckError> {
        self.check_atoms(formula)?;
        match formula {
            PctlFormula::Prob { bound: Bound::Query, path } => {
                Ok(self.path_probabilities_inner(path)?.into_iter().map(PctlResult::Probability).collect())
            }
            f => Ok(self.sat_inner(f)?.into_iter().map(PctlResult::Verdict).collect()),
        }
    }
}

fn zip_with(a: Vec<bool>, b: Vec<bool>, f: impl Fn(bool, bool) -> bool) -> Vec<bool> {
    a.into_iter().zip(b).map(|(x, y)| f(x, y)).collect()
}

struct WindowProduct {
    windows: Vec<Vec<usize>>,
    /// For windows that start a path: original start state and the
    /// probability of the window's lookahead.
    origin: Vec<(usize, f64)>,
    chain: Chain,
}

impl WindowProduct {
    fn build(chain: &Chain, depth: usize, limit: usize) -> Result<Self, CheckError> {
        let mut index: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut windows: Vec<Vec<usize>> = Vec::new();
        let mut origin = Vec::new();
        let mut queue = VecDeque::new();

        let mut intern = |w: Vec<usize>, windows: &mut Vec<Vec<usize>>, queue: &mut VecDeque<usize>| -> Result<usize, CheckError> {
            if let Some(&i) = index.get(&w) {
                return Ok(i);
            }
            if windows.len() >= limit {
                return Err(CheckError::Unsupported(format!("lookahead product exceeds {limit} states")));
            }
            let i = windows.len();
            index.insert(w.clone(), i);
            windows.push(w);
            queue.push_back(i);
            Ok(i)
        };

        // Every window starting at each state, weighted by its probability.
        for s in 0..chain.len() {
            let mut partial: Vec<(Vec<usize>, f64)> = vec![(vec![s], 1.0)];
            for _ in 0..depth {
                let mut longer = Vec::new();
                for (w, p) in partial {
                    let last = *w.last().expect("windows are never empty");
                    for &(t, q) in &chain.rows[last] {
                        let mut ext = w.clone();
                        ext.push(t);
                        longer.push((ext, p * q));
                    }
                }
                partial = longer;
            }
            for (w, p) in partial {
                let i = intern(w, &mut windows, &mut queue)?;
                origin.resize(windows.len(), (0, 0.0));
                origin[i] = (s, p);
            }
        }

        let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
        while let Some(i) = queue.pop_front() {
            let w = windows[i].clone();
            let last = *w.last().expect("windows are never empty");
            let mut row = Vec::new();
            for &(t, q) in &chain.rows[last] {
                let mut shifted = w[1..].to_vec();
                shifted.push(t);
                row.push((intern(shifted, &mut windows, &mut queue)?, q));
            }
            if rows.len() <= i {
                rows.resize(i + 1, Vec::new());
            }
            rows[i] = row;
        }
        rows.resize(windows.len(), Vec::new());
        origin.resize(windows.len(), (0, 0.0));

        Ok(WindowProduct { windows, origin, chain: Chain::new(rows) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game_model::{ActionSymbol, PdfaBuilder};
    use crate::pctl::parse_pctl;

    /// q0 -a(0.5)-> q1 (final, label x); q0 -b(0.5)-> q2 -a(1)-> q1; q2 labeled y.
    fn diamond() -> Pdfa {
        let mut b = PdfaBuilder::new().with_alphabet(ActionSymbol::ALL);
        let q0 = b.state("q0");
        let q1 = b.state("q1");
        let q2 = b.state("q2");
        b.set_initial(q0);
        b.add_final(q1);
        b.label(q1, "x");
        b.label(q2, "y");
        b.label(q0, "start");
        b.transition(q0, ActionSymbol::Alpha, q1, 0.5).unwrap();
        b.transition(q0, ActionSymbol::Beta, q2, 0.5).unwrap();
        b.transition(q2, ActionSymbol::Alpha, q1, 1.0).unwrap();
        b.transition(q1, ActionSymbol::Alpha, q1, 1.0).unwrap();
        b.build().unwrap()
    }

    fn query(m: &Pdfa, text: &str, s: usize) -> f64 {
        Checker::new(m).check(&parse_pctl(text).unwrap(), StateId(s)).unwrap().probability().unwrap()
    }

    #[test]
    fn next_and_until_on_small_chain() {
        let m = diamond();
        assert_eq!(query(&m, "P =? [X x]", 0), 0.5);
        assert_eq!(query(&m, "P =? [X true]", 0), 1.0);
        assert_eq!(query(&m, "P =? [X false]", 0), 0.0);
        assert_eq!(query(&m, "P =? [F x]", 0), 1.0);
        assert_eq!(query(&m, "P =? [(not y) U x]", 0), 0.5);
        assert_eq!(query(&m, "P =? [G not y]", 0), 0.5);
        assert_eq!(query(&m, "P =? [F start]", 0), 1.0);
    }

    #[test]
    fn lookahead_inside_globally() {
        let m = diamond();
        // Every y-state is followed by x: holds on both branches.
        assert_eq!(query(&m, "P =? [G (y -> X x)]", 0), 1.0);
        // Every start-state is followed by y: only on the b-branch.
        assert!((query(&m, "P =? [G (start -> X y)]", 0) - 0.5).abs() < 1e-12);
        assert!((query(&m, "P =? [X X x]", 0) - 1.0).abs() < 1e-12);
        assert!((query(&m, "P =? [F (y and X x)]", 0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn nested_probability_operator() {
        let m = diamond();
        let f = parse_pctl("P >=1 [F P >0.9 [X x]]").unwrap();
        assert_eq!(Checker::new(&m).check(&f, StateId(0)).unwrap(), PctlResult::Verdict(true));
    }

    #[test]
    fn unknown_atom_is_an_error() {
        let m = diamond();
        let f = parse_pctl("P =? [F nowhere]").unwrap();
        assert_eq!(Checker::new(&m).check(&f, StateId(0)), Err(CheckError::UnknownAtom("nowhere".into())));
    }

    #[test]
    fn until_yes_and_no_sets() {
        let m = diamond();
        let c = Checker::new(&m);
        let phi1 = c.sat(&parse_pctl("not y").unwrap()).unwrap();
        let phi2 = c.sat(&PctlFormula::atom("x")).unwrap();
        let sol = c.prob_until(&phi1, &phi2).unwrap();
        assert_eq!(sol.yes, vec![false, true, false]);
        assert_eq!(sol.no, vec![false, false, true]);
        assert_eq!(sol.probs, vec![0.5, 1.0, 0.0]);
    }
}
