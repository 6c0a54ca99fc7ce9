use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::word::{ActionSymbol, Word};
use super::GameModelError;

/// Tolerance used for every stochasticity check on a model.
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StateId(pub usize);

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub to: StateId,
    pub prob: f64,
}

/// Probabilistic deterministic finite automaton.
///
/// The transition function is kept separate from the probability function:
/// `edges` holds the deterministic transition `(q, a) -> q'` together with
/// `P(q, a, q')`, and `off_edge` holds any probability mass placed on a triple
/// that is not a transition. A well-formed model has no off-edge mass; it is
/// representable only so that malformed model files can be loaded and
/// reported on.
#[derive(Debug, Clone, PartialEq)]
pub struct Pdfa {
    states: Vec<String>,
    alphabet: BTreeSet<ActionSymbol>,
    initial: StateId,
    finals: BTreeSet<StateId>,
    edges: BTreeMap<(StateId, ActionSymbol), Edge>,
    off_edge: BTreeMap<(StateId, ActionSymbol, StateId), f64>,
    labels: Vec<BTreeSet<String>>,
}

impl Pdfa {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn state_ids(&self) -> impl Iterator<Item = StateId> {
        (0..self.states.len()).map(StateId)
    }

    pub fn state_name(&self, id: StateId) -> &str {
        &self.states[id.0]
    }

    pub fn state_names(&self) -> &[String] {
        &self.states
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.states.iter().position(|s| s == name).map(StateId)
    }

    pub fn alphabet(&self) -> &BTreeSet<ActionSymbol> {
        &self.alphabet
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn finals(&self) -> &BTreeSet<StateId> {
        &self.finals
    }

    pub fn is_final(&self, id: StateId) -> bool {
        self.finals.contains(&id)
    }

    pub fn labels(&self, id: StateId) -> &BTreeSet<String> {
        &self.labels[id.0]
    }

    pub fn has_label(&self, id: StateId, atom: &str) -> bool {
        self.labels[id.0].contains(atom)
    }

    /// Every atomic proposition used somewhere in the label map.
    pub fn atoms(&self) -> BTreeSet<&str> {
        self.labels.iter().flatten().map(String::as_str).collect()
    }

    pub fn transition(&self, from: StateId, action: ActionSymbol) -> Option<StateId> {
        self.edges.get(&(from, action)).map(|e| e.to)
    }

    /// `P(from, action, to)`, zero for triples carrying no mass.
    pub fn prob(&self, from: StateId, action: ActionSymbol, to: StateId) -> f64 {
        match self.edges.get(&(from, action)) {
            Some(e) if e.to == to => e.prob,
            _ => self.off_edge.get(&(from, action, to)).copied().unwrap_or(0.0),
        }
    }

    pub fn edges(&self) -> impl Iterator<Item = (StateId, ActionSymbol, Edge)> + '_ {
        self.edges.iter().map(|(&(q, a), &e)| (q, a, e))
    }

    pub fn off_edge_mass(&self) -> impl Iterator<Item = (StateId, ActionSymbol, StateId, f64)> + '_ {
        self.off_edge.iter().map(|(&(q, a, t), &p)| (q, a, t, p))
    }

    /// Outgoing transitions of a state in action order.
    pub fn outgoing(&self, from: StateId) -> impl Iterator<Item = (ActionSymbol, Edge)> + '_ {
        self.edges
            .range((from, ActionSymbol::Alpha)..=(from, ActionSymbol::Theta))
            .map(|(&(_, a), &e)| (a, e))
    }

    /// Markov-chain row of a state: `P(s, s') = sum over a of P(s, a, s')`,
    /// merged per successor and sorted by successor id.
    pub fn successor_distribution(&self, from: StateId) -> Vec<(StateId, f64)> {
        let mut row: BTreeMap<StateId, f64> = BTreeMap::new();
        for (_, e) in self.outgoing(from) {
            *row.entry(e.to).or_default() += e.prob;
        }
        for (&(q, _, t), &p) in self
            .off_edge
            .range((from, ActionSymbol::Alpha, StateId(0))..=(from, ActionSymbol::Theta, StateId(usize::MAX)))
        {
            debug_assert_eq!(q, from);
            *row.entry(t).or_default() += p;
        }
        row.into_iter().filter(|&(_, p)| p != 0.0).collect()
    }

    /// Extended transition function from the initial state.
    pub fn run_word(&self, word: &Word) -> Result<StateId, GameModelError> {
        self.run_word_from(self.initial, word)
    }

    pub fn run_word_from(&self, start: StateId, word: &Word) -> Result<StateId, GameModelError> {
        let mut state = start;
        for (i, action) in word.iter().enumerate() {
            state = self.transition(state, action).ok_or_else(|| GameModelError::UndefinedTransition {
                prefix: word.prefix(i + 1).to_string(),
                state: self.state_name(state).to_string(),
                action,
            })?;
        }
        Ok(state)
    }

    /// Language membership: the run is defined and ends in a final state.
    pub fn accepts(&self, word: &Word) -> bool {
        self.run_word(word).map(|s| self.is_final(s)).unwrap_or(false)
    }

    /// Probability of the run of `word` from the initial state.
    pub fn word_probability(&self, word: &Word) -> Result<f64, GameModelError> {
        self.word_probability_from(self.initial, word)
    }

    pub fn word_probability_from(&self, start: StateId, word: &Word) -> Result<f64, GameModelError> {
        let mut state = start;
        let mut p = 1.0;
        for (i, action) in word.iter().enumerate() {
            let edge = self.edges.get(&(state, action)).ok_or_else(|| GameModelError::UndefinedTransition {
                prefix: word.prefix(i + 1).to_string(),
                state: self.state_name(state).to_string(),
                action,
            })?;
            p *= edge.prob;
            state = edge.to;
        }
        Ok(p)
    }
}

/// Incremental construction of a [`Pdfa`] by state name.
#[derive(Debug, Default)]
pub struct PdfaBuilder {
    states: Vec<String>,
    index: HashMap<String, StateId>,
    alphabet: BTreeSet<ActionSymbol>,
    initial: Option<StateId>,
    finals: BTreeSet<StateId>,
    edges: BTreeMap<(StateId, ActionSymbol), Edge>,
    off_edge: BTreeMap<(StateId, ActionSymbol, StateId), f64>,
    labels: Vec<BTreeSet<String>>,
}

impl PdfaBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_alphabet(mut self, alphabet: impl IntoIterator<Item = ActionSymbol>) -> Self {
        self.alphabet.extend(alphabet);
        self
    }

    /// Adds a state, or returns the existing id if the name is taken.
    pub fn state(&mut self, name: &str) -> StateId {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = StateId(self.states.len());
        self.states.push(name.to_string());
        self.labels.push(BTreeSet::new());
        self.index.insert(name.to_string(), id);
        id
    }

    pub fn lookup(&self, name: &str) -> Result<StateId, GameModelError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| GameModelError::UnknownState(name.to_string()))
    }

    pub fn set_initial(&mut self, id: StateId) {
        self.initial = Some(id);
    }

    pub fn add_final(&mut self, id: StateId) {
        self.finals.insert(id);
    }

    pub fn label(&mut self, id: StateId, atom: &str) {
        self.labels[id.0].insert(atom.to_string());
    }

    /// Defines `delta(from, action) = to` with `P(from, action, to) = prob`.
    /// Fails if the transition is already defined towards another state.
    pub fn transition(
        &mut self,
        from: StateId,
        action: ActionSymbol,
        to: StateId,
        prob: f64,
    ) -> Result<(), GameModelError> {
        if let Some(e) = self.edges.get(&(from, action)) {
            if e.to != to {
                return Err(GameModelError::Nondeterministic {
                    state: self.states[from.0].clone(),
                    action,
                });
            }
        }
        self.edges.insert((from, action), Edge { to, prob });
        Ok(())
    }

    /// Sets `P(from, action, to)` without touching the transition function.
    /// Mass on a triple that is not a transition is kept as off-edge mass.
    pub fn probability(&mut self, from: StateId, action: ActionSymbol, to: StateId, prob: f64) {
        match self.edges.get_mut(&(from, action)) {
            Some(e) if e.to == to => e.prob = prob,
            _ => {
                self.off_edge.insert((from, action, to), prob);
            }
        }
    }

    pub fn build(self) -> Result<Pdfa, GameModelError> {
        let initial = self.initial.ok_or(GameModelError::MissingInitial)?;
        Ok(Pdfa {
            states: self.states,
            alphabet: self.alphabet,
            initial,
            finals: self.finals,
            edges: self.edges,
            off_edge: self.off_edge,
            labels: self.labels,
        })
    }
}

/// One violated model invariant.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// A probability outside `[0, 1]`.
    ProbabilityOutOfRange { state: String, action: ActionSymbol, to: String, prob: f64 },
    /// Mass on a triple that the transition function does not contain.
    MassOffTransition { state: String, action: ActionSymbol, to: String, prob: f64 },
    /// Outgoing mass of a non-final state does not sum to one.
    RowSum { state: String, total: f64 },
    /// A final state leaks mass or lacks its self-loop.
    FinalNotAbsorbing { state: String, detail: String },
    /// A transition uses an action outside the alphabet.
    ActionOutsideAlphabet { state: String, action: ActionSymbol },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ProbabilityOutOfRange { state, action, to, prob } => {
                write!(f, "P({state}, {}, {to}) = {prob} is outside [0, 1]", action.name())
            }
            Violation::MassOffTransition { state, action, to, prob } => write!(
                f,
                "P({state}, {}, {to}) = {prob} but {to} is not the {} successor of {state}",
                action.name(),
                action.name()
            ),
            Violation::RowSum { state, total } => {
                write!(f, "outgoing probability of {state} sums to {total}, expected 1")
            }
            Violation::FinalNotAbsorbing { state, detail } => {
                write!(f, "final state {state} is not absorbing: {detail}")
            }
            Violation::ActionOutsideAlphabet { state, action } => {
                write!(f, "state {state} has a {} transition but the alphabet lacks it", action.name())
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the probabilistic constraints of a model and reports every
/// violation found. Never fails: an invalid model is data.
pub fn validate_pdfa(model: &Pdfa) -> ValidationReport {
    let mut violations = Vec::new();
    let name = |id: StateId| model.state_name(id).to_string();

    for (q, a, e) in model.edges() {
        if !model.alphabet.contains(&a) {
            violations.push(Violation::ActionOutsideAlphabet { state: name(q), action: a });
        }
        if !(0.0..=1.0).contains(&e.prob) || e.prob.is_nan() {
            violations.push(Violation::ProbabilityOutOfRange {
                state: name(q),
                action: a,
                to: name(e.to),
                prob: e.prob,
            });
        }
    }
    for (q, a, t, p) in model.off_edge_mass() {
        if p != 0.0 {
            violations.push(Violation::MassOffTransition { state: name(q), action: a, to: name(t), prob: p });
        }
    }

    for q in model.state_ids() {
        let row = model.successor_distribution(q);
        let total: f64 = row.iter().map(|(_, p)| p).sum();
        if model.is_final(q) {
            let leaks: Vec<&(StateId, f64)> = row.iter().filter(|(t, _)| *t != q).collect();
            if let Some((t, p)) = leaks.first() {
                violations.push(Violation::FinalNotAbsorbing {
                    state: name(q),
                    detail: format!("mass {p} flows to {}", name(*t)),
                });
            } else if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
                violations.push(Violation::FinalNotAbsorbing {
                    state: name(q),
                    detail: format!("self-loop mass is {total}, expected 1"),
                });
            }
        } else if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            violations.push(Violation::RowSum { state: name(q), total });
        }
    }
    ValidationReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ActionSymbol::*;

    fn tiny(alpha_prob: f64) -> PdfaBuilder {
        let mut b = PdfaBuilder::new().with_alphabet(ActionSymbol::ALL);
        let q0 = b.state("q0");
        let q1 = b.state("q1");
        let q2 = b.state("q2");
        b.set_initial(q0);
        b.add_final(q1);
        b.add_final(q2);
        b.transition(q0, Alpha, q1, alpha_prob).unwrap();
        for f in [q1, q2] {
            b.transition(f, Alpha, f, 1.0).unwrap();
        }
        b
    }

    #[test]
    fn row_sum_violation_is_reported_once() {
        let m = tiny(0.5).build().unwrap();
        let report = validate_pdfa(&m);
        assert_eq!(report.violations, vec![Violation::RowSum { state: "q0".into(), total: 0.5 }]);
    }

    #[test]
    fn off_transition_mass_is_reported_once() {
        let mut b = tiny(0.4);
        let (q0, q2) = (b.lookup("q0").unwrap(), b.lookup("q2").unwrap());
        b.probability(q0, Alpha, q2, 0.1);
        b.transition(q0, Beta, q2, 0.5).unwrap();
        let m = b.build().unwrap();
        let report = validate_pdfa(&m);
        assert_eq!(report.violations.len(), 1, "{:?}", report.violations);
        assert!(matches!(&report.violations[0], Violation::MassOffTransition { to, .. } if to == "q2"));
        assert_eq!(m.prob(q0, Alpha, q2), 0.1);
        assert_eq!(m.transition(q0, Alpha), Some(StateId(1)));
    }

    #[test]
    fn leaking_final_state_is_reported() {
        let mut b = tiny(1.0);
        let (q1, q2) = (b.lookup("q1").unwrap(), b.lookup("q2").unwrap());
        b.transition(q1, Beta, q2, 0.5).unwrap();
        b.probability(q1, Alpha, q1, 0.5);
        let report = validate_pdfa(&b.build().unwrap());
        assert_eq!(report.violations.len(), 1);
        assert!(matches!(report.violations[0], Violation::FinalNotAbsorbing { .. }));
    }

    #[test]
    fn out_of_range_probability() {
        let mut b = tiny(1.0);
        let (q0, q2) = (b.lookup("q0").unwrap(), b.lookup("q2").unwrap());
        b.transition(q0, Beta, q2, -0.25).unwrap();
        b.probability(q0, Alpha, StateId(1), 1.25);
        let report = validate_pdfa(&b.build().unwrap());
        assert_eq!(
            report
                .violations
                .iter()
                .filter(|v| matches!(v, Violation::ProbabilityOutOfRange { .. }))
                .count(),
            2
        );
    }

    #[test]
    fn nondeterministic_transition_is_rejected() {
        let mut b = tiny(1.0);
        let (q0, q2) = (b.lookup("q0").unwrap(), b.lookup("q2").unwrap());
        assert!(matches!(
            b.transition(q0, Alpha, q2, 1.0),
            Err(GameModelError::Nondeterministic { .. })
        ));
    }

    #[test]
    fn undefined_transition_names_prefix() {
        let m = tiny(1.0).build().unwrap();
        let err = m.run_word(&"ab".parse().unwrap()).unwrap_err();
        match err {
            GameModelError::UndefinedTransition { prefix, state, .. } => {
                assert_eq!(prefix, "ab");
                assert_eq!(state, "q1");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(!m.accepts(&"ab".parse().unwrap()));
        assert!(m.accepts(&"aa".parse().unwrap()));
    }
}
