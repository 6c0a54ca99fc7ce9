//! Probabilistic computation tree logic over the Markov chains induced by
//! game models: parsing, exact checking and property corpora.

mod ast;
mod checker;
mod corpus;
mod parser;
mod solver;

pub use ast::{Bound, PctlFormula};
pub use checker::{Checker, CheckerConfig, PctlResult, UntilSolution};
pub use corpus::{parse_corpus, CorpusError, CorpusErrorKind, NamedProperty, DEFAULT_CORPUS};
pub use parser::{parse_pctl, ParseError};
pub use solver::{LinearSystem, SolverConfig};

use crate::game_model::{Pdfa, StateId};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CheckError {
    #[error("atom `{0}` does not label any state of the model")]
    UnknownAtom(String),
    #[error("unknown state {0}")]
    UnknownState(String),
    #[error("`{0}` is a path formula where a state formula is required")]
    NotAStateFormula(String),
    #[error("`{0}` is not a path formula")]
    NotAPathFormula(String),
    #[error("unsupported formula: {0}")]
    Unsupported(String),
    #[error("internal fault: singular linear system after graph preprocessing")]
    SingularSystem,
    #[error("iterative solver did not converge within {sweeps} sweeps")]
    NotConverged { sweeps: usize },
}

/// Probability of moving into a `phi`-state in one step from `state`.
pub fn prob_next(model: &Pdfa, phi: &PctlFormula, state: StateId) -> Result<f64, CheckError> {
    let checker = Checker::new(model);
    let set = checker.sat(phi)?;
    Ok(checker.prob_next(&set)[state.0])
}

/// Per-state probabilities of `phi1 U phi2`.
pub fn prob_until(model: &Pdfa, phi1: &PctlFormula, phi2: &PctlFormula) -> Result<UntilSolution, CheckError> {
    let checker = Checker::new(model);
    let (a, b) = (checker.sat(phi1)?, checker.sat(phi2)?);
    checker.prob_until(&a, &b)
}

pub fn check(model: &Pdfa, formula: &PctlFormula, state: StateId) -> Result<PctlResult, CheckError> {
    Checker::new(model).check(formula, state)
}
