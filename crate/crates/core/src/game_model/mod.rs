//! Probabilistic automata modeling how each patient class plays the game.

mod io;
mod match_items;
mod pdfa;
mod word;

pub use io::{
    model_from_json, model_to_json, params_from_json, params_to_json, read_model, write_model, ClassParamsFile,
    ModelFile, TransitionRecord,
};
pub use match_items::{
    build_match_items, class_models, ClassParams, GameShape, INITIAL_STATE, LAUNCH_ATOM, LEFT_GAME_ATOM,
    LEFT_GAME_STATE, NORMAL_END_ATOM, NORMAL_END_STATE,
};
pub use pdfa::{validate_pdfa, Edge, Pdfa, PdfaBuilder, StateId, ValidationReport, Violation, PROBABILITY_TOLERANCE};
pub use word::{ActionSymbol, Word, WordError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GameModelError {
    #[error("no transition from state {state} on {action} (word prefix `{prefix}`)")]
    UndefinedTransition { prefix: String, state: String, action: ActionSymbol },
    #[error("transition from {state} on {action} already leads elsewhere")]
    Nondeterministic { state: String, action: ActionSymbol },
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("model has no initial state")]
    MissingInitial,
    #[error("invalid class parameters: {0}")]
    InvalidParams(String),
    #[error("invalid game shape: {0}")]
    InvalidShape(String),
    #[error("malformed model file: {0}")]
    Format(String),
    #[error("{0}")]
    Io(String),
}
