//! The belief-driven test protocol: session scores, belief curves over the
//! three test automata, transition selection and the session engine.

mod belief;
mod delta;
mod log;
mod session;

pub use belief::{
    argmax_bands, belief_distribution, belief_raw, distribution_at, next_test, reference_scenarios,
    sample_belief_curves, ArgmaxBand, BeliefCurve, BeliefDistribution, BeliefEvaluation, BeliefFactors,
    BeliefProfile, CurveRow, DENOMINATOR_SCAN_STEP,
};
pub use delta::{delta_score, DeltaWeights};
pub use log::{append_step, log_to_string, parse_log, read_log, replay, step_to_line};
pub use session::{
    protocol_step, start_session, AcceptanceMode, ProtocolConfig, ProtocolEngine, ProtocolSession, ProtocolStep,
};

use crate::game_model::GameModelError;
use crate::trace_logic::StopReason;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProtocolError {
    #[error("the score of an empty word is undefined")]
    EmptyWord,
    #[error("the score of `{0}` is undefined: all its actions have zero weight")]
    UndefinedScore(String),
    #[error("score {delta} outside [0, {max}]")]
    ScoreOutOfRange { delta: f64, max: f64 },
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("invalid profile: {0}")]
    Profile(String),
    #[error("sampling step must be positive, got {0}")]
    InvalidStep(f64),
    #[error("session already stopped ({0})")]
    SessionStopped(StopReason),
    #[error("`{word}` is not a session of {test}: {reason}")]
    WordNotAccepted { word: String, test: String, reason: String },
    #[error("session log line {line}: {message}")]
    Log { line: usize, message: String },
    #[error("replayed step {step} differs from the log")]
    ReplayMismatch { step: usize },
    #[error(transparent)]
    Model(GameModelError),
    #[error("{0}")]
    Io(String),
}
