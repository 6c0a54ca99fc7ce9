use serde::{Deserialize, Serialize};

use super::belief::{belief_distribution, next_test, BeliefDistribution, BeliefProfile};
use super::ProtocolError;
use crate::class::PatientClass;
use crate::game_model::{class_models, GameShape, Pdfa, Word};
use crate::trace_logic::{check_stop, ClassTrace, StopConfig, StopDecision};

/// How a game word is matched against the test automaton.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum AcceptanceMode {
    /// The word must end in a final state.
    Strict,
    /// A word that stops in a playing state is read as the game timer
    /// running out.
    #[default]
    AllowTimeout,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    pub shape: GameShape,
    pub stop: StopConfig,
    pub acceptance: AcceptanceMode,
}

/// One administered test. This is also the session log record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolStep {
    pub meta_state: PatientClass,
    pub word: Word,
    pub delta: f64,
    pub beliefs: BeliefDistribution,
    pub chosen: PatientClass,
    pub stop: StopDecision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSession {
    pub hypothesis: PatientClass,
    pub meta_state: PatientClass,
    pub steps: Vec<ProtocolStep>,
    pub class_trace: ClassTrace,
    pub stop: StopDecision,
}

impl ProtocolSession {
    pub fn is_stopped(&self) -> bool {
        self.stop.stopped
    }

    /// Suggested next test, i.e. the current meta-state.
    pub fn next_test(&self) -> PatientClass {
        self.meta_state
    }
}

/// Belief profile, test automata and stop rules shared by all sessions.
#[derive(Debug, Clone)]
pub struct ProtocolEngine {
    profile: BeliefProfile,
    config: ProtocolConfig,
    models: [Pdfa; 3],
}

impl ProtocolEngine {
    pub fn new(profile: BeliefProfile, config: ProtocolConfig) -> Result<Self, ProtocolError> {
        profile.validate()?;
        let models = class_models(config.shape).map_err(ProtocolError::Model)?;
        Ok(ProtocolEngine { profile, config, models })
    }

    pub fn profile(&self) -> &BeliefProfile {
        &self.profile
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.config
    }

    pub fn model(&self, meta: PatientClass) -> &Pdfa {
        &self.models[meta.index()]
    }

    pub fn start_session(&self, hypothesis: PatientClass) -> ProtocolSession {
        ProtocolSession {
            hypothesis,
            meta_state: hypothesis,
            steps: Vec::new(),
            class_trace: ClassTrace::default(),
            stop: StopDecision::none(),
        }
    }

    /// Checks that `word` is a complete game session of the test automaton:
    /// every action is defined and the game does not continue past its end.
    pub fn check_word(&self, meta: PatientClass, word: &Word) -> Result<(), ProtocolError> {
        if word.is_empty() {
            return Err(ProtocolError::EmptyWord);
        }
        let model = self.model(meta);
        let reject = |reason: &str| ProtocolError::WordNotAccepted {
            word: word.to_string(),
            test: meta.test_name(),
            reason: reason.to_string(),
        };
        let mut state = model.initial();
        for (i, action) in word.iter().enumerate() {
            if i > 0 && model.is_final(state) {
                return Err(reject(&format!("the game is over after {i} actions")));
            }
            state = model.transition(state, action).ok_or_else(|| reject(&format!("no move on {action}")))?;
        }
        if self.config.acceptance == AcceptanceMode::Strict && !model.is_final(state) {
            return Err(reject("the game is not finished"));
        }
        Ok(())
    }

    /// Scores `word` at the current meta-state, moves to the suggested test
    /// and re-evaluates the stop conditions.
    pub fn step(&self, session: &ProtocolSession, word: &Word) -> Result<ProtocolSession, ProtocolError> {
        if session.is_stopped() {
            return Err(ProtocolError::SessionStopped(session.stop.reason));
        }
        let meta = session.meta_state;
        self.check_word(meta, word)?;
        let eval = belief_distribution(&self.profile, meta, word)?;
        let chosen = next_test(&eval.distribution, meta);
        let mut class_trace = session.class_trace.clone();
        class_trace.push(chosen);
        let stop = check_stop(&class_trace, &self.config.stop);
        let mut steps = session.steps.clone();
        steps.push(ProtocolStep {
            meta_state: meta,
            word: word.clone(),
            delta: eval.delta,
            beliefs: eval.distribution,
            chosen,
            stop: stop.clone(),
        });
        Ok(ProtocolSession { hypothesis: session.hypothesis, meta_state: chosen, steps, class_trace, stop })
    }
}

pub fn start_session(engine: &ProtocolEngine, hypothesis: PatientClass) -> ProtocolSession {
    engine.start_session(hypothesis)
}

pub fn protocol_step(
    engine: &ProtocolEngine,
    session: &ProtocolSession,
    word: &Word,
) -> Result<ProtocolSession, ProtocolError> {
    engine.step(session, word)
}
