//! Construction of the Match Items test automata.
//!
//! A model has a launch state `q0`, one playing state per
//! `(matches so far, actions so far, last action)` and two absorbing finals:
//! `f1` for a normal end (all rounds matched or the action budget spent) and
//! `f2` for a patient who left the game zone. Every playing state carries the
//! same action distribution, given by the class parameters. Each state also
//! carries its own name as an atom so single states can be targeted by
//! properties.

use serde::{Deserialize, Serialize};

use super::pdfa::{Pdfa, PdfaBuilder, StateId, PROBABILITY_TOLERANCE};
use super::word::ActionSymbol;
use super::GameModelError;
use crate::class::PatientClass;

/// Atom labeling the initial state.
pub const LAUNCH_ATOM: &str = "launch";
/// Atom labeling the normal-end final state.
pub const NORMAL_END_ATOM: &str = "a1";
/// Atom labeling the abandoned-game final state.
pub const LEFT_GAME_ATOM: &str = "a2";

pub const INITIAL_STATE: &str = "q0";
pub const NORMAL_END_STATE: &str = "f1";
pub const LEFT_GAME_STATE: &str = "f2";

/// Per-step action distribution of one patient class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassParams {
    #[serde(rename = "alpha")]
    pub p_alpha: f64,
    #[serde(rename = "beta")]
    pub p_beta: f64,
    #[serde(rename = "gamma")]
    pub p_gamma: f64,
    #[serde(rename = "theta")]
    pub p_theta: f64,
}

impl ClassParams {
    pub fn new(p_alpha: f64, p_beta: f64, p_gamma: f64, p_theta: f64) -> Result<Self, GameModelError> {
        let params = ClassParams { p_alpha, p_beta, p_gamma, p_theta };
        params.check()?;
        Ok(params)
    }

    /// Clinician-elicited averages for each class.
    pub fn table1(class: PatientClass) -> Self {
        match class {
            PatientClass::Healthy => ClassParams { p_alpha: 0.84, p_beta: 0.11, p_gamma: 0.0499, p_theta: 0.0001 },
            PatientClass::MildNcd => ClassParams { p_alpha: 0.5, p_beta: 0.30, p_gamma: 0.1999, p_theta: 0.0001 },
            PatientClass::MajorNcd => ClassParams { p_alpha: 0.17, p_beta: 0.58, p_gamma: 0.24, p_theta: 0.01 },
        }
    }

    /// Rounder healthy-class example values (0.8/0.1/0.05/0.05), kept as an
    /// alternate fixture.
    pub fn healthy_prose_example() -> Self {
        ClassParams { p_alpha: 0.8, p_beta: 0.1, p_gamma: 0.05, p_theta: 0.05 }
    }

    pub fn get(&self, action: ActionSymbol) -> f64 {
        match action {
            ActionSymbol::Alpha => self.p_alpha,
            ActionSymbol::Beta => self.p_beta,
            ActionSymbol::Gamma => self.p_gamma,
            ActionSymbol::Theta => self.p_theta,
        }
    }

    pub fn sum(&self) -> f64 {
        self.p_alpha + self.p_beta + self.p_gamma + self.p_theta
    }

    pub fn check(&self) -> Result<(), GameModelError> {
        for a in ActionSymbol::ALL {
            let p = self.get(a);
            if !(0.0..=1.0).contains(&p) {
                return Err(GameModelError::InvalidParams(format!("{} probability {p} outside [0, 1]", a.name())));
            }
        }
        let total = self.sum();
        if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(GameModelError::InvalidParams(format!("probabilities sum to {total}, expected 1")));
        }
        Ok(())
    }
}

/// Game length: `rounds` pictures to match, at most `step_cap` actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameShape {
    pub rounds: u32,
    pub step_cap: u32,
}

impl Default for GameShape {
    fn default() -> Self {
        GameShape { rounds: 10, step_cap: 60 }
    }
}

impl GameShape {
    pub fn new(rounds: u32, step_cap: u32) -> Result<Self, GameModelError> {
        let shape = GameShape { rounds, step_cap };
        shape.check()?;
        Ok(shape)
    }

    pub fn check(&self) -> Result<(), GameModelError> {
        if self.rounds == 0 {
            return Err(GameModelError::InvalidShape("rounds must be at least 1".into()));
        }
        if self.step_cap < self.rounds {
            return Err(GameModelError::InvalidShape(format!(
                "step cap {} is below the number of rounds {}",
                self.step_cap, self.rounds
            )));
        }
        Ok(())
    }
}

fn playing_state_name(matched: u32, steps: u32, entered_by: ActionSymbol) -> String {
    format!("r{matched}_s{steps}_{}", entered_by.letter())
}

/// Builds the Match Items automaton for one class.
pub fn build_match_items(params: ClassParams, shape: GameShape) -> Result<Pdfa, GameModelError> {
    params.check()?;
    shape.check()?;

    let mut b = PdfaBuilder::new().with_alphabet(ActionSymbol::ALL);
    let q0 = b.state(INITIAL_STATE);
    b.set_initial(q0);
    b.label(q0, LAUNCH_ATOM);
    b.label(q0, INITIAL_STATE);
    let f1 = b.state(NORMAL_END_STATE);
    let f2 = b.state(LEFT_GAME_STATE);
    b.add_final(f1);
    b.add_final(f2);
    b.label(f1, NORMAL_END_ATOM);
    b.label(f1, NORMAL_END_STATE);
    b.label(f2, LEFT_GAME_ATOM);
    b.label(f2, LEFT_GAME_STATE);
    b.label(f2, ActionSymbol::Theta.atom());

    let loop_mass = 1.0 / ActionSymbol::ALL.len() as f64;
    for f in [f1, f2] {
        for a in ActionSymbol::ALL {
            b.transition(f, a, f, loop_mass)?;
        }
    }

    // Breadth-first over (matched, steps): every reachable playing state is
    // created once, in order of increasing step count.
    let mut frontier: Vec<(StateId, u32, u32)> = vec![(q0, 0, 0)];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for (q, matched, steps) in frontier {
            for a in ActionSymbol::ALL {
                let target = match a {
                    ActionSymbol::Theta => f2,
                    _ => {
                        let m = matched + u32::from(a == ActionSymbol::Alpha);
                        let s = steps + 1;
                        if m == shape.rounds || s == shape.step_cap {
                            f1
                        } else {
                            let name = playing_state_name(m, s, a);
                            let fresh = b.lookup(&name).is_err();
                            let id = b.state(&name);
                            if fresh {
                                b.label(id, a.atom());
                                b.label(id, &name);
                                next.push((id, m, s));
                            }
                            id
                        }
                    }
                };
                b.transition(q, a, target, params.get(a))?;
            }
        }
        frontier = next;
    }
    b.build()
}

/// The three class models with a common shape, indexed by class.
pub fn class_models(shape: GameShape) -> Result<[Pdfa; 3], GameModelError> {
    Ok([
        build_match_items(ClassParams::table1(PatientClass::Healthy), shape)?,
        build_match_items(ClassParams::table1(PatientClass::MildNcd), shape)?,
        build_match_items(ClassParams::table1(PatientClass::MajorNcd), shape)?,
    ])
}
