//! Monte Carlo sampling of patient sessions: random walks over the class
//! models, estimates used to cross-check the PCTL checker, and whole
//! protocol runs.

mod estimate;
mod protocol_sim;
mod walk;

pub use estimate::{estimate_reachability, estimate_until, Estimate};
pub use protocol_sim::{
    identity_behaviour, simulate_protocol, simulate_protocol_with, DeltaStats, SimulationConfig, SimulationReport,
};
pub use walk::{run_rng, sample_word, WalkTable, RNG_DESCRIPTION};

use crate::game_model::GameModelError;
use crate::pctl::CheckError;
use crate::protocol::ProtocolError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimulationError {
    #[error("the number of runs must be at least 1")]
    ZeroRuns,
    #[error(transparent)]
    Check(CheckError),
    #[error(transparent)]
    Protocol(ProtocolError),
    #[error(transparent)]
    Model(GameModelError),
    #[error("run {run} did not meet any stop condition")]
    NoStop { run: u64 },
    #[error("{0}")]
    Io(String),
}
