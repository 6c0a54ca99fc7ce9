//! Core of the doxa toolkit: Match Items game models, a PCTL checker for
//! them, finite-trace monitoring of protocol traces, the belief-driven test
//! protocol and its Monte Carlo simulator.

pub mod class;
pub mod game_model;
pub mod pctl;
pub mod protocol;
pub mod simulator;
pub mod trace_logic;

pub use class::PatientClass;
