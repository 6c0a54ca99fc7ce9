use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::walk::{run_rng, WalkTable};
use super::SimulationError;
use crate::game_model::Pdfa;
use crate::pctl::{Checker, PctlFormula};

/// Monte Carlo estimate of a probability with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimate: f64,
    pub std_error: f64,
    pub hits: u64,
    pub runs: u64,
}

impl Estimate {
    fn new(hits: u64, runs: u64) -> Self {
        let p = hits as f64 / runs as f64;
        Estimate { estimate: p, std_error: (p * (1.0 - p) / runs as f64).sqrt(), hits, runs }
    }

    /// Whether `value` lies within `k` standard errors, taking the larger of
    /// the standard error of the estimate and the one implied by `value`
    /// (the estimate of a rare event is often exactly 0).
    pub fn agrees(&self, value: f64, k: f64) -> bool {
        let implied = (value * (1.0 - value) / self.runs as f64).max(0.0).sqrt();
        (self.estimate - value).abs() <= k * self.std_error.max(implied) + 1e-12
    }
}

/// Fraction of walks from the initial state that reach a state labelled
/// `target`.
pub fn estimate_reachability(model: &Pdfa, target: &str, runs: u64, seed: u64) -> Result<Estimate, SimulationError> {
    estimate_until(model, &PctlFormula::True, &PctlFormula::atom(target), runs, seed)
}

/// Fraction of walks that reach a `phi2` state passing only through `phi1`
/// states. Operands are state formulas; a walk is decided at the latest when
/// it enters a final (absorbing) state.
pub fn estimate_until(
    model: &Pdfa,
    phi1: &PctlFormula,
    phi2: &PctlFormula,
    runs: u64,
    seed: u64,
) -> Result<Estimate, SimulationError> {
    if runs == 0 {
        return Err(SimulationError::ZeroRuns);
    }
    let checker = Checker::new(model);
    let sat1 = checker.sat(phi1).map_err(SimulationError::Check)?;
    let sat2 = checker.sat(phi2).map_err(SimulationError::Check)?;
    let table = WalkTable::new(model);
    let hits: u64 = (0..runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = run_rng(seed, run);
            let mut s = table.initial();
            loop {
                if sat2[s.0] {
                    return 1;
                }
                if !sat1[s.0] || table.is_final(s) {
                    return 0;
                }
                match table.step(s, &mut rng) {
                    Some((_, t)) => s = t,
                    None => return 0,
                }
            }
        })
        .sum();
    Ok(Estimate::new(hits, runs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game_model::{build_match_items, ClassParams, GameShape};
    use crate::PatientClass;

    fn model() -> Pdfa {
        build_match_items(ClassParams::table1(PatientClass::MajorNcd), GameShape::default()).unwrap()
    }

    #[test]
    fn final_states_always_reached() {
        let m = model();
        let e = estimate_until(&m, &PctlFormula::True, &crate::pctl::parse_pctl("a1 or a2").unwrap(), 2000, 1).unwrap();
        assert_eq!(e.estimate, 1.0);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        let m = model();
        assert_eq!(estimate_reachability(&m, "a2", 0, 1), Err(SimulationError::ZeroRuns));
        assert!(matches!(estimate_reachability(&m, "nope", 10, 1), Err(SimulationError::Check(_))));
    }

    #[test]
    fn deterministic_given_seed() {
        let m = model();
        assert_eq!(estimate_reachability(&m, "a2", 5000, 9).unwrap(), estimate_reachability(&m, "a2", 5000, 9).unwrap());
    }
}
