use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::game_model::{ActionSymbol, Pdfa, StateId, Word};

/// Generator used for every sampled quantity, and how runs get their own
/// stream.
pub const RNG_DESCRIPTION: &str =
    "ChaCha8Rng::seed_from_u64(seed), run i on stream i (set_stream(i)), uniform f64 in [0, 1) per step";

pub fn run_rng(seed: u64, run: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run);
    rng
}

/// Cumulative transition tables for fast random walks over a PDFA.
#[derive(Debug, Clone)]
pub struct WalkTable {
    rows: Vec<Vec<(f64, ActionSymbol, StateId)>>,
    finals: Vec<bool>,
    initial: StateId,
}

impl WalkTable {
    pub fn new(model: &Pdfa) -> Self {
        let rows = model
            .state_ids()
            .map(|s| {
                let mut acc = 0.0;
                model
                    .outgoing(s)
                    .filter(|(_, e)| e.prob > 0.0)
                    .map(|(a, e)| {
                        acc += e.prob;
                        (acc, a, e.to)
                    })
                    .collect()
            })
            .collect();
        let finals = model.state_ids().map(|s| model.is_final(s)).collect();
        WalkTable { rows, finals, initial: model.initial() }
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn is_final(&self, s: StateId) -> bool {
        self.finals[s.0]
    }

    /// One step from `s`, or `None` if `s` has no outgoing probability.
    pub fn step<R: Rng>(&self, s: StateId, rng: &mut R) -> Option<(ActionSymbol, StateId)> {
        let row = &self.rows[s.0];
        let last = row.last()?;
        let u: f64 = rng.gen::<f64>() * last.0;
        let &(_, a, t) = row.iter().find(|(c, _, _)| u < *c).unwrap_or(last);
        Some((a, t))
    }

    /// Actions of a walk from the initial state to the first final state.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Word {
        let mut s = self.initial;
        let mut actions = Vec::new();
        while !self.is_final(s) {
            match self.step(s, rng) {
                Some((a, t)) => {
                    actions.push(a);
                    s = t;
                }
                None => break,
            }
        }
        Word::new(actions).expect("theta only enters a final state")
    }
}

/// Game session drawn from `model`, deterministic in `seed`.
pub fn sample_word(model: &Pdfa, seed: u64) -> Word {
    WalkTable::new(model).sample(&mut run_rng(seed, 0))
}
