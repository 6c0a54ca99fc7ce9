use serde::{Deserialize, Serialize};

use super::ProtocolError;
use crate::game_model::{ActionSymbol, Word};

/// Weights of the mistake score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaWeights {
    pub k_alpha: f64,
    pub k_beta: f64,
    pub k_gamma: f64,
    pub k_theta: f64,
    /// Maximum score.
    pub m: f64,
}

impl Default for DeltaWeights {
    fn default() -> Self {
        DeltaWeights { k_alpha: 1.0, k_beta: 1.0, k_gamma: 0.2, k_theta: 1e9, m: 10.0 }
    }
}

impl DeltaWeights {
    pub fn weight(&self, action: ActionSymbol) -> f64 {
        match action {
            ActionSymbol::Alpha => self.k_alpha,
            ActionSymbol::Beta => self.k_beta,
            ActionSymbol::Gamma => self.k_gamma,
            ActionSymbol::Theta => self.k_theta,
        }
    }

    pub fn check(&self) -> Result<(), ProtocolError> {
        for (name, k) in
            [("k_alpha", self.k_alpha), ("k_beta", self.k_beta), ("k_gamma", self.k_gamma), ("k_theta", self.k_theta)]
        {
            if !(k.is_finite() && k >= 0.0) {
                return Err(ProtocolError::InvalidWeights(format!("{name} = {k} must be a finite non-negative number")));
            }
        }
        if !(self.m.is_finite() && self.m > 0.0) {
            return Err(ProtocolError::InvalidWeights(format!("m = {} must be positive", self.m)));
        }
        Ok(())
    }
}

/// Confidence score of a game session: `m` when the patient left the game,
/// otherwise `m` times the weighted share of mistakes and pauses.
pub fn delta_score(word: &Word, weights: &DeltaWeights) -> Result<f64, ProtocolError> {
    if word.is_empty() {
        return Err(ProtocolError::EmptyWord);
    }
    if word.contains(ActionSymbol::Theta) {
        return Ok(weights.m);
    }
    let weighted = |a: ActionSymbol| weights.weight(a) * word.count(a) as f64;
    let bad = weighted(ActionSymbol::Beta) + weighted(ActionSymbol::Gamma);
    let total = weighted(ActionSymbol::Alpha) + bad;
    if total <= 0.0 {
        return Err(ProtocolError::UndefinedScore(word.to_string()));
    }
    Ok((weights.m * bad / total).clamp(0.0, weights.m))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn score(w: &str) -> f64 {
        delta_score(&w.parse().unwrap(), &DeltaWeights::default()).unwrap()
    }

    #[test]
    fn regression_words() {
        assert_eq!(score("aaaaaaaaaa"), 0.0);
        assert_eq!(score("ababababab"), 5.0);
        assert_eq!(score("bggbbbgbbbbbgb"), 10.0);
        assert_eq!(score("aat"), 10.0);
        assert!((score("aaaaaaaagggggb") - 2.0).abs() < 1e-12);
    }

    #[test]
    fn empty_word_is_rejected() {
        assert_eq!(delta_score(&Word::empty(), &DeltaWeights::default()), Err(ProtocolError::EmptyWord));
    }

    #[test]
    fn zero_weight_only_word_is_undefined() {
        let w = DeltaWeights { k_gamma: 0.0, ..DeltaWeights::default() };
        assert!(matches!(delta_score(&"ggg".parse().unwrap(), &w), Err(ProtocolError::UndefinedScore(_))));
    }

    #[test]
    fn weights_are_checked() {
        assert!(DeltaWeights::default().check().is_ok());
        assert!(DeltaWeights { k_beta: -1.0, ..DeltaWeights::default() }.check().is_err());
        assert!(DeltaWeights { m: 0.0, ..DeltaWeights::default() }.check().is_err());
    }
}
