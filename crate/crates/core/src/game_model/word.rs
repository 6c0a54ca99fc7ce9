use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// One observable action in the Match Items game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionSymbol {
    /// The patient picks the right picture.
    Alpha,
    /// The patient picks a wrong picture.
    Beta,
    /// The patient stays inactive.
    Gamma,
    /// The patient leaves the game zone.
    Theta,
}

impl ActionSymbol {
    pub const ALL: [ActionSymbol; 4] = [
        ActionSymbol::Alpha,
        ActionSymbol::Beta,
        ActionSymbol::Gamma,
        ActionSymbol::Theta,
    ];

    /// One-keystroke encoding (`a`, `b`, `g`, `t`).
    pub fn letter(self) -> char {
        match self {
            ActionSymbol::Alpha => 'a',
            ActionSymbol::Beta => 'b',
            ActionSymbol::Gamma => 'g',
            ActionSymbol::Theta => 't',
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ActionSymbol::Alpha => "alpha",
            ActionSymbol::Beta => "beta",
            ActionSymbol::Gamma => "gamma",
            ActionSymbol::Theta => "theta",
        }
    }

    /// Atomic proposition carried by states entered through this action.
    pub fn atom(self) -> &'static str {
        match self {
            ActionSymbol::Alpha => "a",
            ActionSymbol::Beta => "b",
            ActionSymbol::Gamma => "g",
            ActionSymbol::Theta => "t",
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c {
            'a' | 'α' => Some(ActionSymbol::Alpha),
            'b' | 'β' => Some(ActionSymbol::Beta),
            'g' | 'γ' => Some(ActionSymbol::Gamma),
            't' | 'θ' => Some(ActionSymbol::Theta),
            _ => None,
        }
    }

    /// Accepts a single letter or a full action name.
    pub fn from_token(token: &str) -> Option<Self> {
        let mut chars = token.chars();
        if let (Some(c), None) = (chars.next(), chars.next()) {
            return Self::from_letter(c);
        }
        ActionSymbol::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(token))
    }
}

impl fmt::Display for ActionSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WordError {
    #[error("invalid action `{found}` at position {position} (expected a, b, g, t or a full action name)")]
    InvalidSymbol { position: usize, found: String },
    #[error("theta at position {position} must be the last action of a word")]
    ThetaNotLast { position: usize },
}

/// A finite sequence of game actions. Quitting ends a session, so theta may
/// only appear as the final symbol.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Word(Vec<ActionSymbol>);

impl Word {
    pub fn new(actions: Vec<ActionSymbol>) -> Result<Self, WordError> {
        if let Some(position) = actions
            .iter()
            .position(|a| *a == ActionSymbol::Theta)
            .filter(|&p| p + 1 != actions.len())
        {
            return Err(WordError::ThetaNotLast { position });
        }
        Ok(Word(actions))
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// `action` repeated `n` times.
    pub fn repeat(action: ActionSymbol, n: usize) -> Result<Self, WordError> {
        Word::new(vec![action; n])
    }

    pub fn actions(&self) -> &[ActionSymbol] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of occurrences of `action`.
    pub fn count(&self, action: ActionSymbol) -> usize {
        self.0.iter().filter(|a| **a == action).count()
    }

    pub fn contains(&self, action: ActionSymbol) -> bool {
        self.0.contains(&action)
    }

    pub fn iter(&self) -> impl Iterator<Item = ActionSymbol> + '_ {
        self.0.iter().copied()
    }

    pub fn concat(&self, other: &Word) -> Result<Word, WordError> {
        let mut actions = self.0.clone();
        actions.extend_from_slice(&other.0);
        Word::new(actions)
    }

    pub fn prefix(&self, len: usize) -> Word {
        Word(self.0[..len].to_vec())
    }

    pub fn split_at(&self, mid: usize) -> (Word, Word) {
        let (u, v) = self.0.split_at(mid);
        (Word(u.to_vec()), Word(v.to_vec()))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.0 {
            write!(f, "{}", a.letter())?;
        }
        Ok(())
    }
}

/// Parses either a run of letters (`abgt`, Greek letters allowed) or a
/// whitespace/comma separated list of letters and action names.
impl FromStr for Word {
    type Err = WordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let tokenized = s.contains(|c: char| c.is_whitespace() || c == ',');
        let mut actions = Vec::new();
        if tokenized {
            for (position, token) in s
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .enumerate()
            {
                let action = ActionSymbol::from_token(token).ok_or_else(|| WordError::InvalidSymbol {
                    position,
                    found: token.to_string(),
                })?;
                actions.push(action);
            }
        } else {
            for (position, c) in s.chars().enumerate() {
                let action = ActionSymbol::from_letter(c).ok_or_else(|| WordError::InvalidSymbol {
                    position,
                    found: c.to_string(),
                })?;
                actions.push(action);
            }
        }
        Word::new(actions)
    }
}

impl TryFrom<String> for Word {
    type Error = WordError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Word> for String {
    fn from(w: Word) -> String {
        w.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_letters_names_and_greek() {
        let w: Word = "abgt".parse().unwrap();
        assert_eq!(w.actions(), &ActionSymbol::ALL);
        let w2: Word = "alpha beta, gamma theta".parse().unwrap();
        assert_eq!(w, w2);
        let w3: Word = "αβγθ".parse().unwrap();
        assert_eq!(w, w3);
        assert_eq!(w.to_string(), "abgt");
    }

    #[test]
    fn rejects_unknown_symbols() {
        assert_eq!(
            "abq".parse::<Word>(),
            Err(WordError::InvalidSymbol { position: 2, found: "q".into() })
        );
        assert!("alpha zeta".parse::<Word>().is_err());
    }

    #[test]
    fn theta_must_be_last() {
        assert_eq!("ta".parse::<Word>(), Err(WordError::ThetaNotLast { position: 0 }));
        assert!("aat".parse::<Word>().is_ok());
        let u: Word = "at".parse().unwrap();
        assert!(u.concat(&"a".parse().unwrap()).is_err());
    }

    #[test]
    fn empty_word() {
        let w: Word = "".parse().unwrap();
        assert!(w.is_empty());
        assert_eq!(w, Word::empty());
    }

    #[test]
    fn counts() {
        let w: Word = "aabgg".parse().unwrap();
        assert_eq!(w.count(ActionSymbol::Alpha), 2);
        assert_eq!(w.count(ActionSymbol::Gamma), 2);
        assert!(!w.contains(ActionSymbol::Theta));
    }
}
