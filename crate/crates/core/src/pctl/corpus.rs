use super::ast::PctlFormula;
use super::parser::{parse_pctl, ParseError};

/// Property corpus shipped with the toolkit, one `name: formula` per line.
///
/// Atoms: `a`, `b`, `g`, `t` hold in states entered by the matching action,
/// `a1`/`a2` in the normal-end and left-game final states, `launch` in the
/// initial state, and every state also carries its own name.
pub const DEFAULT_CORPUS: &str = "\
# Reachability of a final state.
final_reach: P =1 [F (a1 or a2)]
# Reachability of a precise configuration: leaving before the game is over.
leave_game: P =? [F a2]
# Reachability without violating a constraint: playing to the end without inactivity.
no_pause_to_end: P >0 [(not g) U a1]
# Reachability without passing through another state: right picture before any wrong one.
right_before_wrong: P =? [(not b) U a]
# A whole game without a single wrong picture.
perfect_game: P =? [(not b) U a1]
# Never interacting until the end of the game.
never_interact: P =? [(not a and not b) U a1]
# Concatenation of two actions: every wrong picture is followed by inactivity.
mistake_then_pause: P >0 [G (b -> X g)]
";

#[derive(Debug, Clone, PartialEq)]
pub struct NamedProperty {
    pub name: String,
    pub formula: PctlFormula,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {kind}")]
pub struct CorpusError {
    pub line: usize,
    pub kind: CorpusErrorKind,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CorpusErrorKind {
    #[error("expected `name: formula`")]
    MissingName,
    #[error("duplicate property name `{0}`")]
    Duplicate(String),
    #[error("{0}")]
    Syntax(ParseError),
}

/// Parses a corpus. Blank lines and lines starting with `#` are skipped.
pub fn parse_corpus(text: &str) -> Result<Vec<NamedProperty>, CorpusError> {
    let mut out: Vec<NamedProperty> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |kind| CorpusError { line: i + 1, kind };
        let (name, formula) = line.split_once(':').ok_or_else(|| err(CorpusErrorKind::MissingName))?;
        let name = name.trim();
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(err(CorpusErrorKind::MissingName));
        }
        if out.iter().any(|p| p.name == name) {
            return Err(err(CorpusErrorKind::Duplicate(name.to_string())));
        }
        let formula = parse_pctl(formula).map_err(|e| err(CorpusErrorKind::Syntax(e)))?;
        out.push(NamedProperty { name: name.to_string(), formula });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_corpus_parses() {
        let corpus = parse_corpus(DEFAULT_CORPUS).unwrap();
        assert_eq!(corpus.len(), 7);
        assert_eq!(corpus[0].name, "final_reach");
        assert!(corpus.iter().any(|p| p.formula.is_query()));
    }

    #[test]
    fn reports_line_of_bad_entry() {
        let e = parse_corpus("ok: P =? [F a]\n\nbad P =? [F a]\n").unwrap_err();
        assert_eq!(e.line, 3);
        let e = parse_corpus("x: P =? [F a]\nx: P =? [F b]").unwrap_err();
        assert_eq!(e.kind, CorpusErrorKind::Duplicate("x".into()));
        let e = parse_corpus("x: P =? [F (a]").unwrap_err();
        assert!(matches!(e.kind, CorpusErrorKind::Syntax(_)));
    }
}
