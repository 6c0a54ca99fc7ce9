//! Finite-trace LTL over meta-automaton class traces, and the protocol stop
//! conditions built on it.

mod ltlf;
mod stop;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::class::PatientClass;

pub use ltlf::{eval_ltlf, parse_ltlf, LtlfFormula, LtlfParseError};
pub use stop::{
    check_stop, detect_max_tests, detect_oscillation, detect_oscillation_with, detect_steady_state, StopConfig,
    StopDecision, StopReason,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TraceError {
    #[error("position {position} out of range for a trace of length {len}")]
    PositionOutOfRange { position: usize, len: usize },
    #[error("line {line}: `{found}` is not a class symbol (expected h, m or M)")]
    InvalidSymbol { line: usize, found: String },
    #[error("{0}")]
    Io(String),
}

/// Classes reached by the meta-automaton, one per completed test.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassTrace(Vec<PatientClass>);

impl ClassTrace {
    pub fn new(entries: Vec<PatientClass>) -> Self {
        ClassTrace(entries)
    }

    pub fn entries(&self) -> &[PatientClass] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, class: PatientClass) {
        self.0.push(class);
    }

    pub fn last(&self) -> Option<PatientClass> {
        self.0.last().copied()
    }

    /// Trace file format: one class symbol per line, blank lines and `#`
    /// comments ignored.
    pub fn parse_lines(text: &str) -> Result<Self, TraceError> {
        let mut out = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let class = match line {
                "h" | "𝔥" => PatientClass::Healthy,
                "m" | "𝔪" => PatientClass::MildNcd,
                "M" | "𝔐" => PatientClass::MajorNcd,
                _ => return Err(TraceError::InvalidSymbol { line: i + 1, found: line.to_string() }),
            };
            out.push(class);
        }
        Ok(ClassTrace(out))
    }

    pub fn to_lines(&self) -> String {
        self.0.iter().map(|c| format!("{c}\n")).collect()
    }

    pub fn read(path: &Path) -> Result<Self, TraceError> {
        let text = std::fs::read_to_string(path).map_err(|e| TraceError::Io(format!("{}: {e}", path.display())))?;
        Self::parse_lines(&text)
    }
}

impl From<Vec<PatientClass>> for ClassTrace {
    fn from(v: Vec<PatientClass>) -> Self {
        ClassTrace(v)
    }
}

impl fmt::Display for ClassTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.0 {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Compact form: a run of class symbols such as `hhmM`.
impl FromStr for ClassTrace {
    type Err = TraceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .filter(|c| !c.is_whitespace() && *c != ',')
            .map(|c| match c {
                'h' | '𝔥' => Ok(PatientClass::Healthy),
                'm' | '𝔪' => Ok(PatientClass::MildNcd),
                'M' | '𝔐' => Ok(PatientClass::MajorNcd),
                other => Err(TraceError::InvalidSymbol { line: 1, found: other.to_string() }),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(ClassTrace)
    }
}
