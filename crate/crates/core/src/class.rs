use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Cognitive class of a patient. The derived ordering runs from the mildest
/// class to the most severe one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PatientClass {
    #[serde(rename = "h")]
    Healthy,
    #[serde(rename = "m")]
    MildNcd,
    #[serde(rename = "M")]
    MajorNcd,
}

impl PatientClass {
    pub const ALL: [PatientClass; 3] = [
        PatientClass::Healthy,
        PatientClass::MildNcd,
        PatientClass::MajorNcd,
    ];

    /// Single-character symbol used in trace files and on the wire.
    pub fn symbol(self) -> char {
        match self {
            PatientClass::Healthy => 'h',
            PatientClass::MildNcd => 'm',
            PatientClass::MajorNcd => 'M',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            'h' => Some(PatientClass::Healthy),
            'm' => Some(PatientClass::MildNcd),
            'M' => Some(PatientClass::MajorNcd),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            PatientClass::Healthy => "healthy",
            PatientClass::MildNcd => "mild",
            PatientClass::MajorNcd => "major",
        }
    }

    /// Name of the test automaton associated with this class, e.g. `A_h`.
    pub fn test_name(self) -> String {
        format!("A_{}", self.symbol())
    }
}

impl fmt::Display for PatientClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown patient class `{0}` (expected h, m or M)")]
pub struct UnknownClass(pub String);

impl FromStr for PatientClass {
    type Err = UnknownClass;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let mut chars = t.chars();
        if let (Some(c), None) = (chars.next(), chars.next()) {
            if let Some(class) = PatientClass::from_symbol(c) {
                return Ok(class);
            }
        }
        match t {
            "healthy" | "A_h" => Ok(PatientClass::Healthy),
            "mild" | "A_m" => Ok(PatientClass::MildNcd),
            "major" | "A_M" => Ok(PatientClass::MajorNcd),
            _ => Err(UnknownClass(s.to_string())),
        }
    }
}
