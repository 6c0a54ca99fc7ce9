//! JSON model and class-parameter files. See `docs/model-format.md`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::match_items::ClassParams;
use super::pdfa::{Pdfa, PdfaBuilder};
use super::word::ActionSymbol;
use super::GameModelError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub from: String,
    pub action: ActionSymbol,
    pub to: String,
    pub prob: f64,
}

/// On-disk layout of a model.
///
/// The first record for a given `(from, action)` defines the transition; any
/// later record for the same pair with a different target only places
/// probability mass, which validation then reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub states: Vec<String>,
    pub alphabet: Vec<ActionSymbol>,
    pub initial: String,
    pub finals: Vec<String>,
    pub transitions: Vec<TransitionRecord>,
    #[serde(default)]
    pub labels: BTreeMap<String, Vec<String>>,
}

impl From<&Pdfa> for ModelFile {
    fn from(m: &Pdfa) -> Self {
        let name = |id| m.state_name(id).to_string();
        let mut transitions: Vec<TransitionRecord> = m
            .edges()
            .map(|(q, a, e)| TransitionRecord { from: name(q), action: a, to: name(e.to), prob: e.prob })
            .collect();
        transitions.extend(
            m.off_edge_mass()
                .map(|(q, a, t, p)| TransitionRecord { from: name(q), action: a, to: name(t), prob: p }),
        );
        let labels = m
            .state_ids()
            .filter(|&q| !m.labels(q).is_empty())
            .map(|q| (name(q), m.labels(q).iter().cloned().collect()))
            .collect();
        ModelFile {
            states: m.state_names().to_vec(),
            alphabet: m.alphabet().iter().copied().collect(),
            initial: name(m.initial()),
            finals: m.finals().iter().map(|&f| name(f)).collect(),
            transitions,
            labels,
        }
    }
}

impl TryFrom<ModelFile> for Pdfa {
    type Error = GameModelError;

    fn try_from(file: ModelFile) -> Result<Self, Self::Error> {
        let mut b = PdfaBuilder::new().with_alphabet(file.alphabet.iter().copied());
        for s in &file.states {
            let before = b.lookup(s).is_ok();
            if before {
                return Err(GameModelError::Format(format!("state `{s}` is listed twice")));
            }
            b.state(s);
        }
        let initial = b.lookup(&file.initial)?;
        b.set_initial(initial);
        for f in &file.finals {
            let id = b.lookup(f)?;
            b.add_final(id);
        }
        for t in &file.transitions {
            let (from, to) = (b.lookup(&t.from)?, b.lookup(&t.to)?);
            if b.transition(from, t.action, to, t.prob).is_err() {
                b.probability(from, t.action, to, t.prob);
            }
        }
        for (state, atoms) in &file.labels {
            let id = b.lookup(state)?;
            for atom in atoms {
                b.label(id, atom);
            }
        }
        b.build()
    }
}

pub fn model_to_json(model: &Pdfa) -> String {
    serde_json::to_string_pretty(&ModelFile::from(model)).expect("model serialization cannot fail")
}

pub fn model_from_json(text: &str) -> Result<Pdfa, GameModelError> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| GameModelError::Format(e.to_string()))?;
    Pdfa::try_from(file)
}

pub fn read_model(path: &Path) -> Result<Pdfa, GameModelError> {
    let text = std::fs::read_to_string(path).map_err(|e| GameModelError::Io(format!("{}: {e}", path.display())))?;
    model_from_json(&text)
}

pub fn write_model(path: &Path, model: &Pdfa) -> Result<(), GameModelError> {
    std::fs::write(path, model_to_json(model) + "\n").map_err(|e| GameModelError::Io(format!("{}: {e}", path.display())))
}

/// Class parameters keyed by class name (`h`, `m`, `M`).
pub type ClassParamsFile = BTreeMap<String, ClassParams>;

pub fn params_from_json(text: &str) -> Result<ClassParamsFile, GameModelError> {
    let file: ClassParamsFile = serde_json::from_str(text).map_err(|e| GameModelError::Format(e.to_string()))?;
    for (name, p) in &file {
        p.check().map_err(|e| GameModelError::Format(format!("class `{name}`: {e}")))?;
    }
    Ok(file)
}

pub fn params_to_json(file: &ClassParamsFile) -> String {
    serde_json::to_string_pretty(file).expect("parameter serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::class::PatientClass;
    use crate::game_model::{build_match_items, validate_pdfa, GameShape};

    #[test]
    fn class_model_round_trips() {
        let m = build_match_items(ClassParams::table1(PatientClass::MildNcd), GameShape::new(3, 7).unwrap()).unwrap();
        let back = model_from_json(&model_to_json(&m)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn off_edge_mass_survives_round_trip() {
        let text = r#"{
            "states": ["q0", "q1", "q2"],
            "alphabet": ["alpha", "beta"],
            "initial": "q0",
            "finals": ["q1", "q2"],
            "transitions": [
                {"from": "q0", "action": "alpha", "to": "q1", "prob": 0.4},
                {"from": "q0", "action": "beta", "to": "q2", "prob": 0.5},
                {"from": "q0", "action": "alpha", "to": "q2", "prob": 0.1},
                {"from": "q1", "action": "alpha", "to": "q1", "prob": 1.0},
                {"from": "q2", "action": "alpha", "to": "q2", "prob": 1.0}
            ],
            "labels": {"q1": ["a1"]}
        }"#;
        let m = model_from_json(text).unwrap();
        assert_eq!(validate_pdfa(&m).violations.len(), 1);
        assert_eq!(model_from_json(&model_to_json(&m)).unwrap(), m);
    }

    #[test]
    fn rejects_unknown_states_and_fields() {
        let text = r#"{"states": ["q0"], "alphabet": [], "initial": "q9", "finals": [], "transitions": []}"#;
        assert!(matches!(model_from_json(text), Err(GameModelError::UnknownState(_))));
        let text = r#"{"states": ["q0"], "alphabet": [], "initial": "q0", "finals": [], "transitions": [], "extra": 1}"#;
        assert!(matches!(model_from_json(text), Err(GameModelError::Format(_))));
    }

    #[test]
    fn params_file_round_trips_and_validates() {
        let file: ClassParamsFile = PatientClass::ALL
            .iter()
            .map(|c| (c.symbol().to_string(), ClassParams::table1(*c)))
            .collect();
        let back = params_from_json(&params_to_json(&file)).unwrap();
        assert_eq!(back, file);
        assert!(params_from_json(r#"{"h": {"alpha": 0.5, "beta": 0.1, "gamma": 0.1, "theta": 0.1}}"#).is_err());
    }
}
