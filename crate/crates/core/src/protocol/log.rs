//! Session logs: one JSON step record per line, appended as the session
//! advances.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use super::session::{ProtocolEngine, ProtocolSession, ProtocolStep};
use super::ProtocolError;

pub fn step_to_line(step: &ProtocolStep) -> String {
    serde_json::to_string(step).expect("step serializes")
}

pub fn log_to_string(steps: &[ProtocolStep]) -> String {
    steps.iter().map(|s| step_to_line(s) + "\n").collect()
}

pub fn parse_log(text: &str) -> Result<Vec<ProtocolStep>, ProtocolError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| ProtocolError::Log { line: i + 1, message: e.to_string() })
        })
        .collect()
}

pub fn read_log(path: &Path) -> Result<Vec<ProtocolStep>, ProtocolError> {
    let text = std::fs::read_to_string(path).map_err(|e| ProtocolError::Io(format!("{}: {e}", path.display())))?;
    parse_log(&text)
}

pub fn append_step(path: &Path, step: &ProtocolStep) -> Result<(), ProtocolError> {
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| ProtocolError::Io(format!("{}: {e}", path.display())))?;
    writeln!(f, "{}", step_to_line(step)).map_err(|e| ProtocolError::Io(format!("{}: {e}", path.display())))
}

/// Rebuilds a session from the words of a log and checks that every
/// recomputed step is identical to the recorded one.
pub fn replay(engine: &ProtocolEngine, records: &[ProtocolStep]) -> Result<ProtocolSession, ProtocolError> {
    let first = records.first().ok_or(ProtocolError::Log { line: 0, message: "empty log".into() })?;
    let mut session = engine.start_session(first.meta_state);
    for (i, record) in records.iter().enumerate() {
        session = engine.step(&session, &record.word)?;
        let got = session.steps.last().expect("step just added");
        if got != record {
            return Err(ProtocolError::ReplayMismatch { step: i + 1 });
        }
    }
    Ok(session)
}
