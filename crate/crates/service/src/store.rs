//! Session persistence: `<id>.jsonl` holds the step log, `<id>.meta.json`
//! the hypothesis and timestamps. Sessions are rebuilt by replaying logs.

use std::path::{Path, PathBuf};

use doxa_core::protocol::{append_step, read_log, replay, ProtocolEngine, ProtocolSession, ProtocolStep};

use crate::resource::SessionMeta;

#[derive(Debug, Clone, Default)]
pub struct Store {
    dir: Option<PathBuf>,
}

impl Store {
    pub fn new(dir: Option<PathBuf>) -> std::io::Result<Self> {
        if let Some(d) = &dir {
            std::fs::create_dir_all(d)?;
        }
        Ok(Store { dir })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn log_path(dir: &Path, id: &str) -> PathBuf {
        dir.join(format!("{id}.jsonl"))
    }

    fn meta_path(dir: &Path, id: &str) -> PathBuf {
        dir.join(format!("{id}.meta.json"))
    }

    pub fn save_meta(&self, meta: &SessionMeta) -> Result<(), String> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let path = Self::meta_path(dir, &meta.id);
        let tmp = path.with_extension("json.tmp");
        let body = serde_json::to_string(meta).expect("meta serializes");
        std::fs::write(&tmp, body).and_then(|_| std::fs::rename(&tmp, &path)).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn append(&self, id: &str, step: &ProtocolStep) -> Result<(), String> {
        let Some(dir) = &self.dir else { return Ok(()) };
        append_step(&Self::log_path(dir, id), step).map_err(|e| e.to_string())
    }

    /// Every stored session, rebuilt through `engine`. Sessions whose log
    /// does not replay are skipped with a warning.
    pub fn load_all(&self, engine: &ProtocolEngine) -> Result<Vec<(SessionMeta, ProtocolSession)>, String> {
        let Some(dir) = &self.dir else { return Ok(Vec::new()) };
        let mut out = Vec::new();
        let mut entries: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| format!("{}: {e}", dir.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.to_string_lossy().ends_with(".meta.json"))
            .collect();
        entries.sort();
        for path in entries {
            match Self::load_one(dir, &path, engine) {
                Ok(s) => out.push(s),
                Err(e) => log::warn!("skipping stored session {}: {e}", path.display()),
            }
        }
        Ok(out)
    }

    fn load_one(dir: &Path, meta_path: &Path, engine: &ProtocolEngine) -> Result<(SessionMeta, ProtocolSession), String> {
        let text = std::fs::read_to_string(meta_path).map_err(|e| e.to_string())?;
        let meta: SessionMeta = serde_json::from_str(&text).map_err(|e| e.to_string())?;
        let log = Self::log_path(dir, &meta.id);
        let session = if log.exists() {
            let steps = read_log(&log).map_err(|e| e.to_string())?;
            if steps.is_empty() {
                engine.start_session(meta.hypothesis)
            } else {
                if steps[0].meta_state != meta.hypothesis {
                    return Err("log does not start at the hypothesis".into());
                }
                replay(engine, &steps).map_err(|e| e.to_string())?
            }
        } else {
            engine.start_session(meta.hypothesis)
        };
        Ok((meta, session))
    }
}
