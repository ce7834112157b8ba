use std::io::Write;
use std::path::{Path, PathBuf};

use super::{Session, SessionError};

/// One JSON document per session under `<data-dir>/sessions/`.
///
/// Writes go to a temporary file in the same directory which is then renamed
/// over the target, so a reader never sees a partial document.
#[derive(Debug, Clone)]
pub struct SessionStore {
    dir: PathBuf,
}

pub(crate) fn is_session_id(id: &str) -> bool {
    id.len() == 32 && id.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}

impl SessionStore {
    pub fn open(data_dir: &Path) -> Result<Self, SessionError> {
        let dir = data_dir.join("sessions");
        std::fs::create_dir_all(&dir)?;
        // Fail now rather than on the first save.
        tempfile::NamedTempFile::new_in(&dir)?;
        Ok(SessionStore { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, id: &str) -> Result<PathBuf, SessionError> {
        if !is_session_id(id) {
            return Err(SessionError::UnknownSession(id.to_owned()));
        }
        Ok(self.dir.join(format!("{id}.json")))
    }

    pub fn save(&self, session: &Session) -> Result<(), SessionError> {
        let path = self.path(&session.id)?;
        let json =
            serde_json::to_vec_pretty(session).map_err(|e| SessionError::Storage(e.to_string()))?;
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(&json)?;
        tmp.write_all(b"\n")?;
        tmp.as_file().sync_all()?;
        tmp.persist(&path)
            .map_err(|e| SessionError::Storage(e.to_string()))?;
        Ok(())
    }

    pub fn load(&self, id: &str) -> Result<Session, SessionError> {
        let path = self.path(id)?;
        let bytes = match std::fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(SessionError::UnknownSession(id.to_owned()))
            }
            Err(e) => return Err(e.into()),
        };
        serde_json::from_slice(&bytes)
            .map_err(|e| SessionError::Storage(format!("{}: {e}", path.display())))
    }

    /// Ids of stored sessions, sorted.
    pub fn ids(&self) -> Result<Vec<String>, SessionError> {
        let mut ids: Vec<String> = std::fs::read_dir(&self.dir)?
            .filter_map(Result::ok)
            .filter_map(|e| {
                let name = e.file_name().into_string().ok()?;
                let id = name.strip_suffix(".json")?;
                is_session_id(id).then(|| id.to_owned())
            })
            .collect();
        ids.sort();
        Ok(ids)
    }
}
