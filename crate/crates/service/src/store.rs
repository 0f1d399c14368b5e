//! Session store: an in-memory map backed by one JSON file per session.
//!
//! Each session has its own mutex, so requests to one session are
//! serialized while different sessions proceed in parallel. Every mutation
//! is written to disk (temp file + rename) before it becomes visible.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::{Result, ServiceError};
use crate::session::{Session, SessionReport};

struct Slot {
    session: Session,
    /// Set under the lock by `delete`, so a writer that was already waiting
    /// cannot resurrect the session on disk.
    deleted: bool,
}

#[derive(Default)]
pub struct SessionStore {
    dir: Option<PathBuf>,
    sessions: RwLock<HashMap<String, Arc<Mutex<Slot>>>>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn storage(e: impl std::fmt::Display) -> ServiceError {
    ServiceError::Storage(e.to_string())
}

fn lock(slot: &Mutex<Slot>) -> MutexGuard<'_, Slot> {
    // a panic mid-request leaves the last committed state in place
    slot.lock().unwrap_or_else(|p| p.into_inner())
}

impl SessionStore {
    /// Volatile store, for tests and throwaway servers.
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (creating if needed) a store directory and loads every
    /// `*.json` session in it. A corrupt file is an error, not skipped.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(storage)?;
        let mut sessions = HashMap::new();
        for entry in fs::read_dir(&dir).map_err(storage)? {
            let path = entry.map_err(storage)?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            let text = fs::read_to_string(&path).map_err(storage)?;
            let session: Session = serde_json::from_str(&text)
                .map_err(|e| storage(format!("{}: {e}", path.display())))?;
            let slot = Slot {
                session,
                deleted: false,
            };
            sessions.insert(slot.session.id.clone(), Arc::new(Mutex::new(slot)));
        }
        tracing::info!(dir = %dir.display(), sessions = sessions.len(), "session store opened");
        Ok(Self {
            dir: Some(dir),
            sessions: RwLock::new(sessions),
        })
    }

    pub fn len(&self) -> usize {
        self.sessions
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn path(&self, id: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{id}.json")))
    }

    fn persist(&self, session: &Session) -> Result<()> {
        let Some(path) = self.path(&session.id) else {
            return Ok(());
        };
        let tmp = path.with_extension("json.tmp");
        let text = serde_json::to_string_pretty(session).map_err(storage)?;
        fs::write(&tmp, text).map_err(storage)?;
        fs::rename(&tmp, &path).map_err(storage)
    }

    fn slot(&self, id: &str) -> Result<Arc<Mutex<Slot>>> {
        self.sessions
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(id.to_string()))
    }

    pub fn create(&self, alternatives: Vec<String>, scale: &str) -> Result<Session> {
        let id = uuid::Uuid::new_v4().to_string();
        let session = Session::new(id.clone(), alternatives, scale, now_ms())?;
        self.persist(&session)?;
        let slot = Slot {
            session: session.clone(),
            deleted: false,
        };
        self.sessions
            .write()
            .unwrap_or_else(|p| p.into_inner())
            .insert(id, Arc::new(Mutex::new(slot)));
        Ok(session)
    }

    pub fn session(&self, id: &str) -> Result<Session> {
        let slot = self.slot(id)?;
        let guard = lock(&slot);
        if guard.deleted {
            return Err(ServiceError::NotFound(id.to_string()));
        }
        Ok(guard.session.clone())
    }

    pub fn report(&self, id: &str) -> Result<SessionReport> {
        let slot = self.slot(id)?;
        let guard = lock(&slot);
        if guard.deleted {
            return Err(ServiceError::NotFound(id.to_string()));
        }
        Ok(guard.session.report())
    }

    /// Stores a judgment and returns the recomputed report. If the write to
    /// disk fails the in-memory session is left unchanged.
    pub fn set_judgment(&self, id: &str, i: usize, j: usize, value: f64) -> Result<SessionReport> {
        let slot = self.slot(id)?;
        let mut guard = lock(&slot);
        if guard.deleted {
            return Err(ServiceError::NotFound(id.to_string()));
        }
        let mut next = guard.session.clone();
        next.set_judgment(i, j, value, now_ms())?;
        self.persist(&next)?;
        guard.session = next;
        Ok(guard.session.report())
    }

    pub fn delete(&self, id: &str) -> Result<()> {
        let slot = self
            .sessions
            .write()
            .unwrap_or_else(|p| p.into_inner())
            .remove(id)
            .ok_or_else(|| ServiceError::NotFound(id.to_string()))?;
        let mut guard = lock(&slot);
        guard.deleted = true;
        if let Some(path) = self.path(id) {
            match fs::remove_file(&path) {
                Ok(()) => {}
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
                Err(e) => return Err(storage(e)),
            }
        }
        Ok(())
    }
}
