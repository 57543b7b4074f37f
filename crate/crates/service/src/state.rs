use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use tokio::sync::Mutex;

use assessits::register::{commit_register, load_register, RegisterError};
use assessits::RiskRegister;

use crate::error::ApiError;

/// Shared register state.
///
/// Readers clone the current `Arc` and never block on a writer for longer
/// than the pointer swap. All writes go through [`AppState::commit`], which
/// holds the writer lock for the whole check, persist and publish sequence.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    snapshot: RwLock<Arc<RiskRegister>>,
    writer: Mutex<()>,
    path: Option<PathBuf>,
    read_only: bool,
}

impl AppState {
    /// In-memory state with no backing file.
    pub fn in_memory(register: RiskRegister) -> Self {
        AppState::build(register, None, false)
    }

    /// Loads `path` as the backing register document.
    pub fn open(path: impl AsRef<Path>, read_only: bool) -> Result<Self, RegisterError> {
        let path = path.as_ref();
        let register = load_register(path)?;
        Ok(AppState::build(register, Some(path.to_path_buf()), read_only))
    }

    pub fn read_only(mut self) -> Self {
        let inner = Arc::get_mut(&mut self.inner).expect("read_only must be set before sharing the state");
        inner.read_only = true;
        self
    }

    fn build(register: RiskRegister, path: Option<PathBuf>, read_only: bool) -> Self {
        AppState {
            inner: Arc::new(Inner {
                snapshot: RwLock::new(Arc::new(register)),
                writer: Mutex::new(()),
                path,
                read_only,
            }),
        }
    }

    pub fn snapshot(&self) -> Arc<RiskRegister> {
        self.inner.snapshot.read().expect("snapshot lock poisoned").clone()
    }

    pub fn is_read_only(&self) -> bool {
        self.inner.read_only
    }

    /// Applies `change` to the current register if it is still at
    /// `expected_version`, persists the result and publishes it.
    pub async fn commit<F>(&self, expected_version: u64, change: F) -> Result<Arc<RiskRegister>, ApiError>
    where
        F: FnOnce(&RiskRegister) -> Result<RiskRegister, ApiError>,
    {
        if self.inner.read_only {
            return Err(ApiError::validation("register is served read-only"));
        }
        let _guard = self.inner.writer.lock().await;
        let current = self.snapshot();
        if current.version() != expected_version {
            return Err(ApiError::conflict(expected_version, current.version()));
        }
        let next = Arc::new(change(&current)?);
        if let Some(path) = &self.inner.path {
            match commit_register(&next, path, Some(current.version())) {
                Ok(()) => {}
                Err(RegisterError::VersionConflict { actual, .. }) => {
                    // Someone else wrote the file; adopt it so the client can rebase.
                    if let Ok(on_disk) = load_register(path) {
                        self.publish(Arc::new(on_disk));
                    }
                    return Err(ApiError::conflict(expected_version, actual));
                }
                Err(e) => return Err(e.into()),
            }
        }
        self.publish(next.clone());
        tracing::info!(version = next.version(), "register committed");
        Ok(next)
    }

    fn publish(&self, register: Arc<RiskRegister>) {
        *self.inner.snapshot.write().expect("snapshot lock poisoned") = register;
    }
}
