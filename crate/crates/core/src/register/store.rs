//! Register documents on disk.

use std::fs;
use std::io::{ErrorKind, Write};
use std::path::Path;

use tempfile::NamedTempFile;

use super::{RegisterError, RiskRegister};

pub fn load_register(path: impl AsRef<Path>) -> Result<RiskRegister, RegisterError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        ErrorKind::NotFound => RegisterError::NotFound(path.to_path_buf()),
        _ => RegisterError::Io(e),
    })?;
    RiskRegister::from_document(&text)
}

/// Writes the canonical document atomically: a temp file in the same
/// directory is synced and then renamed over `path`.
pub fn save_register(register: &RiskRegister, path: impl AsRef<Path>) -> Result<(), RegisterError> {
    write_atomic(path.as_ref(), register.to_document().as_bytes())
}

/// Saves `register` only if the file on disk is still at `base_version`.
///
/// A missing file counts as a match when `base_version` is `None`.
pub fn commit_register(
    register: &RiskRegister,
    path: impl AsRef<Path>,
    base_version: Option<u64>,
) -> Result<(), RegisterError> {
    let path = path.as_ref();
    let on_disk = match load_register(path) {
        Ok(r) => Some(r.version()),
        Err(RegisterError::NotFound(_)) => None,
        Err(e) => return Err(e),
    };
    if on_disk != base_version {
        return Err(RegisterError::VersionConflict {
            expected: base_version.unwrap_or(0),
            actual: on_disk.unwrap_or(0),
        });
    }
    save_register(register, path)
}

/// Writes `bytes` to `path` through a synced temp file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), RegisterError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| RegisterError::Io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::worked_example;
    use super::*;

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("register.json");
        let r = worked_example();
        save_register(&r, &path).unwrap();
        let first = fs::read(&path).unwrap();
        assert_eq!(load_register(&path).unwrap(), r);
        save_register(&r, &path).unwrap();
        assert_eq!(fs::read(&path).unwrap(), first);
    }

    #[test]
    fn version_survives_save() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        let r = RiskRegister {
            version: 7,
            ..RiskRegister::default()
        };
        save_register(&r, &path).unwrap();
        assert_eq!(load_register(&path).unwrap().version(), 7);
    }

    #[test]
    fn missing_file_is_not_found() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_register(dir.path().join("nope.json")),
            Err(RegisterError::NotFound(_))
        ));
    }

    #[test]
    fn commit_checks_disk_version() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        let r = RiskRegister::default();
        commit_register(&r, &path, None).unwrap();
        let r1 = r.with_review_period(90);
        commit_register(&r1, &path, Some(0)).unwrap();
        let stale_writer = r.with_review_period(30);
        match commit_register(&stale_writer, &path, Some(0)) {
            Err(RegisterError::VersionConflict { expected: 0, actual: 1 }) => {}
            other => panic!("expected conflict, got {other:?}"),
        }
        assert_eq!(load_register(&path).unwrap().review_period_days(), 90);
    }
}
