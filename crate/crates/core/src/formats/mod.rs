//! On-disk formats: annotations, the model container, atomic file writes.

pub mod annotation;
pub mod model;

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub use annotation::{load_annotations, save_annotations, Annotation};
pub use model::{deserialize_model, load_model, save_model, serialize_model, MAGIC};

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::Argument(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    result.map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

/// Serializes to pretty JSON and writes atomically.
pub fn write_json<T: serde::Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::format(path.as_ref().display().to_string(), e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}
