//! Result emission: stdout or atomically written files, CSV or JSON.

use std::fs;
use std::path::{Path, PathBuf};
use std::process;

use serde_json::{json, Value};

use crate::config::CliError;

/// Write `content` to `path` atomically: the bytes land in a temporary file
/// in the same directory which is then renamed over the target, so an
/// interrupted run never leaves a partial result file behind.
pub fn atomic_write(path: &Path, content: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| {
                CliError::Experiment(format!("cannot create {}: {e}", parent.display()))
            })?;
        }
    }
    let file_name = path
        .file_name()
        .ok_or_else(|| CliError::Config(format!("output path {} has no file name", path.display())))?
        .to_string_lossy()
        .into_owned();
    let tmp = path.with_file_name(format!(".{file_name}.tmp.{}", process::id()));
    fs::write(&tmp, content)
        .map_err(|e| CliError::Experiment(format!("cannot write {}: {e}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        CliError::Experiment(format!("cannot rename into {}: {e}", path.display()))
    })
}

/// Emit to the file when `--out` was given, else to stdout.
pub fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => atomic_write(path, content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// Common JSON envelope: code version, subcommand name and the resolved
/// configuration, so a result file identifies the run that produced it.
pub fn envelope(command: &str, config: Value, payload: &[(&str, Value)]) -> String {
    let mut doc = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config,
    });
    let map = doc.as_object_mut().expect("envelope is an object");
    for (key, value) in payload {
        map.insert((*key).to_string(), value.clone());
    }
    let mut text = serde_json::to_string_pretty(&doc).expect("serializable result");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_leaves_no_temp_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("result.csv");
        atomic_write(&path, "a,b\n1,2\n").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "a,b\n1,2\n");
        let names: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        assert_eq!(names, vec!["result.csv"]);
    }

    #[test]
    fn envelope_carries_version_and_config() {
        let text = envelope("degrees", json!({"seed": 7}), &[("rows", json!([1, 2]))]);
        let doc: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(doc["version"], env!("CARGO_PKG_VERSION"));
        assert_eq!(doc["command"], "degrees");
        assert_eq!(doc["config"]["seed"], 7);
        assert_eq!(doc["rows"][1], 2);
    }
}
