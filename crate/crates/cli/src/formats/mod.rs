//! On-disk formats: robot model JSON, scenario JSON, trajectory CSV and
//! calibration results.

mod results;
mod robot;
mod scenario;
mod trajectory;

pub use results::{write_calibration, write_compare_csv, CompareRow};
pub use robot::{JointFile, JointKindFile, LinkFile, Origin, RobotModelFile};
pub use scenario::{
    CmaesFile, ContactFile, ObjectFile, OptimFile, PadFile, ParamFile, RunConfig, ScenarioFile, SimFile, SupervisionFile, TorqueFile,
};
pub use trajectory::{parse_trajectory, read_trajectory, resample, trajectory_to_csv, write_trajectory};

use std::path::{Path, PathBuf};

use propsim_core::Error;
use serde::de::DeserializeOwned;
use serde::Serialize;

/// How unknown JSON keys are treated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Strictness {
    /// Unknown keys are errors.
    #[default]
    Strict,
    /// Unknown keys are logged and ignored.
    Lenient,
}

pub(crate) fn format_error(path: &Path, field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Format { path: path.to_path_buf(), field: field.into(), reason: reason.into() }
}

pub(crate) fn read_text(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    }
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Parses JSON, reporting syntax errors by line and column and unknown
/// keys according to `strictness`.
pub fn parse_json<T: DeserializeOwned>(text: &str, path: &Path, strictness: Strictness) -> Result<T, Error> {
    let mut de = serde_json::Deserializer::from_str(text);
    let mut unknown = Vec::new();
    let value: T = serde_ignored::deserialize(&mut de, |p| unknown.push(p.to_string())).map_err(|e| json_error(path, &e))?;
    de.end().map_err(|e| json_error(path, &e))?;
    if let Some(first) = unknown.first() {
        match strictness {
            Strictness::Strict => return Err(format_error(path, first.clone(), "unknown key")),
            Strictness::Lenient => {
                for key in &unknown {
                    log::warn!("{}: ignoring unknown key '{key}'", path.display());
                }
            }
        }
    }
    Ok(value)
}

fn json_error(path: &Path, e: &serde_json::Error) -> Error {
    let field = format!("line {} column {}", e.line(), e.column());
    // serde_json appends the position to its own message
    let msg = e.to_string();
    let reason = msg.split(" at line ").next().unwrap_or(&msg).to_string();
    format_error(path, field, reason)
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn read_json<T: DeserializeOwned>(path: &Path, strictness: Strictness) -> Result<T, Error> {
    parse_json(&read_text(path)?, path, strictness)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    write_text(path, &to_json(value))
}

/// Resolves `relative` against the directory holding `base`.
pub(crate) fn sibling(base: &Path, relative: &str) -> PathBuf {
    let p = Path::new(relative);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.parent().unwrap_or(Path::new("")).join(p)
    }
}
