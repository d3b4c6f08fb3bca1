use super::ExperimentSpec;
use crate::error::{Error, Result};

/// Applies a flat `key = value` config text to `spec`.
///
/// Blank lines and lines starting with `#` or `;` are skipped. `[section]`
/// headers are accepted and ignored; all keys share one namespace. Later
/// assignments win.
pub fn parse_config(text: &str, spec: &mut ExperimentSpec) -> Result<()> {
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if line.starts_with('[') && line.ends_with(']') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfig(format!("line {}: expected key = value", i + 1)))?;
        spec.set(key.trim(), value).map_err(|e| match e {
            Error::InvalidConfig(msg) => Error::InvalidConfig(format!("line {}: {msg}", i + 1)),
            other => other,
        })?;
    }
    Ok(())
}
