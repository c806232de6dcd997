//! Flat key=value configuration files.
//!
//! Keys mirror the long flag names without the leading dashes, one pair per
//! line, `#` starts a comment. Values given on the command line override the
//! file.

use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;

pub fn load(path: &Path) -> Result<HashMap<String, String>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    parse(&text).map_err(|e| format!("{}: {e}", path.display()))
}

pub fn parse(text: &str) -> Result<HashMap<String, String>, String> {
    let mut map = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key = value", idx + 1))?;
        let value = value.trim();
        // values may be double-quoted
        let value = value
            .strip_prefix('"')
            .and_then(|v| v.strip_suffix('"'))
            .unwrap_or(value);
        map.insert(key.trim().to_string(), value.to_string());
    }
    Ok(map)
}

/// Resolve one setting: explicit flag wins, then the config file, then the
/// default.
pub fn setting<T: FromStr + Clone>(
    flag: &Option<T>,
    file: &HashMap<String, String>,
    key: &str,
    default: T,
) -> Result<T, String> {
    optional(flag, file, key).map(|v| v.unwrap_or(default))
}

/// Resolve one setting with no default.
pub fn optional<T: FromStr + Clone>(
    flag: &Option<T>,
    file: &HashMap<String, String>,
    key: &str,
) -> Result<Option<T>, String> {
    if let Some(v) = flag {
        return Ok(Some(v.clone()));
    }
    match file.get(key) {
        Some(raw) => raw
            .parse::<T>()
            .map(Some)
            .map_err(|_| format!("config key '{key}': cannot parse '{raw}'")),
        None => Ok(None),
    }
}

/// Boolean switches: flag presence wins, otherwise the config value.
pub fn switch(flag: bool, file: &HashMap<String, String>, key: &str) -> Result<bool, String> {
    if flag {
        return Ok(true);
    }
    match file.get(key).map(String::as_str) {
        None => Ok(false),
        Some("true") | Some("1") | Some("yes") => Ok(true),
        Some("false") | Some("0") | Some("no") => Ok(false),
        Some(other) => Err(format!(
            "config key '{key}': expected a boolean, got '{other}'"
        )),
    }
}
