use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};

/// `key = value` pairs from a configuration file, with `#` comments and
/// blank lines skipped.
pub fn parse_key_values(text: &str) -> CliResult<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(CliError::Config(format!("line {}: empty key", i + 1)));
        }
        if out.iter().any(|(seen, _): &(String, String)| seen == k) {
            return Err(CliError::Config(format!(
                "line {}: duplicate key `{k}`",
                i + 1
            )));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

pub fn read_config(path: &Path) -> CliResult<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    parse_key_values(&text)
}

pub(crate) fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> CliResult<T> {
    v.parse()
        .map_err(|_| CliError::Config(format!("invalid value `{v}` for `{key}`")))
}

pub(crate) fn path_value(v: &str) -> PathBuf {
    PathBuf::from(v)
}

/// Parses `a..b` (inclusive integer range) or a comma-separated list.
pub fn parse_t_grid(s: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::Config(format!("invalid truncation grid `{s}`"));
    let grid: Vec<f64> = if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        (a..=b).map(|t| t as f64).collect()
    } else {
        s.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<CliResult<_>>()?
    };
    if grid.is_empty() || grid.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(bad());
    }
    Ok(grid)
}

/// Parses a comma-separated list.
pub(crate) fn parse_list<T: std::str::FromStr>(key: &str, s: &str) -> CliResult<Vec<T>> {
    s.split(',').map(|v| parse_value(key, v.trim())).collect()
}
