//! Flat `key = value` config files. Keys are the long flag names without
//! the leading dashes; `#` starts a comment.

use std::collections::BTreeMap;
use std::path::Path;

pub const KNOWN_KEYS: &[&str] = &[
    "seed",
    "out",
    "format",
    "M",
    "dSP0",
    "dRT0",
    "dTR1",
    "dPS1",
    "alpha",
    "theta",
    "axis1",
    "axis2",
    "abar",
    "rates",
    "theta-i",
    "eps",
    "dt",
    "t-end",
    "record-every",
    "start",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut values = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key = value, got '{raw}'", k + 1))?;
            let key = key.trim().trim_start_matches("--");
            if !KNOWN_KEYS.contains(&key) {
                return Err(format!("line {}: unknown key '{key}'", k + 1));
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Config { values })
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Config::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// `flag` if given, else the parsed config value, else `None`.
    pub fn pick<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, String>
    where
        T: std::str::FromStr,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| format!("config value for '{key}' is invalid: '{v}'"))
            })
            .transpose()
    }
}
