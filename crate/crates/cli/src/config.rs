//! Flat `key = value` configuration files.
//!
//! One setting per line. `#` starts a comment line; blank lines are ignored.
//! Keys are the long flag names without the leading dashes.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::error::CliError;

pub const KEYS: &[&str] = &[
    "data",
    "synth",
    "d",
    "kind",
    "t",
    "t0",
    "t-grid",
    "alpha",
    "boot-samples",
    "scheme",
    "reps",
    "est-reps",
    "seed",
    "out",
    "pair",
    "qhat",
    "epsilon",
    "n",
];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("config line {line}: expected `key = value`")]
    MissingEquals { line: usize },

    #[error("config line {line}: empty key")]
    EmptyKey { line: usize },

    #[error("config line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },

    #[error("config line {line}: key {key:?} already set on line {first}")]
    DuplicateKey { line: usize, key: String, first: usize },

    #[error("config is not valid UTF-8")]
    InvalidUtf8,
}

/// Parsed settings with the line each came from.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Config {
    entries: BTreeMap<String, (usize, String)>,
}

pub fn parse_config(text: &str) -> Result<Config, ConfigError> {
    let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = trimmed.split_once('=').ok_or(ConfigError::MissingEquals { line })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(ConfigError::EmptyKey { line });
        }
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            });
        }
        if let Some((first, _)) = entries.get(key) {
            return Err(ConfigError::DuplicateKey {
                line,
                key: key.to_string(),
                first: *first,
            });
        }
        entries.insert(key.to_string(), (line, value.to_string()));
    }
    Ok(Config { entries })
}

pub fn parse_config_bytes(bytes: &[u8]) -> Result<Config, ConfigError> {
    parse_config(std::str::from_utf8(bytes).map_err(|_| ConfigError::InvalidUtf8)?)
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, CliError> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        parse_config_bytes(&bytes).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get<T>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|e| CliError::usage(format!("config line {line}: invalid {key}: {e}"))),
        }
    }
}

/// Flag value if given, else the config value, else `None`.
pub fn pick<T>(flag: Option<T>, config: &Config, key: &str) -> Result<Option<T>, CliError>
where
    T: FromStr,
    T::Err: Display,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => config.get(key),
    }
}
