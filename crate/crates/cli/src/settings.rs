//! Flag, environment and config-file resolution.
//!
//! clap already merges flags with `RANKSOLVE_*` variables; values still missing are
//! looked up in the TOML file under the flag's name (dashes or underscores). Every
//! resolved value is recorded verbatim for the `config_echo` field of the outputs.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{Context, Result};

/// A usage error; mapped to exit code 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub struct Settings {
    file: toml::Table,
    echo: BTreeMap<String, String>,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let file = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                text.parse::<toml::Table>()
                    .map_err(|e| Usage(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        Ok(Settings {
            file,
            echo: BTreeMap::new(),
        })
    }

    fn from_file(&self, key: &str) -> Option<String> {
        let v = self.file.get(key).or_else(|| self.file.get(&key.replace('_', "-")))?;
        Some(match v {
            toml::Value::String(s) => s.clone(),
            toml::Value::Array(items) => items
                .iter()
                .map(|i| match i {
                    toml::Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect::<Vec<_>>()
                .join(","),
            other => other.to_string(),
        })
    }

    /// Raw value of `key`: the flag (or its environment variable) first, then the file.
    pub fn get(&mut self, key: &str, flag: Option<String>) -> Option<String> {
        let v = flag.or_else(|| self.from_file(key))?;
        self.echo.insert(key.to_string(), v.clone());
        Some(v)
    }

    pub fn parse<T: FromStr>(&mut self, key: &str, flag: Option<String>) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.get(key, flag) {
            None => Ok(None),
            Some(raw) => raw
                .trim()
                .parse::<T>()
                .map(Some)
                .map_err(|e| Usage(format!("--{}: cannot use '{raw}': {e}", key.replace('_', "-"))).into()),
        }
    }

    pub fn path(&mut self, key: &str, flag: Option<PathBuf>) -> Option<PathBuf> {
        self.get(key, flag.map(|p| p.to_string_lossy().into_owned())).map(PathBuf::from)
    }

    /// A boolean switch that is only settable from the file when the flag is absent.
    pub fn flag(&mut self, key: &str) -> Result<bool> {
        match self.file.get(key) {
            None => Ok(false),
            Some(toml::Value::Boolean(b)) => {
                self.echo.insert(key.to_string(), b.to_string());
                Ok(*b)
            }
            Some(other) => Err(Usage(format!("config key {key} must be a boolean, got {other}")).into()),
        }
    }

    pub fn echo(&self) -> &BTreeMap<String, String> {
        &self.echo
    }
}
