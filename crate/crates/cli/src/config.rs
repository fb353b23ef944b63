//! `key = value` config files. Keys are flag names without the leading
//! dashes; `pg_url` and `mysql_url` supply database locators.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, Context, Result};

use regmap_core::db::{backends_from_locators, BackendConfig, MYSQL_URL_VAR, PG_URL_VAR};

use crate::UsageError;

const KEYS: &[&str] = &[
    "algorithm",
    "chromosomes",
    "coord-lower",
    "coord-upper",
    "count",
    "dialect",
    "files",
    "fixed-size",
    "format",
    "import-path",
    "invalid",
    "kind",
    "max-centre-distance",
    "max-size",
    "min-bp",
    "mysql_url",
    "near",
    "no-index",
    "pg_url",
    "regions",
    "reps",
    "scenario",
    "seed",
    "sizes",
    "strict",
    "variants",
    "warmup",
    "window",
];

#[derive(Debug, Default, Clone)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Config::parse(&text).map_err(|e| anyhow!(UsageError(format!("{}: {e}", path.display()))))
    }

    pub fn load_optional(path: Option<&Path>) -> Result<Config> {
        path.map_or_else(|| Ok(Config::default()), Config::load)
    }

    pub fn parse(text: &str) -> Result<Config, String> {
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected `key = value`", i + 1))?;
            let key = key.trim().replace('_', "-");
            let key = match key.as_str() {
                "pg-url" => "pg_url".to_string(),
                "mysql-url" => "mysql_url".to_string(),
                _ => key,
            };
            if !KEYS.contains(&key.as_str()) {
                return Err(format!("line {}: unknown key {key:?}", i + 1));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Config { values })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        debug_assert!(KEYS.contains(&key), "{key}");
        self.values.get(key).map(String::as_str)
    }

    /// `flag`, else the config value for `key`, else `default`.
    pub fn resolve<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.resolve_opt(flag, key)?.unwrap_or(default))
    }

    pub fn resolve_opt<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| anyhow!(UsageError(format!("config key {key}: {e}")))),
        }
    }

    /// Boolean switches: set by the flag or by a truthy config value.
    pub fn switch(&self, flag: bool, key: &str) -> Result<bool> {
        if flag {
            return Ok(true);
        }
        match self.raw(key) {
            None => Ok(false),
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(v) => Err(anyhow!(UsageError(format!(
                "config key {key}: expected true or false, got {v:?}"
            )))),
        }
    }

    /// Comma-separated list value.
    pub fn list<T>(&self, flag: Vec<T>, key: &str) -> Result<Vec<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        if !flag.is_empty() {
            return Ok(flag);
        }
        match self.raw(key) {
            None => Ok(Vec::new()),
            Some(v) => v
                .split(',')
                .map(|s| s.trim())
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse()
                        .map_err(|e| anyhow!(UsageError(format!("config key {key}: {e}"))))
                })
                .collect(),
        }
    }

    /// Database backends. The environment takes precedence over the file.
    pub fn backends(&self) -> Vec<BackendConfig> {
        let pick = |var: &str, key: &str| std::env::var(var).ok().or_else(|| self.raw(key).map(str::to_string));
        backends_from_locators(pick(PG_URL_VAR, "pg_url"), pick(MYSQL_URL_VAR, "mysql_url"))
    }
}
