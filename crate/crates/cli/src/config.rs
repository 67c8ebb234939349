//! Flat `key = value` configuration files and flag/file/default resolution.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

const KNOWN_KEYS: &[&str] = &[
    "theta", "theta_prime", "seed", "p1", "p2", "f0", "variant", "mode", "trials", "f", "rounds", "baseline",
];

/// Values read from a config file. Keys are case-insensitive and `-` is
/// treated as `_`; `#` starts a comment.
#[derive(Debug, Default)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

fn normalize_key(k: &str) -> String {
    k.trim().to_ascii_lowercase().replace('-', "_")
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(FileConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config file {}", p.display()))?;
                Self::parse(&text).with_context(|| format!("in config file {}", p.display()))
            }
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected key = value", i + 1))?;
            let key = normalize_key(k);
            if !KNOWN_KEYS.contains(&key.as_str()) {
                bail!("line {}: unknown key `{}`", i + 1, k.trim());
            }
            values.insert(key, v.trim().to_string());
        }
        Ok(FileConfig { values })
    }

    /// Flag value if given, else the file value, else `default`.
    pub fn resolve<T>(&self, key: &str, flag: Option<T>, default: Option<T>) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        if let Some(v) = flag {
            return Ok(v);
        }
        if let Some(raw) = self.values.get(key) {
            return raw.parse().map_err(|e| anyhow!("config key `{key}` = `{raw}`: {e}"));
        }
        default.ok_or_else(|| anyhow!("missing required parameter `{key}` (flag or config file)"))
    }
}
