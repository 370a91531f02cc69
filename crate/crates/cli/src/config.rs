//! key=value run-config files. Flags override file values.

use std::collections::HashMap;
use std::path::Path;

use anyhow::{bail, Context, Result};

const KNOWN_KEYS: &[&str] = &[
    "corpus",
    "vocab",
    "tokens",
    "examples-dir",
    "banks-dir",
    "bank",
    "examples",
    "embeddings",
    "dataset",
    "groups",
    "out",
    "out-dir",
    "report",
    "format",
    "min-count",
    "max-vocab",
    "count",
    "accumulation",
    "clauses",
    "threshold",
    "specificity",
    "state-bits",
    "inclusion-threshold",
    "scaling-factor",
    "epochs",
    "examples-per-epoch",
    "mode",
    "modes",
    "seed",
    "workers",
    "weight-gate",
    "runs",
    "platform-label",
];

/// Parsed config file: a flat key -> value map over the known keys.
#[derive(Debug, Default, Clone)]
pub struct FileConfig {
    values: HashMap<String, String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let mut values = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!(
                    "{}:{}: expected 'key = value', found '{line}'",
                    path.display(),
                    i + 1
                );
            };
            let key = key.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                bail!("{}:{}: unknown config key '{key}'", path.display(), i + 1);
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Flag value if present, else the config-file value parsed into the
    /// flag's type.
    pub fn resolve<T: std::str::FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.get(key) {
            Some(raw) => match raw.parse() {
                Ok(v) => Ok(Some(v)),
                Err(e) => bail!("config key '{key}': cannot parse '{raw}': {e}"),
            },
            None => Ok(None),
        }
    }
}
