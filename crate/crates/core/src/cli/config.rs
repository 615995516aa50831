//! `key = value` configuration files.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

const KEYS: &[&str] = &[
    "v0",
    "d",
    "l0",
    "kappa0",
    "g",
    "i",
    "omega",
    "tol_omega",
    "rel_tol",
    "s_max",
    "t",
    "t_max",
    "samples",
    "out",
    "svg",
    "length",
    "l",
    "v",
    "max_index",
    "theta00",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("config line {}: expected `key = value`", n + 1)))?;
            let key = k.trim().replace('-', "_");
            if !KEYS.contains(&key.as_str()) {
                return Err(Error::invalid(format!("config line {}: unknown key `{}`", n + 1, k.trim())));
            }
            entries.insert(key, v.trim().trim_matches('"').to_string());
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get_str(key) {
            None => Ok(None),
            Some(s) => {
                s.parse().map(Some).map_err(|_| Error::invalid(format!("config key `{key}`: cannot parse `{s}`")))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_and_comments() {
        let c = ConfigFile::parse("# medium\nv0 = 2\nd=0.5  # inline\n\ntol-omega = 1e-9\n").unwrap();
        assert_eq!(c.get::<f64>("v0").unwrap(), Some(2.0));
        assert_eq!(c.get::<f64>("d").unwrap(), Some(0.5));
        assert_eq!(c.get::<f64>("tol_omega").unwrap(), Some(1e-9));
        assert_eq!(c.get::<f64>("g").unwrap(), None);
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        assert!(ConfigFile::parse("speed = 1").is_err());
        assert!(ConfigFile::parse("v0 1").is_err());
        assert!(ConfigFile::parse("v0 = x").unwrap().get::<f64>("v0").is_err());
    }
}
