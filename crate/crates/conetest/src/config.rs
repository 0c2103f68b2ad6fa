//! Flat `key = value` configuration files. Command-line flags take precedence
//! over file entries, which take precedence over built-in defaults.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{AppError, Result};
use crate::io;

/// Environment variable that replaces the built-in default seed.
pub const SEED_ENV: &str = "CONETEST_SEED";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    path: Option<PathBuf>,
    entries: BTreeMap<String, (String, u64)>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&io::read_text(path)?, path)
    }

    /// Keys are case-insensitive and `-`/`_` are interchangeable.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| AppError::Parse {
                path: path.to_path_buf(),
                line: i as u64 + 1,
                msg: format!("expected key = value, found '{line}'"),
            })?;
            let key = normalize(key);
            if key.is_empty() {
                return Err(AppError::Parse {
                    path: path.to_path_buf(),
                    line: i as u64 + 1,
                    msg: "empty key".into(),
                });
            }
            entries.insert(key, (value.trim().to_string(), i as u64 + 1));
        }
        Ok(Self {
            path: Some(path.to_path_buf()),
            entries,
        })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(&normalize(key)).map(|(v, _)| v.as_str())
    }

    /// Typed lookup; a malformed value is reported with its line.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        match self.entries.get(&normalize(key)) {
            None => Ok(None),
            Some((v, line)) => v.parse::<T>().map(Some).map_err(|e| AppError::Parse {
                path: self.path.clone().unwrap_or_default(),
                line: *line,
                msg: format!("{key}: {e}"),
            }),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

fn normalize(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

/// `flag`, else the config entry, else `default`.
pub fn pick<T: FromStr>(flag: Option<T>, cfg: &ConfigFile, key: &str, default: T) -> Result<T>
where
    T::Err: Display,
{
    Ok(match flag {
        Some(v) => v,
        None => cfg.get(key)?.unwrap_or(default),
    })
}

/// `flag`, else the config entry.
pub fn pick_opt<T: FromStr>(flag: Option<T>, cfg: &ConfigFile, key: &str) -> Result<Option<T>>
where
    T::Err: Display,
{
    Ok(match flag {
        Some(v) => Some(v),
        None => cfg.get(key)?,
    })
}

/// Default seed: `CONETEST_SEED` when set, else the library default.
pub fn default_seed() -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| AppError::usage(format!("{SEED_ENV}='{v}' is not an unsigned integer"))),
        Err(_) => Ok(conetest_core::rng::DEFAULT_SEED),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_overrides() {
        let cfg = ConfigFile::parse("# run\ngamma = 0.1\nmc-samples=500 # inline\n", Path::new("c.txt")).unwrap();
        assert_eq!(cfg.get::<f64>("gamma").unwrap(), Some(0.1));
        assert_eq!(cfg.get::<usize>("mc_samples").unwrap(), Some(500));
        assert_eq!(pick(Some(0.2), &cfg, "gamma", 0.05).unwrap(), 0.2);
        assert_eq!(pick(None, &cfg, "gamma", 0.05).unwrap(), 0.1);
        assert_eq!(pick(None, &cfg, "rho", 0.5).unwrap(), 0.5);
    }

    #[test]
    fn malformed_lines() {
        let e = ConfigFile::parse("gamma 0.1\n", Path::new("c.txt")).unwrap_err();
        assert!(e.to_string().contains("c.txt:1"));
        let cfg = ConfigFile::parse("\n\ngamma = abc\n", Path::new("c.txt")).unwrap();
        let e = cfg.get::<f64>("gamma").unwrap_err();
        assert!(e.to_string().contains("c.txt:3"), "{e}");
    }
}
