//! `key = value` settings with declared keys and defaults.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// One declared setting.
#[derive(Debug, Clone, Copy)]
pub struct KeySpec {
    pub key: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

/// Values for a fixed key table; unknown keys are rejected.
#[derive(Debug, Clone)]
pub struct Settings {
    specs: &'static [KeySpec],
    values: Vec<String>,
}

impl Settings {
    pub fn new(specs: &'static [KeySpec]) -> Self {
        Self { specs, values: specs.iter().map(|s| s.default.to_string()).collect() }
    }

    fn slot(&self, key: &str) -> Option<usize> {
        self.specs.iter().position(|s| s.key == key)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match self.slot(key) {
            Some(i) => {
                self.values[i] = value.to_string();
                Ok(())
            }
            None => Err(Error::invalid(format!("unknown key `{key}`"))),
        }
    }

    /// Parses `key = value` text; `#` starts a comment. Keys may appear once.
    pub fn merge_text(&mut self, text: &str, path: &Path) -> Result<()> {
        let mut seen = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse = |message: String| Error::Parse { path: path.into(), line: i + 1, message };
            let (k, v) = line.split_once('=').ok_or_else(|| parse(format!("expected `key = value`, found `{line}`")))?;
            let k = k.trim();
            if self.slot(k).is_none() {
                return Err(Error::invalid(format!("{}:{}: unknown key `{k}`", path.display(), i + 1)));
            }
            if seen.contains(&k) {
                return Err(parse(format!("duplicate key `{k}`")));
            }
            seen.push(k);
            self.set(k, v.trim())?;
        }
        Ok(())
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
        self.merge_text(&text, path)
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::invalid(format!("override `{assignment}` is not key=value")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn raw(&self, key: &str) -> &str {
        let i = self.slot(key).unwrap_or_else(|| panic!("key `{key}` is not declared"));
        &self.values[i]
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T> {
        let v = self.raw(key);
        v.parse().map_err(|_| Error::invalid(format!("cannot parse `{v}` for `{key}`")))
    }

    /// `None` for an empty value or `none`.
    pub fn get_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            "" | "none" => Ok(None),
            _ => self.get(key).map(Some),
        }
    }

    pub fn get_bool(&self, key: &str) -> Result<bool> {
        match self.raw(key) {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            v => Err(Error::invalid(format!("`{key}` must be true or false, got `{v}`"))),
        }
    }

    /// Every key with its current value and help text, in declaration order.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for (spec, v) in self.specs.iter().zip(&self.values) {
            s.push_str(&format!("# {}\n{} = {}\n", spec.help, spec.key, v));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    static KEYS: &[KeySpec] = &[
        KeySpec { key: "snr", default: "none", help: "noise level" },
        KeySpec { key: "n_tx", default: "18", help: "transmitters" },
    ];

    #[test]
    fn defaults_file_and_overrides() {
        let mut s = Settings::new(KEYS);
        assert_eq!(s.get_opt::<f64>("snr").unwrap(), None);
        s.merge_text("# comment\nsnr = 30 # trailing\n", Path::new("c")).unwrap();
        assert_eq!(s.get_opt::<f64>("snr").unwrap(), Some(30.0));
        s.apply_override("n_tx=36").unwrap();
        assert_eq!(s.get::<usize>("n_tx").unwrap(), 36);
    }

    #[test]
    fn unknown_and_duplicate_keys() {
        let mut s = Settings::new(KEYS);
        let e = s.merge_text("snr = 1\nbogus = 2\n", Path::new("c")).unwrap_err();
        assert!(matches!(e, Error::InvalidArgument(ref m) if m.contains("c:2")), "{e}");
        let e = s.merge_text("snr = 1\nsnr = 2\n", Path::new("c")).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        assert!(s.apply_override("nope=1").is_err());
    }

    #[test]
    fn dump_lists_every_key() {
        let d = Settings::new(KEYS).dump();
        assert!(d.contains("snr = none"));
        assert!(d.contains("n_tx = 18"));
    }
}
