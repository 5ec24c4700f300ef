//! Key/value config files mirroring the CLI flags.
//!
//! One `key value` pair per line, `#` comments, UTF-8. Keys use the long
//! flag spelling (`top-k`, `c-max`, ...). Values given on the command line
//! win over the file; the file wins over built-in defaults.

use std::collections::HashMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, Context, Result};

#[derive(Debug, Default)]
pub struct Settings {
    map: HashMap<String, String>,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut map = HashMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once(char::is_whitespace)
                .ok_or_else(|| anyhow!("config line {}: expected `key value`", no + 1))?;
            map.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Self { map })
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    pub fn get<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.map.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| anyhow!("config key `{key}`: bad value `{raw}`: {e}")),
        }
    }

    /// flag > config > default.
    pub fn resolve<T>(&self, cli: Option<T>, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        if let Some(v) = cli {
            return Ok(v);
        }
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn resolve_opt<T>(&self, cli: Option<T>, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        if cli.is_some() {
            return Ok(cli);
        }
        self.get(key)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_and_comments() {
        let s = Settings::parse("top-k 40\n# comment\ncycle MGUSA@  # inline\n\ntau 0.5\n").unwrap();
        assert_eq!(s.get::<usize>("top-k").unwrap(), Some(40));
        assert_eq!(s.get_str("cycle"), Some("MGUSA@"));
        assert_eq!(s.get::<f64>("tau").unwrap(), Some(0.5));
        assert_eq!(s.get::<usize>("missing").unwrap(), None);
    }

    #[test]
    fn resolution_order() {
        let s = Settings::parse("budget 100\n").unwrap();
        assert_eq!(s.resolve(Some(5usize), "budget", 1).unwrap(), 5);
        assert_eq!(s.resolve(None::<usize>, "budget", 1).unwrap(), 100);
        assert_eq!(s.resolve(None::<usize>, "other", 1).unwrap(), 1);
    }

    #[test]
    fn bad_values_are_errors() {
        let s = Settings::parse("budget nope\n").unwrap();
        assert!(s.get::<usize>("budget").is_err());
    }
}
