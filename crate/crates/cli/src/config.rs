//! Strict `key = value` config files.
//!
//! One entry per line, `#` starts a comment, blank lines are ignored. Keys
//! may appear once, except `expect_*` assertion keys which may repeat.

use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl ConfigError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "config: {}", self.message)
        } else {
            write!(f, "config line {}: {}", self.line, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

impl Entry {
    pub fn err(&self, message: impl fmt::Display) -> ConfigError {
        ConfigError::new(self.line, format!("{}: {message}", self.key))
    }

    pub fn parse<T: FromStr>(&self) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.value.parse::<T>().map_err(|e| self.err(format!("{e} ({:?})", self.value)))
    }

    /// Comma-separated items. Commas inside parentheses belong to the item,
    /// so method names like `eSSPRK(3,3)` survive.
    pub fn list(&self) -> Vec<&str> {
        let mut out = Vec::new();
        let (mut depth, mut start) = (0i32, 0);
        for (i, ch) in self.value.char_indices() {
            match ch {
                '(' => depth += 1,
                ')' => depth -= 1,
                ',' if depth == 0 => {
                    out.push(&self.value[start..i]);
                    start = i + 1;
                }
                _ => {}
            }
        }
        out.push(&self.value[start..]);
        out.into_iter().map(str::trim).filter(|s| !s.is_empty()).collect()
    }

    pub fn parse_list<T: FromStr>(&self) -> Result<Vec<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.list()
            .into_iter()
            .map(|s| s.parse::<T>().map_err(|e| self.err(format!("{e} ({s:?})"))))
            .collect()
    }

    pub fn bool(&self) -> Result<bool, ConfigError> {
        match self.value.as_str() {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            other => Err(self.err(format!("expected true or false, got {other:?}"))),
        }
    }

    /// Whitespace-separated fields, exactly `n` of them.
    pub fn fields(&self, n: usize) -> Result<Vec<&str>, ConfigError> {
        let f: Vec<&str> = self.value.split_whitespace().collect();
        if f.len() != n {
            return Err(self.err(format!("expected {n} whitespace-separated fields, got {}", f.len())));
        }
        Ok(f)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    pub entries: Vec<Entry>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: Vec<Entry> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::new(line, format!("expected `key = value`, got {content:?}")));
            };
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(ConfigError::new(line, format!("invalid key {key:?}")));
            }
            if value.is_empty() {
                return Err(ConfigError::new(line, format!("{key}: empty value")));
            }
            if !key.starts_with("expect_") {
                if let Some(prev) = entries.iter().find(|e| e.key == key) {
                    return Err(ConfigError::new(line, format!("{key}: duplicate key (first set on line {})", prev.line)));
                }
            }
            entries.push(Entry {
                key: key.to_string(),
                value: value.to_string(),
                line,
            });
        }
        Ok(Self { entries })
    }

    /// Rejects any key not in `allowed`.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<(), ConfigError> {
        match self.entries.iter().find(|e| !allowed.contains(&e.key.as_str())) {
            Some(e) => Err(ConfigError::new(e.line, format!("unknown key {:?}", e.key))),
            None => Ok(()),
        }
    }

    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    pub fn all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a Entry> + 'a {
        self.entries.iter().filter(move |e| e.key == key)
    }
}
