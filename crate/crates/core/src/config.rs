//! Experiment configuration files.
//!
//! Plain `key = value` lines; keys may be dotted (`grid.n`), `#` starts a
//! comment, blank lines are ignored. Lists are written `[a, b, c]`. Values
//! are parsed on demand so that errors point at the offending value.

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use crate::error::{Error, ParseError, Result};

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    line: usize,
    column: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    entries: BTreeMap<String, Entry>,
}

fn perr(line: usize, column: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        column,
        message: message.into(),
    }
}

impl FromStr for Config {
    type Err = ParseError;

    fn from_str(text: &str) -> std::result::Result<Self, ParseError> {
        let mut entries = BTreeMap::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = ln + 1;
            let body = raw.split('#').next().unwrap_or("");
            if body.trim().is_empty() {
                continue;
            }
            let eq = body
                .find('=')
                .ok_or_else(|| perr(line, 1 + body.len() - body.trim_start().len(), "expected `key = value`"))?;
            let key = body[..eq].trim();
            let key_col = 1 + body.len() - body.trim_start().len();
            if key.is_empty() {
                return Err(perr(line, key_col, "missing key before `=`"));
            }
            if let Some(bad) = key.char_indices().find(|(_, c)| !(c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'))) {
                return Err(perr(line, key_col + bad.0, format!("invalid character {:?} in key", bad.1)));
            }
            let rest = &body[eq + 1..];
            let value = rest.trim();
            let column = eq + 2 + (rest.len() - rest.trim_start().len());
            if value.is_empty() {
                return Err(perr(line, column, format!("missing value for `{key}`")));
            }
            if entries.contains_key(key) {
                return Err(perr(line, key_col, format!("duplicate key `{key}`")));
            }
            entries.insert(
                key.to_string(),
                Entry {
                    value: value.to_string(),
                    line,
                    column,
                },
            );
        }
        Ok(Config { entries })
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(text.parse()?)
    }

    pub fn from_pairs(pairs: &[(&str, &str)]) -> Self {
        Config {
            entries: pairs
                .iter()
                .enumerate()
                .map(|(i, (k, v))| {
                    (
                        k.to_string(),
                        Entry {
                            value: v.to_string(),
                            line: i + 1,
                            column: k.len() + 4,
                        },
                    )
                })
                .collect(),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|k| k.as_str())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    /// Raw value with its position.
    pub fn raw(&self, key: &str) -> Option<(&str, usize, usize)> {
        self.entries.get(key).map(|e| (e.value.as_str(), e.line, e.column))
    }

    fn value_error(&self, key: &str, msg: String) -> Error {
        let e = &self.entries[key];
        Error::Parse(perr(e.line, e.column, format!("{key}: {msg}")))
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.entries.get(key).map(|e| unquote(&e.value)).unwrap_or(default)
    }

    pub fn require_str(&self, key: &str) -> Result<&str> {
        self.entries
            .get(key)
            .map(|e| unquote(&e.value))
            .ok_or_else(|| Error::Config(format!("missing required key `{key}`")))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some(e) => unquote(&e.value)
                .parse::<T>()
                .map(Some)
                .map_err(|err| self.value_error(key, format!("cannot parse {:?}: {err}", e.value))),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// `[a, b, ...]` or a single bare item.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        let Some(e) = self.entries.get(key) else {
            return Ok(None);
        };
        let v = e.value.trim();
        let inner = match (v.strip_prefix('['), v.ends_with(']')) {
            (Some(rest), true) => &rest[..rest.len() - 1],
            (None, false) => v,
            _ => return Err(self.value_error(key, "unbalanced brackets".into())),
        };
        if inner.trim().is_empty() {
            return Ok(Some(Vec::new()));
        }
        inner
            .split(',')
            .map(|item| {
                unquote(item.trim())
                    .parse::<T>()
                    .map_err(|err| self.value_error(key, format!("cannot parse list item {:?}: {err}", item.trim())))
            })
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }

    pub fn list_or<T: FromStr>(&self, key: &str, default: Vec<T>) -> Result<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.list(key)?.unwrap_or(default))
    }

    pub fn array4(&self, key: &str, default: [f64; 4]) -> Result<[f64; 4]> {
        match self.list::<f64>(key)? {
            None => Ok(default),
            Some(v) if v.len() == 4 => Ok([v[0], v[1], v[2], v[3]]),
            Some(v) => Err(self.value_error(key, format!("expected 4 numbers, got {}", v.len()))),
        }
    }

    pub fn array3(&self, key: &str, default: [f64; 3]) -> Result<[f64; 3]> {
        match self.list::<f64>(key)? {
            None => Ok(default),
            Some(v) if v.len() == 3 => Ok([v[0], v[1], v[2]]),
            Some(v) => Err(self.value_error(key, format!("expected 3 numbers, got {}", v.len()))),
        }
    }

    /// Error for the first key outside `known` (and not under a known
    /// prefix ending in `.`), with the closest known key as a hint.
    pub fn check_known(&self, known: &[&str]) -> Result<()> {
        let set: BTreeSet<&str> = known.iter().copied().collect();
        for (k, e) in &self.entries {
            let ok = set.contains(k.as_str()) || known.iter().any(|p| p.ends_with('.') && k.starts_with(p));
            if !ok {
                let hint = nearest(k, known).map(|n| format!("; did you mean `{n}`?")).unwrap_or_default();
                return Err(Error::Parse(perr(e.line, 1, format!("unknown key `{k}`{hint}"))));
            }
        }
        Ok(())
    }

    /// Wraps an error from interpreting the value of `key` with its position.
    pub fn at(&self, key: &str, err: impl std::fmt::Display) -> Error {
        match self.entries.get(key) {
            Some(_) => self.value_error(key, err.to_string()),
            None => Error::Config(format!("{key}: {err}")),
        }
    }
}

fn unquote(s: &str) -> &str {
    let t = s.trim();
    if t.len() >= 2 && t.starts_with('"') && t.ends_with('"') {
        &t[1..t.len() - 1]
    } else {
        t
    }
}

/// Closest candidate by edit distance, if reasonably close.
pub fn nearest<'a>(word: &str, candidates: &[&'a str]) -> Option<&'a str> {
    candidates
        .iter()
        .map(|c| (strsim::levenshtein(word, c), *c))
        .min()
        .filter(|(d, c)| *d <= (c.len().max(word.len()) / 2).max(2))
        .map(|(_, c)| c)
}
