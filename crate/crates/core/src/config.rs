//! Flat `key = value` text configuration.
//!
//! One assignment per line, `#` starts a comment, blank lines are ignored.
//! Keys are unique within a file.

use crate::error::{Error, Result};
use std::collections::HashSet;

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

pub fn parse_key_values(text: &str) -> Result<Vec<Entry>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| Error::Parse {
            line,
            message: format!("expected `key = value`, got `{body}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || value.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty key or value".into(),
            });
        }
        if !seen.insert(key.to_string()) {
            return Err(Error::Parse {
                line,
                message: format!("duplicate key `{key}`"),
            });
        }
        out.push(Entry {
            key: key.to_string(),
            value: value.to_string(),
            line,
        });
    }
    Ok(out)
}

pub fn parse_f64(entry: &Entry) -> Result<f64> {
    entry.value.parse::<f64>().map_err(|_| Error::Parse {
        line: entry.line,
        message: format!("`{}` is not a number for key `{}`", entry.value, entry.key),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blank_lines() {
        let text = "# header\n\na = 1.5 # trailing\n  b=2e-3\n";
        let entries = parse_key_values(text).unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].key, "a");
        assert_eq!(entries[0].line, 3);
        assert_eq!(parse_f64(&entries[1]).unwrap(), 2e-3);
    }

    #[test]
    fn rejects_duplicates_and_garbage() {
        assert!(parse_key_values("a = 1\na = 2\n").is_err());
        assert!(parse_key_values("just words\n").is_err());
        assert!(parse_key_values("a = \n").is_err());
    }
}
