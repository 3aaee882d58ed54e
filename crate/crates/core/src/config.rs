//! Flat `key=value` text blocks, used for the config section of checkpoint
//! files and anywhere else a human-greppable scalar map is wanted.
//!
//! Keys are sorted on write so the encoding of a given map is unique.
//! Values may contain `=`; the split is on the first one. Neither side may
//! contain a newline.

use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {0}: missing '=' separator")]
    MissingSeparator(usize),
    #[error("line {0}: empty key")]
    EmptyKey(usize),
    #[error("duplicate key {0:?}")]
    DuplicateKey(String),
    #[error("key {0:?} contains whitespace")]
    KeyWhitespace(String),
    #[error("missing required key {0:?}")]
    MissingKey(String),
    #[error("key {key:?}: cannot parse {value:?} as {wanted}")]
    BadValue {
        key: String,
        value: String,
        wanted: &'static str,
    },
}

/// Serializes the map, one `key=value` line per entry, keys sorted.
pub fn write_kv(pairs: &BTreeMap<String, String>) -> String {
    let mut out = String::new();
    for (k, v) in pairs {
        debug_assert!(!k.contains('\n') && !v.contains('\n'));
        out.push_str(k);
        out.push('=');
        out.push_str(v);
        out.push('\n');
    }
    out
}

/// Parses a block produced by [`write_kv`]. Blank lines are ignored.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or(ConfigError::MissingSeparator(i + 1))?;
        if k.is_empty() {
            return Err(ConfigError::EmptyKey(i + 1));
        }
        if k.chars().any(|c| c.is_whitespace()) {
            return Err(ConfigError::KeyWhitespace(k.to_string()));
        }
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(ConfigError::DuplicateKey(k.to_string()));
        }
    }
    Ok(map)
}

/// Fetches and parses one value, with errors that name the key.
pub fn get_parsed<T: std::str::FromStr>(
    map: &BTreeMap<String, String>,
    key: &str,
) -> Result<T, ConfigError> {
    let raw = map
        .get(key)
        .ok_or_else(|| ConfigError::MissingKey(key.to_string()))?;
    raw.parse().map_err(|_| ConfigError::BadValue {
        key: key.to_string(),
        value: raw.clone(),
        wanted: std::any::type_name::<T>(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn round_trip_is_identity() {
        let m = map(&[("lr", "0.0005"), ("depth", "6"), ("tag", "a=b")]);
        assert_eq!(parse_kv(&write_kv(&m)).unwrap(), m);
    }

    #[test]
    fn write_is_sorted_and_stable() {
        let m = map(&[("zeta", "1"), ("alpha", "2")]);
        assert_eq!(write_kv(&m), "alpha=2\nzeta=1\n");
    }

    #[test]
    fn parse_rejects_malformed_lines() {
        assert_eq!(parse_kv("noseparator"), Err(ConfigError::MissingSeparator(1)));
        assert_eq!(parse_kv("=value"), Err(ConfigError::EmptyKey(1)));
        assert_eq!(
            parse_kv("a=1\na=2"),
            Err(ConfigError::DuplicateKey("a".into()))
        );
        assert_eq!(
            parse_kv("bad key=1"),
            Err(ConfigError::KeyWhitespace("bad key".into()))
        );
    }

    #[test]
    fn get_parsed_reports_key_in_errors() {
        let m = map(&[("steps", "2000"), ("lr", "fast")]);
        assert_eq!(get_parsed::<u64>(&m, "steps").unwrap(), 2000);
        assert!(matches!(
            get_parsed::<f64>(&m, "lr"),
            Err(ConfigError::BadValue { .. })
        ));
        assert_eq!(
            get_parsed::<u64>(&m, "absent"),
            Err(ConfigError::MissingKey("absent".into()))
        );
    }
}
