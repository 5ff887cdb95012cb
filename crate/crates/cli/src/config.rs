//! Config files and small inline argument formats.

use std::fmt;
use std::path::Path;

use anyhow::Result;
use lozenge_core::limit_shape::limit_of;
use lozenge_core::{LimitPolygon, PolygonSpec};
use serde_json::Value;

/// A problem with the invocation rather than with the computation; exits with 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(UsageError(msg.into()).into())
}

/// Either kind of polygon file, told apart by its keys.
#[derive(Clone, Debug)]
pub enum Config {
    Lattice(PolygonSpec),
    Limit(LimitPolygon),
}

impl Config {
    pub fn load(path: &Path) -> Result<(Config, Vec<u8>)> {
        let bytes = match std::fs::read(path) {
            Ok(b) => b,
            Err(e) => return usage(format!("cannot read {}: {e}", path.display())),
        };
        let value: Value = match serde_json::from_slice(&bytes) {
            Ok(v) => v,
            Err(e) => return usage(format!("{}: malformed JSON: {e}", path.display())),
        };
        let parsed = if value.get("N").is_some() {
            serde_json::from_value(value).map(Config::Lattice)
        } else {
            serde_json::from_value(value).map(Config::Limit)
        };
        match parsed {
            Ok(c) => Ok((c, bytes)),
            Err(e) => usage(format!("{}: not a polygon config: {e}", path.display())),
        }
    }

    pub fn lattice(&self) -> Result<&PolygonSpec> {
        match self {
            Config::Lattice(spec) => Ok(spec),
            Config::Limit(_) => usage("this subcommand needs a lattice polygon config with N, A and B"),
        }
    }

    /// The limit polygon itself, or the scaled-down limit of a lattice polygon.
    pub fn limit(&self) -> LimitPolygon {
        match self {
            Config::Lattice(spec) => limit_of(spec),
            Config::Limit(lp) => lp.clone(),
        }
    }
}

fn number<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    match s.trim().parse() {
        Ok(v) => Ok(v),
        Err(_) => usage(format!("cannot read {what} from {s:?}")),
    }
}

/// `"a,b"` as a pair.
pub fn pair<T: std::str::FromStr>(s: &str) -> Result<(T, T)> {
    match s.split(',').collect::<Vec<_>>().as_slice() {
        [a, b] => Ok((number(a, "a coordinate")?, number(b, "a coordinate")?)),
        _ => usage(format!("expected two comma-separated values, got {s:?}")),
    }
}

/// `"a1,b1;a2,b2;..."`.
pub fn pairs<T: std::str::FromStr>(s: &str) -> Result<Vec<(T, T)>> {
    s.split(';').filter(|p| !p.trim().is_empty()).map(pair).collect()
}

/// `"8,16,24"`.
pub fn list(s: &str) -> Result<Vec<usize>> {
    s.split(',').map(|v| number(v, "a strip height")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inline_formats() {
        assert_eq!(pairs::<f64>("0,0.5; 0.75,0.5").unwrap(), vec![(0.0, 0.5), (0.75, 0.5)]);
        assert_eq!(list("8,16").unwrap(), vec![8, 16]);
        assert!(pair::<i64>("1,2,3").is_err());
        let err = pairs::<f64>("x,1").unwrap_err();
        assert!(err.downcast_ref::<UsageError>().is_some());
    }
}
