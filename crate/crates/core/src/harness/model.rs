//! The `ictmc-v1` model file format.
//!
//! ```json
//! {
//!   "format": "ictmc-v1",
//!   "states": ["healthy", "sick"],
//!   "rates": [
//!     {"from": "healthy", "to": "sick", "low": "1/52", "high": "3/52"},
//!     {"from": "sick", "to": "healthy", "low": 0.5, "high": 2}
//!   ]
//! }
//! ```
//!
//! Bounds are JSON numbers or strings holding a decimal or a ratio `a/b`.
//! Pairs that are not listed have the rate interval `[0, 0]`.

use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gamble::StateSpace;
use crate::operator::IntervalRateOperator;

pub const FORMAT_TAG: &str = "ictmc-v1";

/// Failure to load a model file.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("{}", match .line { Some(l) => format!("validation error at line {l}: {message}"), None => format!("validation error: {message}") })]
    Validation { line: Option<usize>, message: String },
}

impl ModelError {
    /// Process exit code: 2 for unreadable or malformed files, 3 for invalid models.
    pub fn exit_code(&self) -> i32 {
        match self {
            ModelError::Io { .. } | ModelError::Parse { .. } => 2,
            ModelError::Validation { .. } => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Bound {
    Number(f64),
    Text(String),
}

impl Bound {
    fn value(&self) -> Result<f64, String> {
        match self {
            Bound::Number(v) => Ok(*v),
            Bound::Text(s) => parse_real(s),
        }
    }
}

/// Parses a decimal or a ratio `a/b` of decimals.
pub fn parse_real(text: &str) -> Result<f64, String> {
    let text = text.trim();
    let decimal = |s: &str| -> Result<f64, String> {
        let s = s.trim();
        // reject the words Rust accepts ("inf", "NaN", ...)
        if !s.chars().all(|c| c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E')) || s.is_empty() {
            return Err(format!("{text:?} is not a number"));
        }
        s.parse::<f64>().map_err(|_| format!("{text:?} is not a number"))
    };
    match text.split_once('/') {
        Some((a, b)) => {
            let (a, b) = (decimal(a)?, decimal(b)?);
            if b == 0.0 {
                return Err(format!("{text:?} divides by zero"));
            }
            Ok(a / b)
        }
        None => decimal(text),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateEntry {
    pub from: String,
    pub to: String,
    pub low: Bound,
    pub high: Bound,
}

/// Serialized form of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format: String,
    pub states: Vec<String>,
    #[serde(default)]
    pub rates: Vec<RateEntry>,
}

impl ModelFile {
    pub fn from_operator(q: &IntervalRateOperator) -> Self {
        let n = q.size();
        let space = q.space();
        let mut rates = Vec::new();
        for x in 0..n {
            for y in (0..n).filter(|&y| y != x) {
                let (low, high) = (q.lower(x, y), q.upper(x, y));
                if low != 0.0 || high != 0.0 {
                    rates.push(RateEntry {
                        from: space.label(x),
                        to: space.label(y),
                        low: Bound::Number(low),
                        high: Bound::Number(high),
                    });
                }
            }
        }
        Self {
            format: FORMAT_TAG.to_string(),
            states: (0..n).map(|x| space.label(x)).collect(),
            rates,
        }
    }

    /// Validates the file. The error carries the index of the offending rate
    /// entry, if any.
    pub fn to_operator(&self) -> Result<IntervalRateOperator, (Option<usize>, String)> {
        if self.format != FORMAT_TAG {
            return Err((None, format!("unsupported format {:?}, expected {FORMAT_TAG:?}", self.format)));
        }
        let space = StateSpace::with_labels(self.states.clone()).map_err(|e| (None, e.to_string()))?;
        let n = space.size();
        let mut lower = vec![vec![0.0; n]; n];
        let mut upper = vec![vec![0.0; n]; n];
        let mut seen = vec![false; n * n];
        for (i, rate) in self.rates.iter().enumerate() {
            let fail = |message: String| (Some(i), message);
            let index = |label: &str| space.index_of(label).ok_or_else(|| fail(format!("unknown state {label:?}")));
            let (x, y) = (index(&rate.from)?, index(&rate.to)?);
            if x == y {
                return Err(fail(format!("rate from {:?} to itself", rate.from)));
            }
            if std::mem::replace(&mut seen[x * n + y], true) {
                return Err(fail(format!("duplicate rate from {:?} to {:?}", rate.from, rate.to)));
            }
            let low = rate.low.value().map_err(&fail)?;
            let high = rate.high.value().map_err(&fail)?;
            if !low.is_finite() || !high.is_finite() {
                return Err(fail(format!("bounds [{low}, {high}] are not finite")));
            }
            if low < 0.0 {
                return Err(fail(format!("negative lower rate {low}")));
            }
            if low > high {
                return Err(fail(format!("inverted interval [{low}, {high}]")));
            }
            lower[x][y] = low;
            upper[x][y] = high;
        }
        IntervalRateOperator::new(space, lower, upper).map_err(|e| (None, e.to_string()))
    }
}

/// Line (1-based) of the `index`-th rate entry, located by its `"from"` key
/// after the `"rates"` key.
fn rate_entry_line(text: &str, index: usize) -> Option<usize> {
    let start = Regex::new(r#""rates"\s*:"#).expect("valid regex").find(text)?.end();
    let key = Regex::new(r#""from"\s*:"#).expect("valid regex");
    let at = key.find_iter(&text[start..]).nth(index)?.start() + start;
    Some(line_of(text, at))
}

fn key_line(text: &str, key: &str) -> Option<usize> {
    let pattern = Regex::new(&format!(r#""{}"\s*:"#, regex::escape(key))).expect("valid regex");
    pattern.find(text).map(|m| line_of(text, m.start()))
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset].matches('\n').count() + 1
}

/// Parses and validates model text.
pub fn parse_model(text: &str) -> Result<IntervalRateOperator, ModelError> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| ModelError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    file.to_operator().map_err(|(entry, message)| {
        let line = match entry {
            Some(i) => rate_entry_line(text, i),
            None if message.contains("format") => key_line(text, "format"),
            None => key_line(text, "states"),
        };
        ModelError::Validation { line, message }
    })
}

pub fn load_model(path: impl AsRef<Path>) -> Result<IntervalRateOperator, ModelError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ModelError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_model(&text)
}

/// Pretty-printed model text; numbers use the shortest exact representation.
pub fn serialize_model(q: &IntervalRateOperator) -> String {
    serde_json::to_string_pretty(&ModelFile::from_operator(q)).expect("model files serialize")
}
