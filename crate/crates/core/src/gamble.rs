//! Gambles on a finite state space and the norms used throughout the crate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite state space, optionally carrying human-readable labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSpace {
    size: usize,
    labels: Option<Vec<String>>,
}

impl StateSpace {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidStateSpace("size must be at least 1".into()));
        }
        Ok(Self { size, labels: None })
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidStateSpace("at least one state is required".into()));
        }
        for (i, label) in labels.iter().enumerate() {
            if labels[..i].contains(label) {
                return Err(Error::InvalidStateSpace(format!("duplicate state label {label:?}")));
            }
        }
        Ok(Self {
            size: labels.len(),
            labels: Some(labels),
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Label of state `x`, falling back to its index.
    pub fn label(&self, x: usize) -> String {
        match &self.labels {
            Some(l) => l[x].clone(),
            None => x.to_string(),
        }
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        match &self.labels {
            Some(l) => l.iter().position(|s| s == label),
            None => label.parse::<usize>().ok().filter(|&i| i < self.size),
        }
    }
}

/// A real-valued function on the state space. Every entry is finite.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Gamble(Vec<f64>);

/// The three norms of a gamble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GambleNorms {
    pub max_norm: f64,
    pub variation: f64,
    pub centred: f64,
}

impl Gamble {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidGamble("a gamble needs at least one value".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidGamble(format!(
                "entry {i} is not finite ({})",
                values[i]
            )));
        }
        Ok(Self(values))
    }

    /// Wraps values already known to be finite.
    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self(values)
    }

    pub fn constant(size: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; size])
    }

    /// Indicator of the set `states`.
    pub fn indicator(size: usize, states: &[usize]) -> Result<Self> {
        let mut v = vec![0.0; size];
        for &x in states {
            if x >= size {
                return Err(Error::InvalidGamble(format!(
                    "state {x} outside a space of size {size}"
                )));
            }
            v[x] = 1.0;
        }
        Self::new(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |acc: f64, v| acc.max(v.abs()))
    }

    /// `max f - min f`.
    pub fn variation(&self) -> f64 {
        self.max() - self.min()
    }

    /// Half the variation.
    pub fn centred(&self) -> f64 {
        self.variation() / 2.0
    }

    pub fn norms(&self) -> GambleNorms {
        gamble_norms(self)
    }

    /// `(max f + min f) / 2`.
    pub fn midpoint(&self) -> f64 {
        (self.max() + self.min()) / 2.0
    }

    pub fn is_constant(&self) -> bool {
        self.variation() == 0.0
    }

    pub fn neg(&self) -> Self {
        Self(self.0.iter().map(|v| -v).collect())
    }

    /// Largest absolute componentwise difference.
    pub fn distance(&self, other: &Gamble) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .fold(0.0, |acc: f64, (a, b)| acc.max((a - b).abs()))
    }

    pub(crate) fn check_len(&self, expected: usize) -> Result<()> {
        if self.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: self.len(),
            });
        }
        Ok(())
    }
}

impl std::ops::Index<usize> for Gamble {
    type Output = f64;

    fn index(&self, x: usize) -> &f64 {
        &self.0[x]
    }
}

pub fn gamble_norms(f: &Gamble) -> GambleNorms {
    let variation = f.variation();
    GambleNorms {
        max_norm: f.max_norm(),
        variation,
        centred: variation / 2.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norms_of_indicator() {
        let n = Gamble::new(vec![0.0, 1.0]).unwrap().norms();
        assert_eq!((n.max_norm, n.variation, n.centred), (1.0, 1.0, 0.5));
    }

    #[test]
    fn norms_of_constant() {
        let n = Gamble::constant(4, -2.5).unwrap().norms();
        assert_eq!((n.max_norm, n.variation, n.centred), (2.5, 0.0, 0.0));
    }

    #[test]
    fn norms_of_mixed_signs() {
        let n = Gamble::new(vec![-3.0, 2.0, 5.0]).unwrap().norms();
        assert_eq!((n.max_norm, n.variation, n.centred), (5.0, 8.0, 4.0));
    }

    #[test]
    fn rejects_non_finite() {
        assert!(Gamble::new(vec![0.0, f64::NAN]).is_err());
        assert!(Gamble::new(vec![f64::INFINITY]).is_err());
        assert!(Gamble::new(vec![]).is_err());
    }

    #[test]
    fn state_space_labels() {
        assert!(StateSpace::new(0).is_err());
        assert!(StateSpace::with_labels(vec!["a".into(), "a".into()]).is_err());
        let s = StateSpace::with_labels(vec!["a".into(), "b".into()]).unwrap();
        assert_eq!(s.size(), 2);
        assert_eq!(s.index_of("b"), Some(1));
        assert_eq!(s.index_of("c"), None);
    }

    #[test]
    fn indicator_out_of_range() {
        assert!(Gamble::indicator(2, &[2]).is_err());
        assert_eq!(Gamble::indicator(3, &[0, 2]).unwrap().values(), &[1.0, 0.0, 1.0]);
    }
}
