//! Tsallis entropy of a histogram and the multi-q feature vector built from it.

use std::fmt;

use crate::error::{Error, Result};
use crate::profile::{Histogram, Label};

/// Half-width of the window around `q = 1` where the Shannon limit is used.
pub const Q_ONE_EPSILON: f64 = 1e-9;

/// Tsallis entropy `(1 - sum p_i^q) / (q - 1)`, with `0^q = 0`.
///
/// Within [`Q_ONE_EPSILON`] of `q = 1` the Shannon limit `-sum p_i ln p_i` is returned.
pub fn tsallis_entropy(histogram: &Histogram, q: f64) -> Result<f64> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::InvalidQ(q));
    }
    let probs = histogram.probs().iter().filter(|&&p| p > 0.0);
    if (q - 1.0).abs() <= Q_ONE_EPSILON {
        return Ok(probs.map(|&p| -p * p.ln()).sum::<f64>().max(0.0));
    }
    let power_sum: f64 = probs.map(|&p| p.powf(q)).sum();
    Ok(((1.0 - power_sum) / (q - 1.0)).max(0.0))
}

/// Strictly increasing, positive entropic indices.
#[derive(Debug, Clone, PartialEq)]
pub struct QGrid(Vec<f64>);

impl QGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidGrid("empty".into()));
        }
        if let Some(&q) = values.iter().find(|&&q| !(q > 0.0 && q.is_finite())) {
            return Err(Error::InvalidQ(q));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid("values must be strictly increasing".into()));
        }
        Ok(QGrid(values))
    }

    /// `from, from + step, ...` up to and including `to`. Values are rounded
    /// to 12 decimals so that `0.1 .. 2.0 step 0.1` reads back as written.
    pub fn stepped(from: f64, to: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) || !(from <= to) {
            return Err(Error::InvalidGrid(format!("from {from} to {to} step {step}")));
        }
        let count = ((to - from) / step + 1e-9).floor() as usize + 1;
        let values = (0..count)
            .map(|i| ((from + i as f64 * step) * 1e12).round() / 1e12)
            .collect();
        QGrid::new(values)
    }

    /// `0.1, 0.2, ..., 2.0`.
    pub fn default_grid() -> Self {
        QGrid::stepped(0.1, 2.0, 0.1).expect("valid default grid")
    }

    pub fn single(q: f64) -> Result<Self> {
        QGrid::new(vec![q])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for QGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0.as_slice() {
            [q] => write!(f, "q = {q}"),
            [first, .., last] => write!(f, "q = {first}..{last} ({} values)", self.0.len()),
            [] => f.write_str("q = ()"),
        }
    }
}

/// Features extracted from one profile.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub profile_id: String,
    pub label: Option<Label>,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(profile_id: impl Into<String>, label: Option<Label>, values: Vec<f64>) -> Result<Self> {
        if let Some((row, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "feature ".into(),
                row,
                value,
            });
        }
        Ok(FeatureVector {
            profile_id: profile_id.into(),
            label,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `tsallis_entropy(histogram, q)` for every `q` of `grid`, in grid order.
/// Identity fields are left empty; see [`crate::pipeline`] for labelled extraction.
pub fn multiq_vector(histogram: &Histogram, grid: &QGrid) -> Result<FeatureVector> {
    let values = grid
        .values()
        .iter()
        .map(|&q| tsallis_entropy(histogram, q))
        .collect::<Result<Vec<_>>>()?;
    FeatureVector::new(String::new(), None, values)
}
