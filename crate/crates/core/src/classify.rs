//! Gaussian naive Bayes over feature vectors.
//!
//! Classes are kept in lexicographic label order; that order also breaks ties
//! between equal posterior scores.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::entropy::FeatureVector;
use crate::error::{Error, Result};
use crate::profile::Label;

/// Relative part of the variance floor, scaled by the largest pooled feature variance.
pub const VARIANCE_FLOOR_RELATIVE: f64 = 1e-9;
/// Absolute lower bound of the variance floor.
pub const VARIANCE_FLOOR_ABSOLUTE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct NbModel {
    classes: Vec<Label>,
    priors: Vec<f64>,
    means: Vec<Vec<f64>>,
    variances: Vec<Vec<f64>>,
}

/// Result of classifying one vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: Label,
    /// Posterior per class, in [`NbModel::classes`] order.
    pub posteriors: Vec<f64>,
}

impl NbModel {
    pub fn classes(&self) -> &[Label] {
        &self.classes
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn variances(&self) -> &[Vec<f64>] {
        &self.variances
    }

    pub fn feature_count(&self) -> usize {
        self.means[0].len()
    }

    /// Plain-text `key=value` form; floats use shortest round-trip formatting.
    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let mut out = String::from("# gaussian naive bayes model\n");
        let names: Vec<&str> = self.classes.iter().map(Label::as_str).collect();
        let _ = writeln!(out, "classes={}", names.join(","));
        let _ = writeln!(out, "features={}", self.feature_count());
        for (i, class) in self.classes.iter().enumerate() {
            let _ = writeln!(out, "prior.{class}={}", self.priors[i]);
            let _ = writeln!(out, "mean.{class}={}", join(&self.means[i]));
            let _ = writeln!(out, "variance.{class}={}", join(&self.variances[i]));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Model {
                line: n + 1,
                message: format!("expected key=value, got `{line}`"),
            })?;
            entries.insert(key.trim().to_string(), (n + 1, value.trim().to_string()));
        }
        let take = |key: &str| {
            entries.get(key).cloned().ok_or_else(|| Error::Model {
                line: 0,
                message: format!("missing key `{key}`"),
            })
        };
        let floats = |(line, value): (usize, String)| -> Result<Vec<f64>> {
            value
                .split(',')
                .map(|x| {
                    x.trim().parse::<f64>().map_err(|_| Error::Model {
                        line,
                        message: format!("invalid number `{x}`"),
                    })
                })
                .collect()
        };
        let (_, class_list) = take("classes")?;
        let classes = class_list
            .split(',')
            .map(|c| Label::new(c.trim()))
            .collect::<Result<Vec<_>>>()?;
        let (line, features) = take("features")?;
        let features: usize = features.parse().map_err(|_| Error::Model {
            line,
            message: format!("invalid feature count `{features}`"),
        })?;
        let mut model = NbModel {
            classes: Vec::new(),
            priors: Vec::new(),
            means: Vec::new(),
            variances: Vec::new(),
        };
        for class in classes {
            let prior = floats(take(&format!("prior.{class}"))?)?;
            let (line, _) = take(&format!("mean.{class}"))?;
            let means = floats(take(&format!("mean.{class}"))?)?;
            let variances = floats(take(&format!("variance.{class}"))?)?;
            if prior.len() != 1 || means.len() != features || variances.len() != features {
                return Err(Error::Model {
                    line,
                    message: format!("class `{class}` does not have {features} features"),
                });
            }
            if variances.iter().any(|&v| !(v > 0.0)) {
                return Err(Error::Model {
                    line,
                    message: format!("class `{class}` has a non-positive variance"),
                });
            }
            model.classes.push(class);
            model.priors.push(prior[0]);
            model.means.push(means);
            model.variances.push(variances);
        }
        if model.classes.len() < 2 {
            return Err(Error::SingleClass(model.classes.len()));
        }
        Ok(model)
    }
}

fn mean_and_variance<'a>(rows: impl Iterator<Item = &'a [f64]> + Clone, d: usize) -> (Vec<f64>, Vec<f64>) {
    let mut count = 0usize;
    let mut mean = vec![0.0; d];
    for row in rows.clone() {
        count += 1;
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= count as f64);
    let mut var = vec![0.0; d];
    for row in rows {
        for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    var.iter_mut().for_each(|v| *v /= (count - 1) as f64);
    (mean, var)
}

/// Per-class Gaussian estimates (divisor `count - 1`) with floored variances
/// and frequency priors.
pub fn train_nb(features: &[FeatureVector]) -> Result<NbModel> {
    let mut by_class: BTreeMap<&Label, Vec<&[f64]>> = BTreeMap::new();
    let d = features.first().map(FeatureVector::len).unwrap_or(0);
    for fv in features {
        let label = fv.label.as_ref().ok_or_else(|| Error::MissingLabel(fv.profile_id.clone()))?;
        if fv.len() != d {
            return Err(Error::LengthMismatch {
                expected: d,
                actual: fv.len(),
            });
        }
        by_class.entry(label).or_default().push(&fv.values);
    }
    if by_class.len() < 2 {
        return Err(Error::SingleClass(by_class.len()));
    }
    if let Some((label, rows)) = by_class.iter().find(|(_, rows)| rows.len() < 2) {
        return Err(Error::ClassTooSmall {
            label: label.to_string(),
            count: rows.len(),
        });
    }
    if d == 0 {
        return Err(Error::LengthMismatch {
            expected: 1,
            actual: 0,
        });
    }

    let (_, pooled) = mean_and_variance(features.iter().map(|f| f.values.as_slice()), d);
    let largest = pooled.iter().cloned().fold(0.0, f64::max);
    let floor = (VARIANCE_FLOOR_RELATIVE * largest).max(VARIANCE_FLOOR_ABSOLUTE);

    let total = features.len() as f64;
    let mut model = NbModel {
        classes: Vec::with_capacity(by_class.len()),
        priors: Vec::with_capacity(by_class.len()),
        means: Vec::with_capacity(by_class.len()),
        variances: Vec::with_capacity(by_class.len()),
    };
    for (label, rows) in by_class {
        let (mean, mut var) = mean_and_variance(rows.iter().copied(), d);
        var.iter_mut().for_each(|v| *v = v.max(floor));
        model.classes.push(label.clone());
        model.priors.push(rows.len() as f64 / total);
        model.means.push(mean);
        model.variances.push(var);
    }
    Ok(model)
}

/// Log prior plus summed Gaussian log densities, per class.
pub fn log_scores(model: &NbModel, values: &[f64]) -> Result<Vec<f64>> {
    if values.len() != model.feature_count() {
        return Err(Error::LengthMismatch {
            expected: model.feature_count(),
            actual: values.len(),
        });
    }
    Ok((0..model.classes.len())
        .map(|c| {
            let density: f64 = values
                .iter()
                .zip(&model.means[c])
                .zip(&model.variances[c])
                .map(|((x, m), v)| -0.5 * (2.0 * PI * v).ln() - (x - m) * (x - m) / (2.0 * v))
                .sum();
            model.priors[c].ln() + density
        })
        .collect())
}

pub fn predict_nb(model: &NbModel, fv: &FeatureVector) -> Result<Prediction> {
    let scores = log_scores(model, &fv.values)?;
    let mut best = 0;
    for (c, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = c;
        }
    }
    let top = scores[best];
    let weights: Vec<f64> = scores.iter().map(|s| (s - top).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(Prediction {
        label: model.classes[best].clone(),
        posteriors: weights.iter().map(|w| w / total).collect(),
    })
}
