//! Principal component analysis on the sample covariance, solved with cyclic
//! Jacobi rotations.
//!
//! When there are fewer vectors than dimensions (raw 800-point profiles, for
//! example) the eigenproblem is solved on the `n x n` Gram matrix instead and
//! mapped back, which yields the same non-null components at a fraction of
//! the cost. Null directions are not materialized in that case, so
//! [`PcaModel::components`] may hold fewer than `d` directions.

use crate::error::{Error, Result};

const JACOBI_TOLERANCE: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Translation and rotation onto the directions of maximal variance.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    mean: Vec<f64>,
    components: Vec<Vec<f64>>,
    variances: Vec<f64>,
}

impl PcaModel {
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Unit directions ordered by decreasing variance.
    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn dimension(&self) -> usize {
        self.mean.len()
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi sweeps.
///
/// `matrix` is `n x n` row-major and is overwritten. Returns eigenvalues and
/// the matching eigenvectors, in the order the sweep leaves them.
pub fn symmetric_eigen(matrix: &mut [f64], n: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    assert_eq!(matrix.len(), n * n, "matrix must be n x n");
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = matrix.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
    let threshold = JACOBI_TOLERANCE * scale;

    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut max_off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                max_off = max_off.max(matrix[p * n + q].abs());
            }
        }
        if max_off < threshold {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = matrix[p * n + q];
                if apq.abs() < threshold * 1e-3 {
                    continue;
                }
                let app = matrix[p * n + p];
                let aqq = matrix[q * n + q];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                rotate(matrix, n, p, q, c, s);
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        let max_off = (0..n)
            .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
            .map(|(p, q)| matrix[p * n + q].abs())
            .fold(0.0, f64::max);
        if max_off >= threshold {
            return Err(Error::NoConvergence(MAX_SWEEPS));
        }
    }
    let values = (0..n).map(|i| matrix[i * n + i]).collect();
    let vectors = (0..n).map(|j| (0..n).map(|i| v[i * n + j]).collect()).collect();
    Ok((values, vectors))
}

// A <- J^T A J for the plane rotation J acting on coordinates (p, q).
fn rotate(a: &mut [f64], n: usize, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..n {
        let akp = a[k * n + p];
        let akq = a[k * n + q];
        a[k * n + p] = c * akp - s * akq;
        a[k * n + q] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[p * n + k];
        let aqk = a[q * n + k];
        a[p * n + k] = c * apk - s * aqk;
        a[q * n + k] = s * apk + c * aqk;
    }
    a[p * n + q] = 0.0;
    a[q * n + p] = 0.0;
}

/// Fits the mean and covariance eigenbasis (divisor `count - 1`).
pub fn fit_pca<V: AsRef<[f64]>>(data: &[V]) -> Result<PcaModel> {
    if data.len() < 2 {
        return Err(Error::TooFewVectors {
            needed: 2,
            actual: data.len(),
        });
    }
    let d = data[0].as_ref().len();
    if d == 0 {
        return Err(Error::LengthMismatch {
            expected: 1,
            actual: 0,
        });
    }
    if let Some(bad) = data.iter().find(|v| v.as_ref().len() != d) {
        return Err(Error::LengthMismatch {
            expected: d,
            actual: bad.as_ref().len(),
        });
    }
    let n = data.len();
    let mut mean = vec![0.0; d];
    for v in data {
        for (m, x) in mean.iter_mut().zip(v.as_ref()) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let centered: Vec<Vec<f64>> = data
        .iter()
        .map(|v| v.as_ref().iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();
    let divisor = (n - 1) as f64;

    let mut pairs: Vec<(f64, Vec<f64>)> = if n >= d {
        let mut cov = vec![0.0; d * d];
        for row in &centered {
            for i in 0..d {
                let ri = row[i];
                for j in i..d {
                    cov[i * d + j] += ri * row[j];
                }
            }
        }
        for i in 0..d {
            for j in i..d {
                let c = cov[i * d + j] / divisor;
                cov[i * d + j] = c;
                cov[j * d + i] = c;
            }
        }
        let (values, vectors) = symmetric_eigen(&mut cov, d)?;
        values.into_iter().zip(vectors).collect()
    } else {
        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let g = dot(&centered[i], &centered[j]) / divisor;
                gram[i * n + j] = g;
                gram[j * n + i] = g;
            }
        }
        let (values, vectors) = symmetric_eigen(&mut gram, n)?;
        let top = values.iter().cloned().fold(0.0, f64::max);
        values
            .into_iter()
            .zip(vectors)
            .filter(|(lambda, _)| *lambda > 1e-12 * top.max(f64::MIN_POSITIVE))
            .map(|(lambda, u)| {
                let mut c = vec![0.0; d];
                for (row, &w) in centered.iter().zip(&u) {
                    for (ci, x) in c.iter_mut().zip(row) {
                        *ci += w * x;
                    }
                }
                let norm = dot(&c, &c).sqrt();
                c.iter_mut().for_each(|x| *x /= norm);
                (lambda, c)
            })
            .collect()
    };

    for (lambda, c) in &mut pairs {
        *lambda = lambda.max(0.0);
        orient(c);
    }
    // stable: equal variances keep sweep order
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (variances, components) = pairs.into_iter().unzip();
    Ok(PcaModel {
        mean,
        components,
        variances,
    })
}

// Flip so the largest-magnitude entry (first on ties) is positive.
fn orient(c: &mut [f64]) {
    let mut best = 0;
    for (i, x) in c.iter().enumerate() {
        if x.abs() > c[best].abs() {
            best = i;
        }
    }
    if c[best] < 0.0 {
        c.iter_mut().for_each(|x| *x = -*x);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Coordinates of `v - mean` along the first `k` components.
pub fn project(model: &PcaModel, v: &[f64], k: usize) -> Result<Vec<f64>> {
    if v.len() != model.dimension() {
        return Err(Error::LengthMismatch {
            expected: model.dimension(),
            actual: v.len(),
        });
    }
    if k == 0 || k > model.components.len() {
        return Err(Error::ComponentsOutOfRange {
            k,
            max: model.components.len(),
        });
    }
    let centered: Vec<f64> = v.iter().zip(&model.mean).map(|(x, m)| x - m).collect();
    Ok(model.components[..k].iter().map(|c| dot(&centered, c)).collect())
}
