//! Single-agent estimation: linear prediction, the sum-of-squares cost,
//! batch gradient descent and the instantaneous-gradient LMS step.
//!
//! `cost` and `batch_gd_step` are reference routines used to cross-check the
//! LMS update; the simulator itself only calls `predict` and `lms_step`.

use std::ops::{Deref, DerefMut};

use crate::error::{DivergenceSite, Error, Result};

/// Estimates with any component beyond this magnitude are treated as
/// diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightVector(pub Vec<f64>);

impl WeightVector {
    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Fails with a divergence error if any component is non-finite or
    /// exceeds [`DIVERGENCE_LIMIT`].
    pub fn check_finite(&self) -> Result<()> {
        match self
            .0
            .iter()
            .find(|w| !w.is_finite() || w.abs() > DIVERGENCE_LIMIT)
        {
            Some(&w) => Err(Error::Divergence {
                site: DivergenceSite::default(),
                magnitude: w.abs(),
            }),
            None => Ok(()),
        }
    }

    /// Euclidean distance to `other`.
    pub fn distance(&self, other: &[f64]) -> f64 {
        squared_distance(&self.0, other).sqrt()
    }
}

impl From<Vec<f64>> for WeightVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl Deref for WeightVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for WeightVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::Dimension { expected, found });
    }
    Ok(())
}

/// Linear prediction `w·x`.
#[inline]
pub fn predict(w: &[f64], x: &[f64]) -> Result<f64> {
    check_len(w.len(), x.len())?;
    Ok(w.iter().zip(x).map(|(w, x)| w * x).sum())
}

fn check_dataset(w: &[f64], inputs: &[Vec<f64>], targets: &[f64]) -> Result<()> {
    if inputs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_len(inputs.len(), targets.len())?;
    for x in inputs {
        check_len(w.len(), x.len())?;
    }
    Ok(())
}

/// Mean sum-of-squares cost `(1/2L) Σ (y(k) − w·x(k))²` over the `L`
/// samples `inputs[k]`, `targets[k]`.
pub fn cost(w: &[f64], inputs: &[Vec<f64>], targets: &[f64]) -> Result<f64> {
    check_dataset(w, inputs, targets)?;
    let mut total = 0.0;
    for (x, y) in inputs.iter().zip(targets) {
        let r = y - predict(w, x)?;
        total += r * r;
    }
    Ok(total / (2.0 * inputs.len() as f64))
}

/// One full-batch gradient-descent step `w + μ (1/L) Σ (y(k) − w·x(k)) x(k)`.
pub fn batch_gd_step(
    w: &[f64],
    inputs: &[Vec<f64>],
    targets: &[f64],
    mu: f64,
) -> Result<WeightVector> {
    check_dataset(w, inputs, targets)?;
    if !(mu > 0.0) {
        return Err(Error::Config(format!(
            "learning rate must be positive, got {mu}"
        )));
    }
    let mut direction = vec![0.0; w.len()];
    for (x, y) in inputs.iter().zip(targets) {
        let r = y - predict(w, x)?;
        for (d, xj) in direction.iter_mut().zip(x) {
            *d += r * xj;
        }
    }
    let scale = mu / inputs.len() as f64;
    Ok(w.iter()
        .zip(&direction)
        .map(|(w, d)| w + scale * d)
        .collect::<Vec<_>>()
        .into())
}

/// Instantaneous-gradient LMS update starting from `psi`.
///
/// Returns the new estimate `psi + μ e x` together with the a-priori error
/// `e = y − psi·x`.
#[inline]
pub fn lms_step(psi: &[f64], x: &[f64], y: f64, mu: f64) -> Result<(WeightVector, f64)> {
    let e = y - predict(psi, x)?;
    let step = mu * e;
    let w: WeightVector = psi
        .iter()
        .zip(x)
        .map(|(p, x)| p + step * x)
        .collect::<Vec<_>>()
        .into();
    if !e.is_finite() {
        return Err(Error::Divergence {
            site: DivergenceSite::default(),
            magnitude: e.abs(),
        });
    }
    w.check_finite()?;
    Ok((w, e))
}
