use serde::{Deserialize, Serialize};

use super::Cohort;
use crate::error::{Error, Result};

const CONSTANT_SD: f64 = 1e-12;

/// Per-column standard-score parameters fitted on a training cohort.
///
/// Columns whose standard deviation falls below 1e-12 are flagged constant
/// and keep `sd = 1`, so they standardize to zero.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    #[serde(rename = "constant_flags")]
    pub constant: Vec<bool>,
}

impl Normalization {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn constant_columns(&self) -> Vec<usize> {
        self.constant
            .iter()
            .enumerate()
            .filter_map(|(i, &c)| c.then_some(i))
            .collect()
    }

    pub fn apply_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: row.len(),
            });
        }
        Ok(row
            .iter()
            .zip(self.mean.iter().zip(&self.sd))
            .map(|(x, (m, s))| (x - m) / s)
            .collect())
    }

    /// Standardizes a single value of column `j`.
    pub fn apply_one(&self, j: usize, x: f64) -> f64 {
        (x - self.mean[j]) / self.sd[j]
    }
}

/// Fits mean and population standard deviation of every deep-feature column.
pub fn zscore_fit(train: &Cohort) -> Result<Normalization> {
    let dim = train.feature_dim().ok_or(Error::NoFeatures)?;
    if train.is_empty() {
        return Err(Error::EmptyCohort);
    }
    let n = train.len() as f64;
    let mut mean = vec![0.0; dim];
    for p in train.participants() {
        for (m, x) in mean.iter_mut().zip(p.deep_features.as_deref().unwrap()) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);

    let mut var = vec![0.0; dim];
    for p in train.participants() {
        for ((v, x), m) in var.iter_mut().zip(p.deep_features.as_deref().unwrap()).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    let mut sd = Vec::with_capacity(dim);
    let mut constant = Vec::with_capacity(dim);
    for v in var {
        let s = (v / n).sqrt();
        let flat = s < CONSTANT_SD;
        constant.push(flat);
        sd.push(if flat { 1.0 } else { s });
    }
    Ok(Normalization { mean, sd, constant })
}

/// Returns a copy of `cohort` with deep features standardized by `norm`.
pub fn zscore_apply(norm: &Normalization, cohort: &Cohort) -> Result<Cohort> {
    let mut participants = cohort.participants().to_vec();
    for p in &mut participants {
        let f = p.deep_features.as_deref().ok_or(Error::NoFeatures)?;
        p.deep_features = Some(norm.apply_row(f)?);
    }
    Cohort::new(participants)
}
