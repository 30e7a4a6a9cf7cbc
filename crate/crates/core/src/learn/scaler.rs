//! Z-score normalisation fitted on training rows only.

use serde::{Deserialize, Serialize};

use super::LearnError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleParams {
    pub means: Vec<f64>,
    /// Sample standard deviations (divisor n - 1).
    pub stds: Vec<f64>,
    /// Columns with zero spread; their normalised value is always 0.
    pub constant: Vec<bool>,
}

pub fn fit_scaler(train: &[Vec<f64>]) -> Result<ScaleParams, LearnError> {
    let first = train.first().ok_or(LearnError::EmptyMatrix)?;
    let d = first.len();
    if let Some(bad) = train.iter().find(|r| r.len() != d) {
        return Err(LearnError::DimensionMismatch { expected: d, got: bad.len() });
    }
    let n = train.len() as f64;
    let means: Vec<f64> = (0..d).map(|j| train.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let stds: Vec<f64> = (0..d)
        .map(|j| {
            if train.len() < 2 {
                return 0.0;
            }
            (train.iter().map(|r| (r[j] - means[j]).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        })
        .collect();
    let constant = stds.iter().map(|&s| !(s > 0.0)).collect();
    Ok(ScaleParams { means, stds, constant })
}

impl ScaleParams {
    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn apply_row(&self, row: &[f64]) -> Result<Vec<f64>, LearnError> {
        if row.len() != self.dim() {
            return Err(LearnError::DimensionMismatch { expected: self.dim(), got: row.len() });
        }
        Ok(row
            .iter()
            .enumerate()
            .map(|(j, &v)| if self.constant[j] { 0.0 } else { (v - self.means[j]) / self.stds[j] })
            .collect())
    }

    pub fn apply(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, LearnError> {
        rows.iter().map(|r| self.apply_row(r)).collect()
    }
}
