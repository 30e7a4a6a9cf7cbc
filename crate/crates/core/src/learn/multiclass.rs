//! One-vs-one multiclass voting over binary SVMs.

use serde::{Deserialize, Serialize};

use super::svm::{svm_train, SvmModel, SvmParams};
use super::LearnError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneVsOne {
    /// Sorted distinct class labels.
    pub classes: Vec<i32>,
    /// Models for pairs `(i, j)`, `i < j`, in lexicographic order.
    pub pairs: Vec<((usize, usize), SvmModel)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OvoPrediction {
    pub label: i32,
    /// Votes per class, aligned with `OneVsOne::classes`.
    pub votes: Vec<usize>,
    /// Winner's votes minus the runner-up's.
    pub vote_margin: usize,
}

impl OneVsOne {
    pub fn train(x: &[Vec<f64>], y: &[i32], params: &SvmParams) -> Result<Self, LearnError> {
        if x.len() != y.len() {
            return Err(LearnError::DimensionMismatch { expected: x.len(), got: y.len() });
        }
        let mut classes: Vec<i32> = y.to_vec();
        classes.sort_unstable();
        classes.dedup();
        if classes.len() < 2 {
            return Err(if classes.is_empty() { LearnError::EmptyMatrix } else { LearnError::SingleClass });
        }
        let mut pairs = Vec::new();
        for i in 0..classes.len() {
            for j in i + 1..classes.len() {
                let (xs, ys): (Vec<Vec<f64>>, Vec<i32>) = x
                    .iter()
                    .zip(y)
                    .filter(|(_, &l)| l == classes[i] || l == classes[j])
                    .map(|(r, &l)| (r.clone(), l))
                    .unzip();
                pairs.push(((i, j), svm_train(&xs, &ys, params)?));
            }
        }
        Ok(Self { classes, pairs })
    }

    pub fn predict(&self, row: &[f64]) -> Result<OvoPrediction, LearnError> {
        let k = self.classes.len();
        let mut votes = vec![0usize; k];
        let mut strength = vec![0.0f64; k];
        for ((i, j), model) in &self.pairs {
            // the larger label (class j) is the positive side
            let d = model.decision(row)?;
            let winner = if d > 0.0 { *j } else { *i };
            votes[winner] += 1;
            strength[winner] += d.abs();
        }
        let best = (0..k)
            .max_by(|&a, &b| votes[a].cmp(&votes[b]).then(strength[a].total_cmp(&strength[b])).then(b.cmp(&a)))
            .expect("at least two classes");
        let runner_up = (0..k).filter(|&c| c != best).map(|c| votes[c]).max().unwrap_or(0);
        Ok(OvoPrediction { label: self.classes[best], vote_margin: votes[best] - runner_up, votes })
    }
}
