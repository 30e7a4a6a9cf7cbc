//! Seeded k-fold partitions and cross-validation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::scaler::fit_scaler;
use super::svm::{svm_train, Kernel, SvmParams};
use super::LearnError;

pub const GRID_C: [f64; 4] = [0.1, 1.0, 10.0, 100.0];
/// Exponents of two for the RBF width grid.
pub const GRID_LOG2_GAMMA: std::ops::RangeInclusive<i32> = -7..=3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    /// Fold index of every sample.
    pub assignments: Vec<usize>,
    pub k: usize,
}

impl FoldPlan {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] != fold).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

/// Shuffles `0..n` with `seed`; the sample at shuffled position `i` goes to
/// fold `i % k`.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<FoldPlan, LearnError> {
    if k < 2 {
        return Err(LearnError::InvalidParameter(format!("need at least 2 folds, got {k}")));
    }
    if n < k {
        return Err(LearnError::TooFewSamples { need: k, got: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut assignments = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        assignments[i] = pos % k;
    }
    Ok(FoldPlan { assignments, k })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub mean_accuracy: f64,
    pub fold_accuracies: Vec<f64>,
}

fn gather<T: Clone>(items: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| items[i].clone()).collect()
}

/// Runs `pipeline(train_x, train_y, test_x) -> test predictions` on every
/// fold. The pipeline sees only the training portion when fitting.
pub fn cross_validate<P>(x: &[Vec<f64>], y: &[i32], plan: &FoldPlan, mut pipeline: P) -> Result<CvResult, LearnError>
where
    P: FnMut(&[Vec<f64>], &[i32], &[Vec<f64>]) -> Result<Vec<i32>, LearnError>,
{
    if x.len() != y.len() || plan.assignments.len() != x.len() {
        return Err(LearnError::DimensionMismatch { expected: x.len(), got: y.len().min(plan.assignments.len()) });
    }
    let mut fold_accuracies = Vec::with_capacity(plan.k);
    for fold in 0..plan.k {
        let (tr, te) = (plan.train_indices(fold), plan.test_indices(fold));
        let test_y = gather(y, &te);
        let predicted = pipeline(&gather(x, &tr), &gather(y, &tr), &gather(x, &te))?;
        let correct = predicted.iter().zip(&test_y).filter(|(a, b)| a == b).count();
        fold_accuracies.push(correct as f64 / te.len() as f64);
    }
    let mean_accuracy = fold_accuracies.iter().sum::<f64>() / plan.k as f64;
    Ok(CvResult { mean_accuracy, fold_accuracies })
}

/// Scale on the training rows, train a binary SVM, predict the test rows.
pub fn scaled_svm_predict(train_x: &[Vec<f64>], train_y: &[i32], test_x: &[Vec<f64>], params: &SvmParams) -> Result<Vec<i32>, LearnError> {
    let scaler = fit_scaler(train_x)?;
    let model = svm_train(&scaler.apply(train_x)?, train_y, params)?;
    test_x.iter().map(|r| Ok(model.predict(&scaler.apply_row(r)?)?.0)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub c: f64,
    pub gamma: f64,
    pub accuracy: f64,
}

/// Picks `C` and RBF `gamma` from the fixed grid by inner 3-fold accuracy.
/// Ties keep the earliest grid point (smaller `C`, then smaller `gamma`).
pub fn grid_search(x: &[Vec<f64>], y: &[i32], seed: u64) -> Result<GridPoint, LearnError> {
    let plan = kfold_split(x.len(), 3, seed)?;
    let mut best: Option<GridPoint> = None;
    for c in GRID_C {
        for e in GRID_LOG2_GAMMA {
            let gamma = 2f64.powi(e);
            let params = SvmParams::new(Kernel::Rbf { gamma }, c);
            let acc = cross_validate(x, y, &plan, |a, b, t| scaled_svm_predict(a, b, t, &params))?.mean_accuracy;
            if best.is_none_or(|b| acc > b.accuracy) {
                best = Some(GridPoint { c, gamma, accuracy: acc });
            }
        }
    }
    Ok(best.expect("grid is non-empty"))
}
