//! Soft-margin binary SVM trained by sequential minimal optimization.
//!
//! The solver minimises `f(a) = 1/2 a'Qa - e'a` subject to `0 <= a_i <= C`
//! and `y'a = 0`, with `Q_ij = y_i y_j K(x_i, x_j)`. Working pairs use the
//! maximal-violating first index and second-order gain for the second
//! index; iteration stops once the KKT violation `m(a) - M(a)` falls below
//! the tolerance. Index ties go to the lowest index, so training is fully
//! deterministic.

use serde::{Deserialize, Serialize};

use super::LearnError;

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }

    /// RBF with `gamma = 1 / dim`.
    pub fn rbf_default(dim: usize) -> Self {
        Kernel::Rbf { gamma: 1.0 / dim.max(1) as f64 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub kernel: Kernel,
    pub c: f64,
    /// KKT violation tolerance.
    pub tolerance: f64,
}

impl SvmParams {
    pub fn new(kernel: Kernel, c: f64) -> Self {
        Self { kernel, c, tolerance: 1e-3 }
    }
}

/// Solver diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SmoReport {
    pub iterations: usize,
    /// `m(a) - M(a)` at termination.
    pub kkt_gap: f64,
    pub converged: bool,
    /// Dual objective `e'a - 1/2 a'Qa` after every iteration, when traced.
    pub objective_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: Kernel,
    pub c: f64,
    pub support_vectors: Vec<Vec<f64>>,
    /// `y_i * alpha_i` for each support vector.
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    /// `[negative, positive]` class labels; the larger label is positive.
    pub labels: [i32; 2],
}

struct QMatrix<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    kernel: Kernel,
    rows: Vec<Option<Vec<f64>>>,
}

impl QMatrix<'_> {
    fn row(&mut self, i: usize) -> &[f64] {
        if self.rows[i].is_none() {
            let xi = &self.x[i];
            let yi = self.y[i];
            let row = self.x.iter().zip(self.y).map(|(xj, &yj)| yi * yj * self.kernel.eval(xi, xj)).collect();
            self.rows[i] = Some(row);
        }
        self.rows[i].as_deref().expect("row filled above")
    }
}

fn validate(x: &[Vec<f64>], y: &[i32]) -> Result<[i32; 2], LearnError> {
    if x.len() != y.len() {
        return Err(LearnError::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    let d = x.first().ok_or(LearnError::EmptyMatrix)?.len();
    for row in x {
        if row.len() != d {
            return Err(LearnError::DimensionMismatch { expected: d, got: row.len() });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(LearnError::NonFiniteFeature);
        }
    }
    let lo = *y.iter().min().expect("non-empty");
    let hi = *y.iter().max().expect("non-empty");
    if lo == hi {
        return Err(LearnError::SingleClass);
    }
    if let Some(&other) = y.iter().find(|&&v| v != lo && v != hi) {
        return Err(LearnError::NotBinary { label: other });
    }
    Ok([lo, hi])
}

/// Trains a binary SVM. `y` must contain exactly two distinct labels.
pub fn svm_train(x: &[Vec<f64>], y: &[i32], params: &SvmParams) -> Result<SvmModel, LearnError> {
    svm_train_with_report(x, y, params, false).map(|(m, _)| m)
}

pub fn svm_train_with_report(x: &[Vec<f64>], y: &[i32], params: &SvmParams, trace: bool) -> Result<(SvmModel, SmoReport), LearnError> {
    let labels = validate(x, y)?;
    if !(params.c > 0.0) {
        return Err(LearnError::InvalidParameter(format!("C must be positive, got {}", params.c)));
    }
    if let Kernel::Rbf { gamma } = params.kernel {
        if !(gamma > 0.0) {
            return Err(LearnError::InvalidParameter(format!("gamma must be positive, got {gamma}")));
        }
    }
    let n = x.len();
    let c = params.c;
    let ys: Vec<f64> = y.iter().map(|&v| if v == labels[1] { 1.0 } else { -1.0 }).collect();
    let qd: Vec<f64> = x.iter().map(|xi| params.kernel.eval(xi, xi)).collect();
    let mut q = QMatrix { x, y: &ys, kernel: params.kernel, rows: vec![None; n] };
    let mut alpha = vec![0.0f64; n];
    let mut grad = vec![-1.0f64; n];
    let mut report = SmoReport::default();
    let max_iter = (100 * n).max(10_000_000);

    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;

    loop {
        // first index: maximal violator in I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            let in_up = if ys[t] > 0.0 { !upper(alpha[t]) } else { !lower(alpha[t]) };
            if in_up && -ys[t] * grad[t] > gmax {
                gmax = -ys[t] * grad[t];
                i_sel = Some(t);
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        if let Some(i) = i_sel {
            let qi = q.row(i).to_vec();
            let mut best = f64::INFINITY;
            for t in 0..n {
                let in_low = if ys[t] > 0.0 { !lower(alpha[t]) } else { !upper(alpha[t]) };
                if !in_low {
                    continue;
                }
                let yg = ys[t] * grad[t];
                if yg > gmax2 {
                    gmax2 = yg;
                }
                let grad_diff = gmax + yg;
                if grad_diff > 0.0 {
                    let quad = qd[i] + qd[t] - 2.0 * ys[i] * qi[t];
                    let quad = if quad > 0.0 { quad } else { TAU };
                    let obj = -(grad_diff * grad_diff) / quad;
                    if obj < best {
                        best = obj;
                        j_sel = Some(t);
                    }
                }
            }
        }
        report.kkt_gap = (gmax + gmax2).max(0.0);
        let (i, j) = match (i_sel, j_sel) {
            (Some(i), Some(j)) if gmax + gmax2 >= params.tolerance => (i, j),
            _ => {
                report.converged = true;
                break;
            }
        };
        if report.iterations >= max_iter {
            log::warn!("SMO stopped after {max_iter} iterations with KKT gap {}", report.kkt_gap);
            break;
        }
        report.iterations += 1;

        let qi = q.row(i).to_vec();
        let qj = q.row(j).to_vec();
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (mut ai, mut aj) = (old_i, old_j);
        if ys[i] != ys[j] {
            let quad = qd[i] + qd[j] + 2.0 * qi[j];
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let quad = qd[i] + qd[j] - 2.0 * qi[j];
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;
        let (di, dj) = (ai - old_i, aj - old_j);
        for k in 0..n {
            grad[k] += qi[k] * di + qj[k] * dj;
        }
        if trace {
            let f: f64 = alpha.iter().zip(&grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>() * 0.5;
            report.objective_trace.push(-f);
        }
    }

    // bias from free vectors, or the midpoint of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum_free) = (0usize, 0.0);
    for t in 0..n {
        let yg = ys[t] * grad[t];
        if upper(alpha[t]) {
            if ys[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if lower(alpha[t]) {
            if ys[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    let rho = if free > 0 { sum_free / free as f64 } else { (ub + lb) / 2.0 };

    let mut support_vectors = Vec::new();
    let mut dual_coefs = Vec::new();
    for t in 0..n {
        if alpha[t] > 0.0 {
            support_vectors.push(x[t].clone());
            dual_coefs.push(ys[t] * alpha[t]);
        }
    }
    Ok((SvmModel { kernel: params.kernel, c, support_vectors, dual_coefs, bias: -rho, labels }, report))
}

impl SvmModel {
    pub fn dim(&self) -> usize {
        self.support_vectors.first().map_or(0, Vec::len)
    }

    /// `sum coef_i K(sv_i, row) + bias`; positive means `labels[1]`.
    pub fn decision(&self, row: &[f64]) -> Result<f64, LearnError> {
        if !self.support_vectors.is_empty() && row.len() != self.dim() {
            return Err(LearnError::DimensionMismatch { expected: self.dim(), got: row.len() });
        }
        Ok(self.support_vectors.iter().zip(&self.dual_coefs).map(|(sv, c)| c * self.kernel.eval(sv, row)).sum::<f64>() + self.bias)
    }

    /// Predicted label and decision value.
    pub fn predict(&self, row: &[f64]) -> Result<(i32, f64), LearnError> {
        let d = self.decision(row)?;
        Ok((if d > 0.0 { self.labels[1] } else { self.labels[0] }, d))
    }
}
