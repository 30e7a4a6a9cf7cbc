//! Evaluation reports, ROC analysis and capacity sweeps.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::features::ClassLabel;
use crate::learn::{kfold_split, CvResult};

use super::model::{train, Architecture, TrainOptions, TrainedModel};
use super::{Dataset, PipelineError};

/// Capacity fractions of the standard corpus construction.
pub const STANDARD_FRACTIONS: [f64; 5] = [1.0, 0.75, 0.5, 0.25, 0.125];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(false positive rate, true positive rate)` from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// Sweeps a threshold down through the distinct scores; higher scores mean
/// positive. Tied scores enter together, so ties give diagonal segments.
/// The area is accumulated in integers and divided once.
pub fn roc_curve(scores: &[f64], positive: &[bool]) -> Result<RocCurve, PipelineError> {
    if scores.len() != positive.len() {
        return Err(PipelineError::InvalidManifest(format!("{} scores for {} labels", scores.len(), positive.len())));
    }
    let p = positive.iter().filter(|&&b| b).count() as u128;
    let n = positive.len() as u128 - p;
    if p == 0 || n == 0 {
        return Err(PipelineError::SingleClassLabels);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0u128, 0u128);
    let mut twice_area = 0u128;
    let mut i = 0;
    while i < order.len() {
        let (tp0, fp0) = (tp, fp);
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]].total_cmp(&s).is_eq() {
            if positive[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        twice_area += (fp - fp0) * (tp + tp0);
        points.push((fp as f64 / n as f64, tp as f64 / p as f64));
    }
    Ok(RocCurve { points, auc: twice_area as f64 / (2 * p * n) as f64 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilePrediction {
    pub file_id: String,
    pub encoder_label: String,
    pub truth: ClassLabel,
    pub predicted: ClassLabel,
    pub decision: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub routed_encoder: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderBreakdown {
    pub files: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    /// Rows are the true class, columns the prediction, cover first.
    pub confusion: [[usize; 2]; 2],
    pub per_encoder: BTreeMap<String, EncoderBreakdown>,
    /// Share of files routed to their own encoder (layered models).
    pub layer1_accuracy: Option<f64>,
    pub roc_points: Vec<(f64, f64)>,
    /// Absent when the test set holds a single class.
    pub auc: Option<f64>,
    /// Files whose encoder was unseen in training or whose layer-1 vote
    /// was tied.
    pub low_margin_files: Vec<String>,
    pub predictions: Vec<FilePrediction>,
}

/// Evaluates `model` on `test`. With `oracle_routing`, layered models use
/// the true encoder labels instead of layer 1.
pub fn evaluate(model: &TrainedModel, test: &Dataset, oracle_routing: bool) -> Result<EvalReport, PipelineError> {
    if test.is_empty() {
        return Err(PipelineError::EmptyTestSet);
    }
    let overlap: Vec<&String> = test.entries.iter().map(|e| &e.file_id).filter(|id| model.training_ids.contains(*id)).collect();
    if let Some(first) = overlap.first() {
        return Err(PipelineError::TrainTestOverlap { count: overlap.len(), example: (*first).clone() });
    }
    let known: BTreeSet<&String> = model.encoders.iter().collect();
    let mut predictions = Vec::with_capacity(test.len());
    let mut low_margin_files = Vec::new();
    for (entry, series) in test.entries.iter().zip(&test.series) {
        let oracle = (oracle_routing && model.architecture == Architecture::Multi).then_some(entry.encoder_label.as_str());
        let p = model.predict(series, oracle)?;
        if !known.contains(&entry.encoder_label) || p.vote_margin == Some(0) {
            low_margin_files.push(entry.file_id.clone());
        }
        predictions.push(FilePrediction {
            file_id: entry.file_id.clone(),
            encoder_label: entry.encoder_label.clone(),
            truth: entry.class_label,
            predicted: p.class,
            decision: p.decision,
            routed_encoder: p.routed_encoder,
        });
    }
    let mut confusion = [[0usize; 2]; 2];
    for p in &predictions {
        confusion[usize::from(p.truth.is_stego())][usize::from(p.predicted.is_stego())] += 1;
    }
    let correct = |ps: &[&FilePrediction]| ps.iter().filter(|p| p.truth == p.predicted).count() as f64 / ps.len() as f64;
    let all: Vec<&FilePrediction> = predictions.iter().collect();
    let mut per_encoder = BTreeMap::new();
    for enc in test.entries.iter().map(|e| &e.encoder_label).collect::<BTreeSet<_>>() {
        let ps: Vec<&FilePrediction> = predictions.iter().filter(|p| &p.encoder_label == enc).collect();
        per_encoder.insert(enc.clone(), EncoderBreakdown { files: ps.len(), accuracy: correct(&ps) });
    }
    let routed: Vec<&FilePrediction> = predictions.iter().filter(|p| p.routed_encoder.is_some()).collect();
    let layer1_accuracy = (!routed.is_empty())
        .then(|| routed.iter().filter(|p| p.routed_encoder.as_ref() == Some(&p.encoder_label)).count() as f64 / routed.len() as f64);
    let scores: Vec<f64> = predictions.iter().map(|p| p.decision).collect();
    let labels: Vec<bool> = predictions.iter().map(|p| p.truth.is_stego()).collect();
    let (roc_points, auc) = match roc_curve(&scores, &labels) {
        Ok(r) => (r.points, Some(r.auc)),
        Err(PipelineError::SingleClassLabels) => (Vec::new(), None),
        Err(e) => return Err(e),
    };
    Ok(EvalReport { accuracy: correct(&all), confusion, per_encoder, layer1_accuracy, roc_points, auc, low_margin_files, predictions })
}

impl EvalReport {
    /// `fpr,tpr` lines with a header.
    pub fn roc_csv(&self) -> String {
        let mut out = String::from("fpr,tpr\n");
        for (x, y) in &self.roc_points {
            out.push_str(&format!("{x},{y}\n"));
        }
        out
    }

    /// `encoder,files,accuracy` lines with a header.
    pub fn per_encoder_csv(&self) -> String {
        let mut out = String::from("encoder,files,accuracy\n");
        for (enc, b) in &self.per_encoder {
            out.push_str(&format!("{enc},{},{}\n", b.files, b.accuracy));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub fraction: f64,
    pub accuracy: f64,
    pub auc: Option<f64>,
}

/// Runs `run(fraction)` for each fraction; `run` builds, trains and
/// evaluates at that embedding capacity.
pub fn capacity_sweep<F>(fractions: &[f64], mut run: F) -> Result<Vec<SweepRow>, PipelineError>
where
    F: FnMut(f64) -> Result<EvalReport, PipelineError>,
{
    fractions
        .iter()
        .map(|&fraction| {
            let r = run(fraction)?;
            Ok(SweepRow { fraction, accuracy: r.accuracy, auc: r.auc })
        })
        .collect()
}

/// k-fold accuracy of an architecture. Folds are drawn over cover groups so
/// a cover and its stego copies never straddle train and test.
pub fn cross_validate_model(data: &Dataset, architecture: Architecture, opts: &TrainOptions, k: usize, seed: u64) -> Result<CvResult, PipelineError> {
    let groups: Vec<String> = data.entries.iter().map(|e| e.group()).collect::<BTreeSet<_>>().into_iter().collect();
    let plan = kfold_split(groups.len(), k, seed)?;
    let fold_of: BTreeMap<&String, usize> = groups.iter().zip(&plan.assignments).map(|(g, &f)| (g, f)).collect();
    let mut fold_accuracies = Vec::with_capacity(k);
    for fold in 0..k {
        let (test_idx, train_idx): (Vec<usize>, Vec<usize>) = (0..data.len()).partition(|&i| fold_of[&data.entries[i].group()] == fold);
        let model = train(&data.select(&train_idx), architecture, opts)?;
        fold_accuracies.push(evaluate(&model, &data.select(&test_idx), false)?.accuracy);
    }
    let mean_accuracy = fold_accuracies.iter().sum::<f64>() / k as f64;
    Ok(CvResult { mean_accuracy, fold_accuracies })
}
