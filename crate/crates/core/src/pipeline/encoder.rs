//! Encoder identification from the global gain distribution.
//!
//! The four encoder features are the mean, population standard deviation,
//! mode (smallest value on ties) and lag-1 autocorrelation of `g`. The
//! autocorrelation is reported as 0 when the series has no variance.

use serde::{Deserialize, Serialize};

use crate::bitstream::FieldSeries;
use crate::features::FeatureError;
use crate::learn::{fit_scaler, Kernel, OneVsOne, ScaleParams, SvmParams};

use super::PipelineError;

pub const ENCODER_FEATURE_NAMES: [&str; 4] = ["enc.gg_mean", "enc.gg_std", "enc.gg_mode", "enc.gg_lag1_autocorr"];

pub fn encoder_features(series: &FieldSeries) -> Result<[f64; 4], FeatureError> {
    let g = &series.gain;
    if g.len() < 2 {
        return Err(if g.is_empty() { FeatureError::EmptyStream } else { FeatureError::TooFewFrames { need: 2, got: g.len() } });
    }
    let n = g.len() as f64;
    let mean = g.iter().map(|&v| f64::from(v)).sum::<f64>() / n;
    let centred: Vec<f64> = g.iter().map(|&v| f64::from(v) - mean).collect();
    let ss: f64 = centred.iter().map(|d| d * d).sum();
    let std = (ss / n).sqrt();
    let mut counts = [0usize; 256];
    for &v in g {
        counts[(v as usize).min(255)] += 1;
    }
    let mode = (0..256).fold(0, |best, v| if counts[v] > counts[best] { v } else { best }) as f64;
    let autocorr = if ss > 0.0 { centred.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / ss } else { 0.0 };
    Ok([mean, std, mode, autocorr])
}

/// Layer-1 classifier: scaled encoder features into a one-vs-one linear SVM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderClassifier {
    /// Encoder names; class `i` of the ensemble is `labels[i]`.
    pub labels: Vec<String>,
    pub scaler: ScaleParams,
    pub ensemble: OneVsOne,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderGuess {
    pub encoder: String,
    pub vote_margin: usize,
}

impl EncoderClassifier {
    pub fn train(series: &[&FieldSeries], encoders: &[String], c: f64) -> Result<Self, PipelineError> {
        let mut labels: Vec<String> = encoders.to_vec();
        labels.sort();
        labels.dedup();
        let rows = series.iter().map(|s| Ok(encoder_features(s)?.to_vec())).collect::<Result<Vec<_>, FeatureError>>()?;
        let y: Vec<i32> = encoders.iter().map(|e| labels.iter().position(|l| l == e).expect("label present") as i32).collect();
        let scaler = fit_scaler(&rows)?;
        let ensemble = OneVsOne::train(&scaler.apply(&rows)?, &y, &SvmParams::new(Kernel::Linear, c))?;
        Ok(Self { labels, scaler, ensemble })
    }

    pub fn predict(&self, series: &FieldSeries) -> Result<EncoderGuess, PipelineError> {
        let row = self.scaler.apply_row(&encoder_features(series)?)?;
        let p = self.ensemble.predict(&row)?;
        Ok(EncoderGuess { encoder: self.labels[p.label as usize].clone(), vote_margin: p.vote_margin })
    }
}
