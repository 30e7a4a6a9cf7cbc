//! Single-layer and layered stego detectors.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::bitstream::{ChannelPolicy, FieldSeries};
use crate::features::{
    extract_features, feature_names, select_bins_method2, BinSpec, CalibrationSpec, ClassLabel, FeatureSetKind, DEFAULT_SELECTION_THRESHOLD,
};
use crate::learn::ga::cv_fitness;
use crate::learn::{apply_mask, fit_scaler, ga_select, grid_search, svm_train, GaConfig, Kernel, ScaleParams, SvmModel, SvmParams};

use super::encoder::{encoder_features, EncoderClassifier, ENCODER_FEATURE_NAMES};
use super::{Dataset, PipelineError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainBinMethod {
    /// 30 equal-width bins between each sequence's extremes.
    EqualWidth,
    /// Per-value bins selected on training covers and stegos.
    PerValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub kind: FeatureSetKind,
    pub calibration: CalibrationSpec,
    pub channels: ChannelPolicy,
    pub bins: GainBinMethod,
    pub selection_threshold: f64,
    pub merge_unselected: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            kind: FeatureSetKind::Extended,
            calibration: CalibrationSpec::default(),
            channels: ChannelPolicy::First,
            bins: GainBinMethod::PerValue,
            selection_threshold: DEFAULT_SELECTION_THRESHOLD,
            merge_unselected: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub features: FeatureConfig,
    /// Detector regularisation.
    pub c: f64,
    /// RBF width; `None` means `1 / feature count`.
    pub gamma: Option<f64>,
    /// Replace `c` and `gamma` by the inner 3-fold grid search optimum.
    pub grid_search: bool,
    pub ga: Option<GaConfig>,
    /// Layer-1 regularisation.
    pub encoder_c: f64,
    pub seed: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self { features: FeatureConfig::default(), c: 10.0, gamma: None, grid_search: false, ga: None, encoder_c: 10.0, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    /// One pooled detector.
    Single,
    /// One pooled detector with encoder features appended.
    SingleEnc,
    /// Encoder classifier followed by per-encoder detectors.
    Multi,
}

impl std::str::FromStr for Architecture {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single" => Ok(Architecture::Single),
            "single+enc" | "single_enc" => Ok(Architecture::SingleEnc),
            "multi" => Ok(Architecture::Multi),
            other => Err(format!("unknown architecture {other:?} (expected single, single+enc or multi)")),
        }
    }
}

/// Bin spec, optional mask, scaler and RBF SVM for one population of files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detector {
    pub bin_spec: BinSpec,
    pub augment_encoder: bool,
    pub feature_names: Vec<String>,
    pub mask: Option<Vec<bool>>,
    pub scaler: ScaleParams,
    pub svm: SvmModel,
}

fn full_row(series: &FieldSeries, spec: &BinSpec, cfg: &FeatureConfig, augment: bool) -> Result<Vec<f64>, PipelineError> {
    let mut row = extract_features(series, spec, &cfg.calibration, cfg.kind)?.values;
    if augment {
        row.extend(encoder_features(series)?);
    }
    Ok(row)
}

fn class_index(c: ClassLabel) -> i32 {
    i32::from(c.is_stego())
}

impl Detector {
    /// Unmasked, unscaled feature row of `series`.
    pub fn raw_row(&self, series: &FieldSeries, cfg: &FeatureConfig) -> Result<Vec<f64>, PipelineError> {
        full_row(series, &self.bin_spec, cfg, self.augment_encoder)
    }

    /// Predicted class and decision value (positive means stego).
    pub fn score_row(&self, raw: &[f64]) -> Result<(ClassLabel, f64), PipelineError> {
        let row = match &self.mask {
            Some(m) => apply_mask(raw, m),
            None => raw.to_vec(),
        };
        let (label, d) = self.svm.predict(&self.scaler.apply_row(&row)?)?;
        Ok((ClassLabel::from_stego(label == 1), d))
    }

    pub fn score(&self, series: &FieldSeries, cfg: &FeatureConfig) -> Result<(ClassLabel, f64), PipelineError> {
        self.score_row(&self.raw_row(series, cfg)?)
    }

    /// Width of the unmasked feature row.
    pub fn width(&self) -> usize {
        self.feature_names.len()
    }
}

/// Fits the gain bin spec on training data.
pub fn fit_bin_spec(data: &Dataset, cfg: &FeatureConfig) -> Result<BinSpec, PipelineError> {
    match cfg.bins {
        GainBinMethod::EqualWidth => Ok(BinSpec::equal_width()),
        GainBinMethod::PerValue => {
            let pick = |stego: bool| -> Vec<&[u32]> {
                data.entries.iter().zip(&data.series).filter(|(e, _)| e.class_label.is_stego() == stego).map(|(_, s)| &s.gain[..]).collect()
            };
            let values = select_bins_method2(&pick(false), &pick(true), cfg.selection_threshold)?;
            let mut spec = BinSpec::per_value(values);
            if let crate::features::GainBins::PerValue { merge_unselected, .. } = &mut spec.gain {
                *merge_unselected = cfg.merge_unselected;
            }
            Ok(spec)
        }
    }
}

fn require_both_classes(data: &Dataset, encoder: &str) -> Result<(), PipelineError> {
    for class in [ClassLabel::Cover, ClassLabel::Stego] {
        if !data.entries.iter().any(|e| e.class_label == class) {
            return Err(PipelineError::MissingEncoderClass { encoder: encoder.to_string(), class });
        }
    }
    Ok(())
}

/// Trains a detector on `data` with the given bin spec.
pub fn train_detector(data: &Dataset, bin_spec: BinSpec, augment: bool, opts: &TrainOptions) -> Result<Detector, PipelineError> {
    let cfg = &opts.features;
    let rows = data.series.iter().map(|s| full_row(s, &bin_spec, cfg, augment)).collect::<Result<Vec<_>, _>>()?;
    let y: Vec<i32> = data.entries.iter().map(|e| class_index(e.class_label)).collect();
    let mut feature_names = feature_names(cfg.kind);
    if augment {
        feature_names.extend(ENCODER_FEATURE_NAMES.iter().map(|s| s.to_string()));
    }
    let base = SvmParams::new(Kernel::rbf_default(feature_names.len()), opts.c);
    let mask = match &opts.ga {
        Some(ga) => Some(ga_select(feature_names.len(), ga, cv_fitness(&rows, &y, base, opts.seed))?.best_mask),
        None => None,
    };
    let rows: Vec<Vec<f64>> = match &mask {
        Some(m) => rows.iter().map(|r| apply_mask(r, m)).collect(),
        None => rows,
    };
    let dim = rows.first().map_or(0, Vec::len);
    let params = if opts.grid_search {
        let best = grid_search(&rows, &y, opts.seed)?;
        SvmParams::new(Kernel::Rbf { gamma: best.gamma }, best.c)
    } else {
        SvmParams::new(Kernel::Rbf { gamma: opts.gamma.unwrap_or(1.0 / dim.max(1) as f64) }, opts.c)
    };
    let scaler = fit_scaler(&rows)?;
    let svm = svm_train(&scaler.apply(&rows)?, &y, &params)?;
    Ok(Detector { bin_spec, augment_encoder: augment, feature_names, mask, scaler, svm })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayeredModel {
    /// Absent when training saw a single encoder; every file then goes to it.
    pub encoder_classifier: Option<EncoderClassifier>,
    pub per_encoder: BTreeMap<String, Detector>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "layout")]
pub enum ModelKind {
    Single { detector: Detector },
    Multi(LayeredModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub architecture: Architecture,
    pub options: TrainOptions,
    /// Encoder labels seen in training.
    pub encoders: Vec<String>,
    pub training_ids: BTreeSet<String>,
    pub kind: ModelKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class: ClassLabel,
    pub decision: f64,
    /// Encoder whose detector scored the file (layered models).
    pub routed_encoder: Option<String>,
    pub vote_margin: Option<usize>,
}

fn training_meta(data: &Dataset) -> (Vec<String>, BTreeSet<String>) {
    let encoders = data.entries.iter().map(|e| e.encoder_label.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    (encoders, data.entries.iter().map(|e| e.file_id.clone()).collect())
}

/// Pooled detector over all encoders. Per-value bins are selected per
/// encoder and united.
pub fn build_single_layer(data: &Dataset, augment_encoder: bool, opts: &TrainOptions) -> Result<TrainedModel, PipelineError> {
    let (encoders, training_ids) = training_meta(data);
    require_both_classes(data, "all")?;
    let bin_spec = match opts.features.bins {
        GainBinMethod::EqualWidth => BinSpec::equal_width(),
        GainBinMethod::PerValue => {
            let specs = encoders
                .iter()
                .map(|enc| {
                    let part = data.filter(|e| &e.encoder_label == enc);
                    require_both_classes(&part, enc)?;
                    fit_bin_spec(&part, &opts.features)
                })
                .collect::<Result<Vec<_>, PipelineError>>()?;
            BinSpec::union(&specs).expect("per-value specs are non-empty")
        }
    };
    let detector = train_detector(data, bin_spec, augment_encoder, opts)?;
    let architecture = if augment_encoder { Architecture::SingleEnc } else { Architecture::Single };
    Ok(TrainedModel { architecture, options: *opts, encoders, training_ids, kind: ModelKind::Single { detector } })
}

/// Encoder classifier plus one detector per training encoder.
pub fn build_multi_layer(data: &Dataset, opts: &TrainOptions) -> Result<TrainedModel, PipelineError> {
    let (encoders, training_ids) = training_meta(data);
    let mut per_encoder = BTreeMap::new();
    for enc in &encoders {
        let part = data.filter(|e| &e.encoder_label == enc);
        require_both_classes(&part, enc)?;
        let spec = fit_bin_spec(&part, &opts.features)?;
        per_encoder.insert(enc.clone(), train_detector(&part, spec, false, opts)?);
    }
    let encoder_classifier = if encoders.len() >= 2 {
        let refs: Vec<&FieldSeries> = data.series.iter().collect();
        let labels: Vec<String> = data.entries.iter().map(|e| e.encoder_label.clone()).collect();
        Some(EncoderClassifier::train(&refs, &labels, opts.encoder_c)?)
    } else {
        None
    };
    let layered = LayeredModel { encoder_classifier, per_encoder };
    Ok(TrainedModel { architecture: Architecture::Multi, options: *opts, encoders, training_ids, kind: ModelKind::Multi(layered) })
}

pub fn train(data: &Dataset, architecture: Architecture, opts: &TrainOptions) -> Result<TrainedModel, PipelineError> {
    if data.is_empty() {
        return Err(PipelineError::InvalidManifest("training set is empty".into()));
    }
    match architecture {
        Architecture::Single => build_single_layer(data, false, opts),
        Architecture::SingleEnc => build_single_layer(data, true, opts),
        Architecture::Multi => build_multi_layer(data, opts),
    }
}

impl TrainedModel {
    /// Scores one file. `oracle_encoder` bypasses layer 1 and routes the
    /// file to that encoder's detector.
    pub fn predict(&self, series: &FieldSeries, oracle_encoder: Option<&str>) -> Result<Prediction, PipelineError> {
        let cfg = &self.options.features;
        match &self.kind {
            ModelKind::Single { detector } => {
                let (class, decision) = detector.score(series, cfg)?;
                Ok(Prediction { class, decision, routed_encoder: None, vote_margin: None })
            }
            ModelKind::Multi(layered) => {
                let (encoder, margin) = match oracle_encoder {
                    Some(e) => (e.to_string(), None),
                    None => match &layered.encoder_classifier {
                        Some(c) => {
                            let guess = c.predict(series)?;
                            (guess.encoder, Some(guess.vote_margin))
                        }
                        None => (self.encoders[0].clone(), None),
                    },
                };
                let detector = layered
                    .per_encoder
                    .get(&encoder)
                    .ok_or_else(|| PipelineError::InvalidManifest(format!("model has no detector for encoder {encoder}")))?;
                let (class, decision) = detector.score(series, cfg)?;
                Ok(Prediction { class, decision, routed_encoder: Some(encoder), vote_margin: margin })
            }
        }
    }

    /// Width of the detector input before masking (single-layer models).
    pub fn feature_width(&self) -> Option<usize> {
        match &self.kind {
            ModelKind::Single { detector } => Some(detector.width()),
            ModelKind::Multi(_) => None,
        }
    }
}
