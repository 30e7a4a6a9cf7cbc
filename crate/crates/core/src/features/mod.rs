//! Mutual-information steganalysis features.
//!
//! Gain dependencies are measured with plug-in mutual information (nats) on
//! joint histograms. Raw features are the five inter-granule terms plus the
//! three gain-vs-field terms; the calibrated set replaces them with
//! re-embedding difference moments, and the extended set appends the gain
//! extremes.

pub mod bins;
pub mod calibration;
pub mod histogram;
pub mod sets;
pub mod table;

use serde::{Deserialize, Serialize};

use crate::bitstream::{BitstreamError, FieldSeries};
use crate::stego::StegoError;

pub use bins::{select_bins_method2, BinSpec, CompanionBinning, GainBins, DEFAULT_SELECTION_THRESHOLD};
pub use calibration::{calibrate, reembed_series, CalibrationSpec};
pub use histogram::{joint_hist, mutual_info, Binning, JointHistogram};
pub use sets::{feature_set1, feature_set2, feature_set3};
pub use table::{ClassLabel, FeatureRow, FeatureTable};

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("sequence lengths differ ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("histogram holds no samples")]
    EmptyHistogram,
    #[error("stream has no frames")]
    EmptyStream,
    #[error("corpus holds no gain values")]
    EmptyCorpus,
    #[error("no gain value passed the selection threshold")]
    NoBinsSelected,
    #[error("need at least {need} frames, got {got}")]
    TooFewFrames { need: usize, got: usize },
    #[error("feature {name} is not finite ({value})")]
    NonFinite { name: String, value: f64 },
    #[error("invalid feature spec: {0}")]
    InvalidSpec(String),
    #[error("feature table: {0}")]
    Table(String),
    #[error(transparent)]
    Stego(#[from] StegoError),
    #[error(transparent)]
    Bitstream(#[from] BitstreamError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Raw,
    Calibrated,
    Extended,
}

/// Named feature values. Construction rejects NaN and infinities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub names: Vec<String>,
    pub provenance: Provenance,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>, names: Vec<String>, provenance: Provenance) -> Result<Self, FeatureError> {
        if values.len() != names.len() {
            return Err(FeatureError::LengthMismatch { left: values.len(), right: names.len() });
        }
        if let Some((v, n)) = values.iter().zip(&names).find(|(v, _)| !v.is_finite()) {
            return Err(FeatureError::NonFinite { name: n.clone(), value: *v });
        }
        Ok(Self { values, names, provenance })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Concatenates two vectors; the result takes `provenance`.
    pub fn concat(self, other: FeatureVector, provenance: Provenance) -> Result<Self, FeatureError> {
        let mut values = self.values;
        values.extend(other.values);
        let mut names = self.names;
        names.extend(other.names);
        Self::new(values, names, provenance)
    }
}

/// Which feature set a detector consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSetKind {
    /// Sets 1 and 2, uncalibrated (8 values).
    Raw,
    /// Calibrated sets 1 and 2 (16 values).
    Calibrated,
    /// Calibrated sets 1 and 2 plus raw set 3 (20 values).
    #[default]
    Extended,
}

/// Sets 1 and 2 as one raw vector.
pub fn base_features(series: &FieldSeries, spec: &BinSpec) -> Result<FeatureVector, FeatureError> {
    let mut values = feature_set1(series, spec)?.to_vec();
    values.extend(feature_set2(series, spec)?);
    let names = sets::SET1_NAMES.iter().chain(&sets::SET2_NAMES).map(|s| s.to_string()).collect();
    FeatureVector::new(values, names, Provenance::Raw)
}

pub fn set3_features(series: &FieldSeries) -> Result<FeatureVector, FeatureError> {
    FeatureVector::new(feature_set3(series)?.to_vec(), sets::SET3_NAMES.iter().map(|s| s.to_string()).collect(), Provenance::Raw)
}

/// Calibrated sets 1 and 2 followed by raw set 3, with a caller-supplied
/// re-embedder.
pub fn extended_features_with<E>(series: &FieldSeries, spec: &BinSpec, cal: &CalibrationSpec, embedder: E) -> Result<FeatureVector, FeatureError>
where
    E: Fn(&FieldSeries, u64) -> Result<FieldSeries, StegoError>,
{
    let calibrated = calibrate(series, |s| base_features(s, spec), cal, embedder)?;
    calibrated.concat(set3_features(series)?, Provenance::Extended)
}

/// The 20-value extended feature vector.
pub fn extended_features(series: &FieldSeries, spec: &BinSpec, cal: &CalibrationSpec) -> Result<FeatureVector, FeatureError> {
    extended_features_with(series, spec, cal, |s, seed| reembed_series(s, seed, cal.c_r))
}

/// Features of the requested kind.
pub fn extract_features(series: &FieldSeries, spec: &BinSpec, cal: &CalibrationSpec, kind: FeatureSetKind) -> Result<FeatureVector, FeatureError> {
    spec.validate()?;
    match kind {
        FeatureSetKind::Raw => base_features(series, spec),
        FeatureSetKind::Calibrated => calibrate(series, |s| base_features(s, spec), cal, |s, seed| reembed_series(s, seed, cal.c_r)),
        FeatureSetKind::Extended => extended_features(series, spec, cal),
    }
}

/// Feature names produced for `kind`, without computing anything.
pub fn feature_names(kind: FeatureSetKind) -> Vec<String> {
    let base: Vec<&str> = sets::SET1_NAMES.iter().chain(&sets::SET2_NAMES).copied().collect();
    let calibrated = || base.iter().map(|n| format!("{n}.mean")).chain(base.iter().map(|n| format!("{n}.std")));
    match kind {
        FeatureSetKind::Raw => base.iter().map(|s| s.to_string()).collect(),
        FeatureSetKind::Calibrated => calibrated().collect(),
        FeatureSetKind::Extended => calibrated().chain(sets::SET3_NAMES.iter().map(|s| s.to_string())).collect(),
    }
}
