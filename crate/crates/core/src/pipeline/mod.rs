//! Corpora, detector training and evaluation.
//!
//! A single-layer detector pools every encoder behind one bin spec (the
//! union of per-encoder selections), one scaler and one RBF SVM, optionally
//! with the four encoder features appended. The layered model first guesses
//! the encoder with a one-vs-one linear SVM on encoder features and then
//! hands the file to that encoder's own detector. A misrouted file is still
//! scored by the predicted encoder's detector.

pub mod bundle;
pub mod corpus;
pub mod encoder;
pub mod eval;
pub mod model;
pub mod profile;

use std::path::Path;

use crate::bitstream::{BitstreamError, ChannelPolicy, FieldSeries};
use crate::features::{FeatureError, ClassLabel};
use crate::learn::LearnError;
use crate::stego::StegoError;

pub use bundle::{load_bundle, save_bundle, BUNDLE_VERSION};
pub use corpus::{gen_synthetic_corpus, gen_synthetic_manifest, Corpus, CorpusRequest, DatasetManifest, ManifestEntry, Source};
pub use encoder::{encoder_features, EncoderClassifier, ENCODER_FEATURE_NAMES};
pub use eval::{capacity_sweep, cross_validate_model, evaluate, roc_curve, EvalReport, RocCurve, SweepRow, STANDARD_FRACTIONS};
pub use model::{build_multi_layer, build_single_layer, train, Architecture, Detector, FeatureConfig, LayeredModel, Prediction, TrainOptions, TrainedModel};
pub use profile::{synthesize_stream, EncoderProfile, PartLengthModel, StreamFormat};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("invalid manifest: {0}")]
    InvalidManifest(String),
    #[error("encoder {encoder} has no {class} files in the training set")]
    MissingEncoderClass { encoder: String, class: ClassLabel },
    #[error("test set is empty")]
    EmptyTestSet,
    #[error("{count} test files were used in training, e.g. {example}")]
    TrainTestOverlap { count: usize, example: String },
    #[error("ROC needs both classes among the labels")]
    SingleClassLabels,
    #[error("bundle file {file} fails its checksum")]
    ChecksumMismatch { file: String },
    #[error("unsupported bundle version {0}")]
    UnsupportedBundleVersion(u32),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Stego(#[from] StegoError),
    #[error(transparent)]
    Bitstream(#[from] BitstreamError),
}

impl PipelineError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io { path: path.display().to_string(), source }
    }
}

/// Entries with their parsed field series, loaded once.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub entries: Vec<ManifestEntry>,
    pub series: Vec<FieldSeries>,
}

impl Dataset {
    pub fn load(corpus: &Corpus, policy: ChannelPolicy) -> Result<Self, PipelineError> {
        Ok(Self { entries: corpus.entries().to_vec(), series: corpus.series(policy)? })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Rows `idx` in order.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self { entries: idx.iter().map(|&i| self.entries[i].clone()).collect(), series: idx.iter().map(|&i| self.series[i].clone()).collect() }
    }

    pub fn filter(&self, keep: impl Fn(&ManifestEntry) -> bool) -> Self {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep(&self.entries[i])).collect();
        self.select(&idx)
    }
}
