//! Model bundles: a directory holding `model.json` and a `checksums.sha256`
//! file in `sha256sum` format.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::model::TrainedModel;
use super::PipelineError;

pub const BUNDLE_VERSION: u32 = 1;
const MODEL_FILE: &str = "model.json";
const CHECKSUM_FILE: &str = "checksums.sha256";

#[derive(Serialize, Deserialize)]
struct Envelope {
    format_version: u32,
    model: TrainedModel,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn save_bundle(dir: &Path, model: &TrainedModel) -> Result<(), PipelineError> {
    std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    let json = serde_json::to_vec_pretty(&Envelope { format_version: BUNDLE_VERSION, model: model.clone() })?;
    let model_path = dir.join(MODEL_FILE);
    std::fs::write(&model_path, &json).map_err(|e| PipelineError::io(&model_path, e))?;
    let sums = format!("{}  {MODEL_FILE}\n", sha256_hex(&json));
    let sum_path = dir.join(CHECKSUM_FILE);
    std::fs::write(&sum_path, sums).map_err(|e| PipelineError::io(&sum_path, e))
}

pub fn load_bundle(dir: &Path) -> Result<TrainedModel, PipelineError> {
    let sum_path = dir.join(CHECKSUM_FILE);
    let sums = std::fs::read_to_string(&sum_path).map_err(|e| PipelineError::io(&sum_path, e))?;
    for line in sums.lines().filter(|l| !l.trim().is_empty()) {
        let (digest, name) = line.split_once("  ").ok_or_else(|| PipelineError::ChecksumMismatch { file: line.to_string() })?;
        let path = dir.join(name);
        let bytes = std::fs::read(&path).map_err(|e| PipelineError::io(&path, e))?;
        if sha256_hex(&bytes) != digest {
            return Err(PipelineError::ChecksumMismatch { file: name.to_string() });
        }
    }
    if !sums.lines().any(|l| l.ends_with(&format!("  {MODEL_FILE}"))) {
        return Err(PipelineError::ChecksumMismatch { file: MODEL_FILE.to_string() });
    }
    let model_path = dir.join(MODEL_FILE);
    let bytes = std::fs::read(&model_path).map_err(|e| PipelineError::io(&model_path, e))?;
    let version: serde_json::Value = serde_json::from_slice(&bytes)?;
    match version.get("format_version").and_then(|v| v.as_u64()) {
        Some(v) if v == u64::from(BUNDLE_VERSION) => {}
        Some(v) => return Err(PipelineError::UnsupportedBundleVersion(v as u32)),
        None => return Err(PipelineError::UnsupportedBundleVersion(0)),
    }
    Ok(serde_json::from_slice::<Envelope>(&bytes)?.model)
}
