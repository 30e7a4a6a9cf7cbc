//! Dataset manifests and synthetic corpus generation.
//!
//! A manifest lists every file with its encoder, class and embedding
//! parameters. Synthetic entries also carry the seed of their cover stream,
//! so the bytes can be regenerated instead of read from disk.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bitstream::{parse_stream, ChannelPolicy, FieldSeries};
use crate::features::ClassLabel;
use crate::stego::{embed, random_message, EmbedSpec, StegoKey};

use super::profile::{synthesize_stream, EncoderProfile, StreamFormat};
use super::PipelineError;

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file_id: String,
    /// Relative to the manifest's directory.
    pub path: String,
    pub encoder_label: String,
    pub class_label: ClassLabel,
    /// 0 for covers.
    pub capacity_fraction: f64,
    /// Embedding key and message seed; stego entries only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key_seed: Option<u64>,
    /// Seed of the synthetic cover this file derives from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cover_seed: Option<u64>,
}

impl ManifestEntry {
    /// Files sharing a group derive from the same cover and must stay on
    /// the same side of any train/test split.
    pub fn group(&self) -> String {
        match self.cover_seed {
            Some(seed) => format!("{}#{seed}", self.encoder_label),
            None => self.file_id.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusMetadata {
    pub sample_rate: u32,
    pub clip_seconds: f64,
    pub seed: u64,
    #[serde(default)]
    pub format: Option<StreamFormat>,
    /// Profiles used to synthesise the entries, if any.
    #[serde(default)]
    pub profiles: Vec<EncoderProfile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub metadata: CorpusMetadata,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.version != MANIFEST_VERSION {
            return Err(PipelineError::InvalidManifest(format!("unsupported manifest version {}", self.version)));
        }
        let mut ids = BTreeSet::new();
        for e in &self.entries {
            if !ids.insert(&e.file_id) {
                return Err(PipelineError::InvalidManifest(format!("duplicate file_id {}", e.file_id)));
            }
            if e.class_label.is_stego() && (e.key_seed.is_none() || !(e.capacity_fraction > 0.0 && e.capacity_fraction <= 1.0)) {
                return Err(PipelineError::InvalidManifest(format!("stego entry {} lacks a key seed or valid capacity", e.file_id)));
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        let m: Self = serde_json::from_str(&text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<(), PipelineError> {
        std::fs::write(path, serde_json::to_string_pretty(self)?).map_err(|e| PipelineError::io(path, e))
    }

    pub fn encoders(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.encoder_label.clone()).collect::<BTreeSet<_>>().into_iter().collect()
    }

    pub fn file_ids(&self) -> BTreeSet<String> {
        self.entries.iter().map(|e| e.file_id.clone()).collect()
    }

    /// Same metadata, entries filtered by `keep`.
    pub fn subset(&self, keep: impl Fn(&ManifestEntry) -> bool) -> Self {
        Self { version: self.version, metadata: self.metadata.clone(), entries: self.entries.iter().filter(|e| keep(e)).cloned().collect() }
    }

    /// Splits by cover group with the given test share of groups, seeded.
    pub fn split(&self, test_share: f64, seed: u64) -> (Self, Self) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut groups: Vec<String> = self.entries.iter().map(ManifestEntry::group).collect::<BTreeSet<_>>().into_iter().collect();
        groups.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let n_test = ((groups.len() as f64) * test_share).round() as usize;
        let test: BTreeSet<String> = groups.into_iter().take(n_test).collect();
        (self.subset(|e| !test.contains(&e.group())), self.subset(|e| test.contains(&e.group())))
    }
}

/// Where entry bytes come from.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    /// Files under this directory, at each entry's `path`.
    Disk(PathBuf),
    /// Regenerate from the manifest's profiles and seeds.
    Synthetic,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub manifest: DatasetManifest,
    pub source: Source,
}

impl Corpus {
    pub fn new(manifest: DatasetManifest, source: Source) -> Self {
        Self { manifest, source }
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.manifest.entries
    }

    pub fn subset(&self, keep: impl Fn(&ManifestEntry) -> bool) -> Self {
        Self { manifest: self.manifest.subset(keep), source: self.source.clone() }
    }

    pub fn split(&self, test_share: f64, seed: u64) -> (Self, Self) {
        let (a, b) = self.manifest.split(test_share, seed);
        (Self::new(a, self.source.clone()), Self::new(b, self.source.clone()))
    }

    pub fn bytes(&self, entry: &ManifestEntry) -> Result<Vec<u8>, PipelineError> {
        match &self.source {
            Source::Disk(root) => {
                let path = root.join(&entry.path);
                std::fs::read(&path).map_err(|e| PipelineError::io(&path, e))
            }
            Source::Synthetic => synthesize_entry(&self.manifest.metadata, entry),
        }
    }

    /// Field series of every entry, in manifest order.
    pub fn series(&self, policy: ChannelPolicy) -> Result<Vec<FieldSeries>, PipelineError> {
        self.entries()
            .iter()
            .map(|e| {
                let bytes = self.bytes(e)?;
                Ok(parse_stream(&bytes)?.extract_series(policy)?)
            })
            .collect()
    }
}

fn synthesize_entry(meta: &CorpusMetadata, entry: &ManifestEntry) -> Result<Vec<u8>, PipelineError> {
    let profile = meta
        .profiles
        .iter()
        .find(|p| p.name == entry.encoder_label)
        .ok_or_else(|| PipelineError::InvalidManifest(format!("no profile for encoder {}", entry.encoder_label)))?;
    let cover_seed = entry.cover_seed.ok_or_else(|| PipelineError::InvalidManifest(format!("{} has no cover seed", entry.file_id)))?;
    let format = meta.format.unwrap_or_default();
    let cover = synthesize_stream(profile, &format, format.frames_for(meta.clip_seconds), cover_seed)?;
    match (entry.class_label, entry.key_seed) {
        (ClassLabel::Cover, _) => Ok(cover),
        (ClassLabel::Stego, Some(key_seed)) => {
            let stream = parse_stream(&cover)?;
            let spec = EmbedSpec::keyed(entry.capacity_fraction);
            let bits = spec.selected_count(stream.granule_count(spec.channels)?);
            Ok(embed(&stream, &random_message(key_seed, bits), StegoKey(key_seed), &spec)?)
        }
        (ClassLabel::Stego, None) => Err(PipelineError::InvalidManifest(format!("stego entry {} lacks a key seed", entry.file_id))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRequest {
    pub profiles: Vec<EncoderProfile>,
    /// Covers per profile.
    pub n_per_profile: usize,
    pub clip_seconds: f64,
    /// One stego version of every cover per fraction.
    pub capacity_fractions: Vec<f64>,
    pub seed: u64,
    #[serde(default)]
    pub format: StreamFormat,
}

/// Builds the manifest of a synthetic corpus. Cover `i` of profile `j`
/// uses cover seed `seed + 1_000_003 * j + i`; its stego copy at fraction
/// index `f` uses key seed `cover_seed * 8 + f + 1`.
pub fn gen_synthetic_manifest(req: &CorpusRequest) -> Result<DatasetManifest, PipelineError> {
    if req.profiles.is_empty() {
        return Err(PipelineError::InvalidProfile("no profiles given".into()));
    }
    if req.n_per_profile == 0 {
        return Err(PipelineError::InvalidProfile("need at least one file per profile".into()));
    }
    if !(req.clip_seconds > 0.0) || req.format.frames_for(req.clip_seconds) == 0 {
        return Err(PipelineError::InvalidProfile(format!("clip of {} s holds no frame", req.clip_seconds)));
    }
    let mut names = BTreeSet::new();
    for p in &req.profiles {
        p.validate()?;
        if !names.insert(&p.name) {
            return Err(PipelineError::InvalidProfile(format!("duplicate profile name {}", p.name)));
        }
    }
    if let Some(f) = req.capacity_fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
        return Err(PipelineError::InvalidProfile(format!("capacity fraction {f} outside (0, 1]")));
    }
    if req.capacity_fractions.len() > 7 {
        return Err(PipelineError::InvalidProfile("at most 7 capacity fractions per corpus".into()));
    }
    let mut entries = Vec::new();
    for (j, profile) in req.profiles.iter().enumerate() {
        for i in 0..req.n_per_profile {
            let cover_seed = req.seed.wrapping_add(1_000_003u64.wrapping_mul(j as u64)).wrapping_add(i as u64);
            let stem = format!("{}_{i:05}", profile.name);
            entries.push(ManifestEntry {
                file_id: format!("{stem}_cover"),
                path: format!("{}/{stem}_cover.mp3", profile.name),
                encoder_label: profile.name.clone(),
                class_label: ClassLabel::Cover,
                capacity_fraction: 0.0,
                key_seed: None,
                cover_seed: Some(cover_seed),
            });
            for (f, &fraction) in req.capacity_fractions.iter().enumerate() {
                let pct = (fraction * 1000.0).round() as u32;
                entries.push(ManifestEntry {
                    file_id: format!("{stem}_stego{pct:04}"),
                    path: format!("{}/{stem}_stego{pct:04}.mp3", profile.name),
                    encoder_label: profile.name.clone(),
                    class_label: ClassLabel::Stego,
                    capacity_fraction: fraction,
                    key_seed: Some(cover_seed.wrapping_mul(8).wrapping_add(f as u64 + 1)),
                    cover_seed: Some(cover_seed),
                });
            }
        }
    }
    let manifest = DatasetManifest {
        version: MANIFEST_VERSION,
        metadata: CorpusMetadata {
            sample_rate: req.format.sample_rate,
            clip_seconds: req.clip_seconds,
            seed: req.seed,
            format: Some(req.format),
            profiles: req.profiles.clone(),
        },
        entries,
    };
    manifest.validate()?;
    Ok(manifest)
}

/// Generates the manifest and writes every file plus `manifest.json`
/// under `out_dir`.
pub fn gen_synthetic_corpus(req: &CorpusRequest, out_dir: &Path) -> Result<DatasetManifest, PipelineError> {
    let manifest = gen_synthetic_manifest(req)?;
    for entry in &manifest.entries {
        let bytes = synthesize_entry(&manifest.metadata, entry)?;
        let path = out_dir.join(&entry.path);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| PipelineError::io(&path, e))?;
    }
    manifest.save(&out_dir.join("manifest.json"))?;
    Ok(manifest)
}

/// Counts per `(encoder, class)`.
pub fn class_counts(manifest: &DatasetManifest) -> BTreeMap<(String, ClassLabel), usize> {
    let mut counts = BTreeMap::new();
    for e in &manifest.entries {
        *counts.entry((e.encoder_label.clone(), e.class_label)).or_insert(0) += 1;
    }
    counts
}
