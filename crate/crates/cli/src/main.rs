//! `gainsteg` command-line front end.
//!
//! Every command prints one JSON object on stdout holding its effective
//! configuration (seeds included) and results. Errors are printed as
//! `{"error": ..., "exit_code": ...}` with exit code 1 for bad input, 2 for
//! domain failures such as capacity or train/test overlap, and 3 for
//! internal invariant violations.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use gainsteg::bitstream::{parse_stream, BitstreamError, ChannelPolicy};
use gainsteg::features::{extract_features, feature_names, BinSpec, CalibrationSpec, FeatureError, FeatureRow, FeatureSetKind, FeatureTable};
use gainsteg::learn::{GaConfig, LearnError};
use gainsteg::pipeline::corpus::class_counts;
use gainsteg::pipeline::model::{fit_bin_spec, GainBinMethod, ModelKind};
use gainsteg::pipeline::{
    evaluate, gen_synthetic_corpus, load_bundle, save_bundle, train, Architecture, Corpus, CorpusRequest, Dataset, DatasetManifest, EncoderProfile,
    FeatureConfig, PipelineError, Source, StreamFormat, TrainOptions,
};
use gainsteg::stego::{embed, extract, max_capacity, modification_rate, EmbedSpec, Message, StegoError, StegoKey};

#[derive(Parser)]
#[command(name = "gainsteg", version, about = "Global-gain steganography and steganalysis for MPEG-1 Layer III files")]
struct Cli {
    /// Also write the JSON result to this file.
    #[arg(long, global = true)]
    json_out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Hide a message in the global gains of an mp3 file.
    Embed {
        #[arg(long)]
        input: PathBuf,
        /// Message file; bytes are embedded most-significant bit first.
        #[arg(long)]
        message: PathBuf,
        /// Up to 16 hexadecimal digits.
        #[arg(long)]
        key: StegoKey,
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// Recover a message from a stego file.
    Extract {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        key: StegoKey,
        /// Message length in bits.
        #[arg(long)]
        length: usize,
        #[arg(long)]
        output: PathBuf,
        /// Report the bit agreement with this reference message.
        #[arg(long)]
        compare: Option<PathBuf>,
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// Synthesize a labelled corpus of cover and stego files.
    GenCorpus {
        /// JSON array of encoder profiles; two built-in profiles otherwise.
        #[arg(long)]
        profiles: Option<PathBuf>,
        /// Covers per profile.
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long, default_value_t = 30.0)]
        seconds: f64,
        #[arg(long, env = "GAINSTEG_SEED", default_value_t = 0)]
        seed: u64,
        /// One stego copy per cover and fraction.
        #[arg(long, value_delimiter = ',', default_value = "1.0")]
        fractions: Vec<f64>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Split a manifest by cover group into train and test manifests, written
    /// next to it.
    Split {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 0.3)]
        test_share: f64,
        #[arg(long, env = "GAINSTEG_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "train.json")]
        train_name: String,
        #[arg(long, default_value = "test.json")]
        test_name: String,
    },
    /// Compute a feature table for every manifest entry.
    Features {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Take the gain bins from a single-layer model bundle.
        #[arg(long, conflicts_with = "bins")]
        bins_from: Option<PathBuf>,
        #[command(flatten)]
        features: FeatureArgs,
        #[command(flatten)]
        source: SourceArgs,
    },
    /// Train a detector and save it as a model bundle.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "multi")]
        arch: Architecture,
        /// Bundle directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10.0)]
        c: f64,
        /// RBF width; defaults to 1 / feature count.
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        grid_search: bool,
        /// Genetic feature selection.
        #[arg(long)]
        ga: bool,
        #[arg(long, default_value_t = 200)]
        ga_population: usize,
        #[arg(long, default_value_t = 50)]
        ga_generations: usize,
        /// Layer-1 (encoder classifier) regularisation.
        #[arg(long, default_value_t = 10.0)]
        encoder_c: f64,
        #[arg(long, env = "GAINSTEG_SEED", default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        features: FeatureArgs,
        #[command(flatten)]
        source: SourceArgs,
    },
    /// Evaluate a model bundle on a test manifest.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        /// Directory for report.json, roc.csv and per_encoder.csv.
        #[arg(long)]
        out_dir: PathBuf,
        /// Route layered models by the true encoder labels.
        #[arg(long)]
        oracle_routing: bool,
        #[command(flatten)]
        source: SourceArgs,
    },
}

#[derive(clap::Args)]
struct SpecArgs {
    /// Share of granules used, selected by a key-seeded permutation.
    #[arg(long, default_value_t = 1.0, conflicts_with = "spacing")]
    fraction: f64,
    /// Use granules 0, s, 2s, ... instead of keyed selection.
    #[arg(long)]
    spacing: Option<usize>,
    /// `first`, `concat` or a channel number.
    #[arg(long, default_value = "first", value_parser = parse_channels)]
    channels: ChannelPolicy,
}

impl SpecArgs {
    fn spec(&self) -> EmbedSpec {
        let mut spec = match self.spacing {
            Some(s) => EmbedSpec::legacy(s),
            None => EmbedSpec::keyed(self.fraction),
        };
        spec.channels = self.channels;
        spec
    }
}

fn parse_channels(s: &str) -> Result<ChannelPolicy, String> {
    match s {
        "first" => Ok(ChannelPolicy::First),
        "concat" => Ok(ChannelPolicy::Concatenated),
        n => n.parse().map(ChannelPolicy::Channel).map_err(|_| format!("expected first, concat or a channel number, got {n:?}")),
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Raw,
    Calibrated,
    Extended,
}

#[derive(Clone, Copy, ValueEnum)]
enum BinsArg {
    EqualWidth,
    PerValue,
}

#[derive(clap::Args)]
struct FeatureArgs {
    #[arg(long, value_enum, default_value = "extended")]
    kind: KindArg,
    #[arg(long, value_enum, default_value = "per-value")]
    bins: BinsArg,
    /// Re-embedding order.
    #[arg(long, default_value_t = 10)]
    r: usize,
    /// Re-embedding capacity fraction.
    #[arg(long, default_value_t = 1.0)]
    cr: f64,
    #[arg(long, env = "GAINSTEG_CAL_SEED", default_value_t = 0)]
    cal_seed: u64,
    #[arg(long, default_value = "first", value_parser = parse_channels)]
    channels: ChannelPolicy,
}

impl FeatureArgs {
    fn config(&self) -> FeatureConfig {
        FeatureConfig {
            kind: match self.kind {
                KindArg::Raw => FeatureSetKind::Raw,
                KindArg::Calibrated => FeatureSetKind::Calibrated,
                KindArg::Extended => FeatureSetKind::Extended,
            },
            calibration: CalibrationSpec { r: self.r, c_r: self.cr, key_seed: self.cal_seed },
            channels: self.channels,
            bins: match self.bins {
                BinsArg::EqualWidth => GainBinMethod::EqualWidth,
                BinsArg::PerValue => GainBinMethod::PerValue,
            },
            ..FeatureConfig::default()
        }
    }
}

#[derive(clap::Args)]
struct SourceArgs {
    /// Regenerate entries from the manifest's profiles instead of reading
    /// files.
    #[arg(long)]
    synthetic: bool,
}

impl SourceArgs {
    fn corpus(&self, manifest_path: &Path) -> anyhow::Result<Corpus> {
        let manifest = DatasetManifest::load(manifest_path)?;
        let source = if self.synthetic { Source::Synthetic } else { Source::Disk(manifest_dir(manifest_path)) };
        Ok(Corpus::new(manifest, source))
    }
}

fn manifest_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn read(path: &Path) -> anyhow::Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> anyhow::Result<()> {
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn default_profiles() -> Vec<EncoderProfile> {
    vec![EncoderProfile::gaussian("enc_a", 110.0, 8.0, 0.9), EncoderProfile::gaussian("enc_b", 190.0, 8.0, 0.5)]
}

fn run(command: Command) -> anyhow::Result<Value> {
    match command {
        Command::Embed { input, message, key, output, spec } => {
            let spec = spec.spec();
            let cover = read(&input)?;
            let stream = parse_stream(&cover)?;
            let message = Message::from_bytes(&read(&message)?);
            let capacity = max_capacity(&stream, &spec)?;
            let stego = embed(&stream, &message, key, &spec)?;
            write(&output, &stego)?;
            Ok(json!({
                "command": "embed",
                "config": { "input": input, "output": output, "key": key.to_string(), "spec": spec },
                "capacity_bits": capacity.bits,
                "capacity_bits_per_second": capacity.bits_per_second,
                "bits_embedded": message.len(),
                "modification_rate_percent": modification_rate(&cover, &stego)?,
            }))
        }
        Command::Extract { input, key, length, output, compare, spec } => {
            let spec = spec.spec();
            let message = extract(&read(&input)?, key, &spec, length)?;
            write(&output, message.to_bytes())?;
            let agreement = match &compare {
                Some(path) => {
                    let reference = Message::from_bytes(&read(path)?);
                    let n = length.min(reference.len());
                    let same = message.bits.iter().zip(&reference.bits).take(n).filter(|(a, b)| a == b).count();
                    Some(if n == 0 { 1.0 } else { same as f64 / n as f64 })
                }
                None => None,
            };
            Ok(json!({
                "command": "extract",
                "config": { "input": input, "output": output, "key": key.to_string(), "spec": spec, "length": length, "compare": compare },
                "bits_extracted": message.len(),
                "agreement": agreement,
            }))
        }
        Command::GenCorpus { profiles, n, seconds, seed, fractions, out_dir } => {
            let profiles = match &profiles {
                Some(path) => serde_json::from_slice(&read(path)?).with_context(|| format!("parsing profiles {}", path.display()))?,
                None => default_profiles(),
            };
            let req = CorpusRequest { profiles, n_per_profile: n, clip_seconds: seconds, capacity_fractions: fractions, seed, format: StreamFormat::default() };
            std::fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
            let manifest = gen_synthetic_corpus(&req, &out_dir)?;
            let counts: BTreeMap<String, usize> = class_counts(&manifest).into_iter().map(|((enc, class), k)| (format!("{enc}/{class}"), k)).collect();
            Ok(json!({
                "command": "gen-corpus",
                "config": { "out_dir": out_dir, "n_per_profile": n, "clip_seconds": seconds, "seed": seed, "capacity_fractions": req.capacity_fractions, "profiles": req.profiles.iter().map(|p| &p.name).collect::<Vec<_>>() },
                "manifest": out_dir.join("manifest.json"),
                "files": manifest.entries.len(),
                "class_counts": counts,
            }))
        }
        Command::Split { manifest, test_share, seed, train_name, test_name } => {
            if !(0.0..=1.0).contains(&test_share) {
                anyhow::bail!(PipelineError::InvalidManifest(format!("test share {test_share} outside [0, 1]")));
            }
            let full = DatasetManifest::load(&manifest)?;
            let (train_m, test_m) = full.split(test_share, seed);
            let dir = manifest_dir(&manifest);
            train_m.save(&dir.join(&train_name))?;
            test_m.save(&dir.join(&test_name))?;
            Ok(json!({
                "command": "split",
                "config": { "manifest": manifest, "test_share": test_share, "seed": seed },
                "train": { "manifest": dir.join(&train_name), "files": train_m.entries.len() },
                "test": { "manifest": dir.join(&test_name), "files": test_m.entries.len() },
            }))
        }
        Command::Features { manifest, output, bins_from, features, source } => {
            let cfg = features.config();
            let data = Dataset::load(&source.corpus(&manifest)?, cfg.channels)?;
            let spec = match &bins_from {
                Some(bundle) => match load_bundle(bundle)?.kind {
                    ModelKind::Single { detector } => detector.bin_spec,
                    ModelKind::Multi(_) => anyhow::bail!(PipelineError::InvalidManifest("--bins-from needs a single-layer bundle".into())),
                },
                None => pooled_bin_spec(&data, &cfg)?,
            };
            let mut table = FeatureTable::new(feature_names(cfg.kind));
            for (e, s) in data.entries.iter().zip(&data.series) {
                let values = extract_features(s, &spec, &cfg.calibration, cfg.kind)?.values;
                table.push(FeatureRow { file_id: e.file_id.clone(), encoder_label: e.encoder_label.clone(), class_label: e.class_label, capacity: e.capacity_fraction, values })?;
            }
            let file = std::fs::File::create(&output).with_context(|| format!("creating {}", output.display()))?;
            table.write_csv(file)?;
            Ok(json!({
                "command": "features",
                "config": { "manifest": manifest, "output": output, "features": cfg, "bins_from": bins_from, "bin_spec": spec },
                "rows": table.rows.len(),
                "columns": table.names.len(),
            }))
        }
        Command::Train { manifest, arch, out, c, gamma, grid_search, ga, ga_population, ga_generations, encoder_c, seed, features, source } => {
            let ga = ga.then(|| GaConfig { population: ga_population, generations: ga_generations, seed, ..GaConfig::default() });
            let opts = TrainOptions { features: features.config(), c, gamma, grid_search, ga, encoder_c, seed };
            let data = Dataset::load(&source.corpus(&manifest)?, opts.features.channels)?;
            let model = train(&data, arch, &opts)?;
            save_bundle(&out, &model)?;
            let detectors: Vec<&String> = match &model.kind {
                ModelKind::Single { .. } => Vec::new(),
                ModelKind::Multi(l) => l.per_encoder.keys().collect(),
            };
            Ok(json!({
                "command": "train",
                "config": { "manifest": manifest, "architecture": arch, "options": opts, "bundle": out },
                "training_files": data.len(),
                "encoders": model.encoders,
                "feature_width": model.feature_width(),
                "per_encoder_detectors": detectors,
                "layer1": matches!(&model.kind, ModelKind::Multi(l) if l.encoder_classifier.is_some()),
            }))
        }
        Command::Eval { model, manifest, out_dir, oracle_routing, source } => {
            let trained = load_bundle(&model)?;
            let data = Dataset::load(&source.corpus(&manifest)?, trained.options.features.channels)?;
            let report = evaluate(&trained, &data, oracle_routing)?;
            std::fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
            write(&out_dir.join("report.json"), serde_json::to_vec_pretty(&report)?)?;
            write(&out_dir.join("roc.csv"), report.roc_csv())?;
            write(&out_dir.join("per_encoder.csv"), report.per_encoder_csv())?;
            Ok(json!({
                "command": "eval",
                "config": { "model": model, "manifest": manifest, "out_dir": out_dir, "oracle_routing": oracle_routing, "options": trained.options },
                "files": data.len(),
                "accuracy": report.accuracy,
                "auc": report.auc,
                "confusion": report.confusion,
                "layer1_accuracy": report.layer1_accuracy,
                "per_encoder": report.per_encoder,
                "low_margin_files": report.low_margin_files.len(),
            }))
        }
    }
}

/// Per-value bins selected per encoder and united, as for a pooled
/// detector.
fn pooled_bin_spec(data: &Dataset, cfg: &FeatureConfig) -> anyhow::Result<BinSpec> {
    if cfg.bins == GainBinMethod::EqualWidth {
        return Ok(BinSpec::equal_width());
    }
    let mut encoders: Vec<&String> = data.entries.iter().map(|e| &e.encoder_label).collect();
    encoders.sort();
    encoders.dedup();
    let specs = encoders
        .into_iter()
        .map(|enc| fit_bin_spec(&data.filter(|e| &e.encoder_label == enc), cfg))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BinSpec::union(&specs).expect("at least one encoder"))
}

const INPUT: u8 = 1;
const DOMAIN: u8 = 2;
const INTERNAL: u8 = 3;

fn bitstream_code(e: &BitstreamError) -> u8 {
    match e {
        BitstreamError::IndexOutOfRange { .. } => INTERNAL,
        _ => INPUT,
    }
}

fn stego_code(e: &StegoError) -> u8 {
    match e {
        StegoError::MessageTooLong { .. } | StegoError::LengthExceedsCapacity { .. } => DOMAIN,
        StegoError::Bitstream(b) => bitstream_code(b),
        StegoError::LengthMismatch { .. } | StegoError::InvalidSpec(_) | StegoError::InvalidKey(_) => INPUT,
    }
}

fn feature_code(e: &FeatureError) -> u8 {
    match e {
        FeatureError::EmptyStream | FeatureError::TooFewFrames { .. } | FeatureError::InvalidSpec(_) | FeatureError::Table(_) => INPUT,
        FeatureError::EmptyCorpus | FeatureError::NoBinsSelected => DOMAIN,
        FeatureError::Stego(s) => stego_code(s),
        FeatureError::Bitstream(b) => bitstream_code(b),
        _ => INTERNAL,
    }
}

fn learn_code(e: &LearnError) -> u8 {
    match e {
        LearnError::SingleClass | LearnError::TooFewSamples { .. } | LearnError::DegenerateMask => DOMAIN,
        LearnError::InvalidParameter(_) => INPUT,
        _ => INTERNAL,
    }
}

fn pipeline_code(e: &PipelineError) -> u8 {
    match e {
        PipelineError::MissingEncoderClass { .. } | PipelineError::EmptyTestSet | PipelineError::TrainTestOverlap { .. } | PipelineError::SingleClassLabels => DOMAIN,
        PipelineError::Feature(f) => feature_code(f),
        PipelineError::Learn(l) => learn_code(l),
        PipelineError::Stego(s) => stego_code(s),
        PipelineError::Bitstream(b) => bitstream_code(b),
        _ => INPUT,
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        let code = if let Some(e) = cause.downcast_ref::<PipelineError>() {
            pipeline_code(e)
        } else if let Some(e) = cause.downcast_ref::<StegoError>() {
            stego_code(e)
        } else if let Some(e) = cause.downcast_ref::<FeatureError>() {
            feature_code(e)
        } else if let Some(e) = cause.downcast_ref::<LearnError>() {
            learn_code(e)
        } else if let Some(e) = cause.downcast_ref::<BitstreamError>() {
            bitstream_code(e)
        } else if cause.is::<std::io::Error>() || cause.is::<serde_json::Error>() {
            INPUT
        } else {
            continue;
        };
        return code;
    }
    INTERNAL
}

fn emit(value: &Value, json_out: Option<&Path>) -> Result<(), std::io::Error> {
    use std::io::Write;
    let text = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e),
        _ => {}
    }
    match json_out {
        Some(path) => std::fs::write(path, text + "\n"),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(INPUT);
        }
    };
    match run(cli.command) {
        Ok(value) => match emit(&value, cli.json_out.as_deref()) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                log::error!("writing JSON output: {e}");
                ExitCode::from(INPUT)
            }
        },
        Err(err) => {
            let code = exit_code(&err);
            log::debug!("{err:?}");
            let _ = emit(&json!({ "error": format!("{err:#}"), "exit_code": code }), cli.json_out.as_deref());
            ExitCode::from(code)
        }
    }
}
