use std::collections::BTreeMap;

use gainsteg::bitstream::{parse_stream, ChannelMode, ChannelPolicy};
use gainsteg::pipeline::{
    capacity_sweep, evaluate, gen_synthetic_manifest, load_bundle, save_bundle, synthesize_stream, train, Architecture, Corpus, CorpusRequest,
    Dataset, EncoderProfile, Source, StreamFormat, TrainOptions,
};
use gainsteg::stego::{embed, embed_stream, extract, max_capacity, random_message, EmbedSpec, Message, StegoKey};
use proptest::prelude::*;

fn mode() -> impl Strategy<Value = ChannelMode> {
    prop_oneof![Just(ChannelMode::Stereo), Just(ChannelMode::JointStereo), Just(ChannelMode::DualChannel), Just(ChannelMode::Mono)]
}

fn stream_bytes() -> impl Strategy<Value = Vec<u8>> {
    (mode(), prop::sample::select(vec![32u32, 96, 128, 256, 320]), prop::sample::select(vec![32000u32, 44100, 48000]), 1usize..60, any::<u64>(), 20.0f64..230.0)
        .prop_map(|(channel_mode, bitrate_kbps, sample_rate, frames, seed, center)| {
            let format = StreamFormat { bitrate_kbps, sample_rate, channel_mode };
            synthesize_stream(&EncoderProfile::gaussian("p", center, 6.0, 0.4), &format, frames, seed).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn serialize_is_identity(bytes in stream_bytes(), prefix in prop::collection::vec(0u8..0xFF, 0..40)) {
        let mut file = prefix;
        file.extend(bytes);
        let stream = parse_stream(&file).unwrap();
        prop_assert_eq!(stream.serialize(), file);
    }

    #[test]
    fn embedding_touches_only_gain_lsbs(bytes in stream_bytes(), key in any::<u64>(), fraction in 0.05f64..=1.0) {
        let stream = parse_stream(&bytes).unwrap();
        let spec = EmbedSpec::keyed(fraction);
        let capacity = max_capacity(&stream, &spec).unwrap().bits;
        let stego = embed(&stream, &random_message(key, capacity), StegoKey(key), &spec).unwrap();
        let lsb_offsets: Vec<u64> = stream.side_infos.iter().flat_map(|si| (0..2).map(move |gr| si.global_gain_bit_offsets[gr][0] + 7)).collect();
        for (i, (a, b)) in bytes.iter().zip(&stego).enumerate() {
            let diff = a ^ b;
            for bit in 0..8 {
                if diff & (0x80 >> bit) != 0 {
                    prop_assert!(lsb_offsets.contains(&(i as u64 * 8 + bit)));
                }
            }
        }
        let reparsed = parse_stream(&stego).unwrap();
        prop_assert_eq!(&reparsed, &embed_stream(&stream, &random_message(key, capacity), StegoKey(key), &spec).unwrap());
    }

    #[test]
    fn extract_inverts_embed(bytes in stream_bytes(), key in any::<u64>(), spacing in 1usize..4, bits in prop::collection::vec(any::<bool>(), 0..200)) {
        let stream = parse_stream(&bytes).unwrap();
        let spec = EmbedSpec::legacy(spacing);
        let capacity = max_capacity(&stream, &spec).unwrap().bits;
        let message = Message::from_bits(bits.into_iter().take(capacity).collect());
        let stego = embed(&stream, &message, StegoKey(key), &spec).unwrap();
        prop_assert_eq!(extract(&stego, StegoKey(key), &spec, message.len()).unwrap(), message);
    }
}

fn small_corpus(n: usize, fractions: Vec<f64>) -> Corpus {
    let req = CorpusRequest {
        profiles: vec![EncoderProfile::gaussian("enc_a", 110.0, 8.0, 0.9), EncoderProfile::gaussian("enc_b", 190.0, 8.0, 0.5)],
        n_per_profile: n,
        clip_seconds: 10.0,
        capacity_fractions: fractions,
        seed: 21,
        format: StreamFormat::default(),
    };
    Corpus::new(gen_synthetic_manifest(&req).unwrap(), Source::Synthetic)
}

#[test]
fn bundle_reload_predicts_identically() {
    let corpus = small_corpus(10, vec![1.0]);
    let (train_c, test_c) = corpus.split(0.3, 2);
    let train_d = Dataset::load(&train_c, ChannelPolicy::First).unwrap();
    let test_d = Dataset::load(&test_c, ChannelPolicy::First).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for arch in [Architecture::Single, Architecture::SingleEnc, Architecture::Multi] {
        let model = train(&train_d, arch, &TrainOptions::default()).unwrap();
        let path = dir.path().join(format!("{arch:?}"));
        save_bundle(&path, &model).unwrap();
        let reloaded = load_bundle(&path).unwrap();
        assert_eq!(reloaded, model);
        assert_eq!(evaluate(&reloaded, &test_d, false).unwrap(), evaluate(&model, &test_d, false).unwrap());
    }
}

#[test]
fn encoder_features_widen_the_pooled_detector_by_four() {
    let data = Dataset::load(&small_corpus(6, vec![1.0]), ChannelPolicy::First).unwrap();
    let single = train(&data, Architecture::Single, &TrainOptions::default()).unwrap();
    let augmented = train(&data, Architecture::SingleEnc, &TrainOptions::default()).unwrap();
    assert_eq!(augmented.feature_width().unwrap(), single.feature_width().unwrap() + 4);
}

#[test]
fn capacity_sweep_reports_every_fraction() {
    let corpus = small_corpus(8, vec![1.0, 0.25]);
    let rows = capacity_sweep(&[1.0, 0.25], |fraction| {
        let sub = corpus.subset(|e| !e.class_label.is_stego() || e.capacity_fraction == fraction);
        let (train_c, test_c) = sub.split(0.3, 5);
        let model = train(&Dataset::load(&train_c, ChannelPolicy::First)?, Architecture::Multi, &TrainOptions::default())?;
        evaluate(&model, &Dataset::load(&test_c, ChannelPolicy::First)?, false)
    })
    .unwrap();
    let fractions: Vec<f64> = rows.iter().map(|r| r.fraction).collect();
    assert_eq!(fractions, vec![1.0, 0.25]);
    assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r.accuracy)));
}

#[test]
fn unseen_encoder_is_flagged_low_margin() {
    let corpus = small_corpus(6, vec![1.0]);
    let train_d = Dataset::load(&corpus, ChannelPolicy::First).unwrap();
    let model = train(&train_d, Architecture::Multi, &TrainOptions::default()).unwrap();
    let req = CorpusRequest {
        profiles: vec![EncoderProfile::gaussian("enc_c", 150.0, 8.0, 0.7)],
        n_per_profile: 2,
        clip_seconds: 10.0,
        capacity_fractions: vec![1.0],
        seed: 99,
        format: StreamFormat::default(),
    };
    let unseen = Dataset::load(&Corpus::new(gen_synthetic_manifest(&req).unwrap(), Source::Synthetic), ChannelPolicy::First).unwrap();
    let report = evaluate(&model, &unseen, false).unwrap();
    assert_eq!(report.low_margin_files.len(), unseen.len());
    let routed: BTreeMap<_, _> = report.predictions.iter().map(|p| (p.file_id.clone(), p.routed_encoder.clone())).collect();
    assert!(routed.values().all(|r| matches!(r.as_deref(), Some("enc_a" | "enc_b"))));
}
