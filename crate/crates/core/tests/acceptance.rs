//! Acceptance suite. One test per criterion; each prints a single
//! `criterion NN ... PASS|FAIL` line with the measured value before
//! asserting, so `cargo test --test acceptance -- --nocapture` gives the
//! whole checklist.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use gainsteg::bitstream::{parse_stream, ChannelMode, ChannelPolicy, FieldSeries, FrameHeader, FrameSideInfo, GranuleChannelInfo, TABLE_SELECT_ABSENT};
use gainsteg::features::{
    base_features, extended_features, extended_features_with, joint_hist, mutual_info, reembed_series, BinSpec, Binning, CalibrationSpec,
    FeatureRow, FeatureTable, JointHistogram,
};
use gainsteg::learn::{fit_scaler, ga_select, svm_train, svm_train_with_report, two_point_crossover, GaConfig, Kernel, SvmParams};
use gainsteg::pipeline::{
    build_single_layer, cross_validate_model, evaluate, gen_synthetic_corpus, gen_synthetic_manifest, load_bundle, roc_curve, save_bundle,
    synthesize_stream, train, Architecture, Corpus, CorpusRequest, Dataset, EncoderProfile, Source, StreamFormat, TrainOptions,
    STANDARD_FRACTIONS,
};
use gainsteg::stego::{embed, embed_unscrambled, extract, max_capacity, modification_rate, random_message, EmbedSpec, Message, StegoKey};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn report(id: u32, name: &str, pass: bool, detail: String) -> bool {
    println!("criterion {id:02} {name}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
    pass
}

fn thirty_second_stream(profile: &EncoderProfile, seed: u64) -> Vec<u8> {
    let format = StreamFormat::default();
    synthesize_stream(profile, &format, format.frames_for(30.0), seed).unwrap()
}

// Random but well-formed side information; every field inside its width.
fn random_granule(rng: &mut ChaCha8Rng) -> GranuleChannelInfo {
    let window_switching = rng.random_bool(0.3);
    let mut g = GranuleChannelInfo {
        part2_3_length: rng.random_range(0..4096),
        big_values: rng.random_range(0..289),
        global_gain: rng.random(),
        scalefac_compress: rng.random_range(0..16),
        window_switching,
        preflag: rng.random(),
        scalefac_scale: rng.random(),
        count1table_select: rng.random(),
        ..Default::default()
    };
    if window_switching {
        g.block_type = rng.random_range(1..4);
        g.mixed_block_flag = rng.random();
        g.table_select = [rng.random_range(0..32), rng.random_range(0..32), TABLE_SELECT_ABSENT];
        g.subblock_gain = [rng.random_range(0..8), rng.random_range(0..8), rng.random_range(0..8)];
    } else {
        g.table_select = [rng.random_range(0..32), rng.random_range(0..32), rng.random_range(0..32)];
        g.region0_count = rng.random_range(0..16);
        g.region1_count = rng.random_range(0..8);
    }
    g
}

/// A file with random header flags, side information and main data, plus an
/// optional ID3v2 prefix and ID3v1 suffix.
fn random_file(seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bitrates = [32, 40, 48, 56, 64, 80, 96, 112, 128, 160, 192, 224, 256, 320];
    let modes = [ChannelMode::Stereo, ChannelMode::JointStereo, ChannelMode::DualChannel, ChannelMode::Mono];
    let mut base = FrameHeader::new(bitrates[rng.random_range(0..bitrates.len())], [44100, 48000, 32000][rng.random_range(0..3)], modes[rng.random_range(0..4)])
        .unwrap();
    base.crc_present = rng.random();
    base.copyright = rng.random();
    base.original = rng.random();
    let mut out = Vec::new();
    if rng.random_bool(0.5) {
        // ID3v2 with a 20-byte syncsafe body
        out.extend_from_slice(b"ID3\x03\x00\x00\x00\x00\x00\x14");
        out.extend((0..20).map(|_| rng.random_range(0u8..0x7F)));
    }
    for _ in 0..rng.random_range(20..200) {
        let mut h = base;
        h.padding = rng.random();
        h.private_bit = rng.random();
        h.mode_extension = if h.channel_mode == ChannelMode::JointStereo { rng.random_range(0..4) } else { 0 };
        let mut si = FrameSideInfo::empty(h.channel_mode);
        si.main_data_begin = rng.random_range(0..512);
        si.private_bits = rng.random_range(0..if h.channel_mode == ChannelMode::Mono { 32 } else { 8 });
        for ch in 0..si.channels {
            si.scfsi[ch] = rng.random_range(0..16);
        }
        for gr in 0..2 {
            for ch in 0..si.channels {
                si.granules[gr][ch] = random_granule(&mut rng);
            }
        }
        let start = out.len();
        out.extend_from_slice(&h.to_bytes());
        if h.crc_present {
            out.extend([rng.random::<u8>(), rng.random()]);
        }
        out.extend(si.encode());
        while out.len() < start + h.frame_len() {
            out.push(rng.random());
        }
    }
    if rng.random_bool(0.5) {
        out.extend_from_slice(b"TAG");
        out.extend((0..125).map(|_| rng.random::<u8>()));
    }
    out
}

#[test]
fn criterion_01_parser_identity() {
    let mut files: Vec<Vec<u8>> = (0..20).map(random_file).collect();
    for (i, center) in [60.0, 120.0, 180.0, 240.0].into_iter().enumerate() {
        files.push(thirty_second_stream(&EncoderProfile::gaussian("p", center, 10.0, 0.5), i as u64));
    }
    let identical = files.iter().filter(|f| parse_stream(f).unwrap().serialize() == **f).count();

    let clip = thirty_second_stream(&EncoderProfile::gaussian("p", 150.0, 10.0, 0.5), 99);
    let t = Instant::now();
    let out = parse_stream(&clip).unwrap().serialize();
    let elapsed = t.elapsed();
    assert_eq!(out, clip);

    let pass = identical == files.len() && elapsed < Duration::from_secs(1);
    assert!(report(1, "parser identity", pass, format!("{identical}/{} identical, 30 s clip in {elapsed:?}", files.len())));
}

#[test]
fn criterion_02_embed_extract_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let modes = [ChannelMode::Stereo, ChannelMode::JointStereo, ChannelMode::DualChannel, ChannelMode::Mono];
    let mut exact = 0;
    let cases = 1000;
    for case in 0..cases {
        let format = StreamFormat {
            bitrate_kbps: [64, 128, 192, 320][rng.random_range(0..4)],
            sample_rate: [44100, 48000, 32000][rng.random_range(0..3)],
            channel_mode: modes[rng.random_range(0..4)],
        };
        let profile = EncoderProfile::gaussian("p", rng.random_range(40.0..220.0), rng.random_range(2.0..20.0), rng.random_range(0.0..0.95));
        let bytes = synthesize_stream(&profile, &format, rng.random_range(8..120), rng.random()).unwrap();
        let stream = parse_stream(&bytes).unwrap();
        let channels = match (format.channel_mode, rng.random_range(0..3)) {
            (ChannelMode::Mono, _) | (_, 0) => ChannelPolicy::First,
            (_, 1) => ChannelPolicy::Channel(1),
            _ => ChannelPolicy::Concatenated,
        };
        let mut spec = EmbedSpec::keyed(STANDARD_FRACTIONS[case % STANDARD_FRACTIONS.len()]);
        spec.channels = channels;
        let capacity = max_capacity(&stream, &spec).unwrap().bits;
        let message = Message::from_bits((0..rng.random_range(0..=capacity)).map(|_| rng.random()).collect());
        let key = StegoKey(rng.random());
        let stego = embed(&stream, &message, key, &spec).unwrap();
        if extract(&stego, key, &spec, message.len()).unwrap() == message {
            exact += 1;
        }
    }
    assert!(report(2, "embed/extract round trip", exact == cases, format!("{exact}/{cases} exact")));
}

fn mean_modification_rate(fraction: f64) -> f64 {
    let profile = EncoderProfile::gaussian("p", 150.0, 10.0, 0.5);
    let spec = EmbedSpec::keyed(fraction);
    let total: f64 = (0..100u64)
        .map(|i| {
            let cover = thirty_second_stream(&profile, 1000 + i);
            let stream = parse_stream(&cover).unwrap();
            let capacity = max_capacity(&stream, &spec).unwrap().bits;
            let stego = embed(&stream, &random_message(i, capacity), StegoKey(i), &spec).unwrap();
            modification_rate(&cover, &stego).unwrap()
        })
        .sum();
    total / 100.0
}

#[test]
fn criterion_03_modification_rate_full_capacity() {
    let (target, tol) = (2.96e-2, 0.20);
    let rate = mean_modification_rate(1.0);
    let pass = (rate - target).abs() <= tol * target;
    assert!(report(3, "modification rate at 1.0", pass, format!("{rate:.4e} % vs {target:.2e} % +/- 20%")));
}

// LSB replacement flips about half of the selected gains, so the rate scales
// linearly with the fraction: 0.125 * 2.99e-2 = 3.7e-3 %, outside the
// 1.5e-3..2.5e-3 % window. Kept as a faithful measurement.
#[test]
fn criterion_03_modification_rate_eighth_capacity() {
    let (target, tol) = (2.0e-3, 0.25);
    let rate = mean_modification_rate(0.125);
    let pass = (rate - target).abs() <= tol * target;
    assert!(report(3, "modification rate at 0.125", pass, format!("{rate:.4e} % vs {target:.2e} % +/- 25%")));
}

#[test]
fn criterion_04_capacity() {
    let stream = parse_stream(&thirty_second_stream(&EncoderProfile::gaussian("p", 150.0, 10.0, 0.5), 4)).unwrap();
    let rate = max_capacity(&stream, &EmbedSpec::keyed(1.0)).unwrap().bits_per_second;
    assert!(report(4, "capacity", (rate - 76.5).abs() <= 0.1, format!("{rate} bit/s")));
}

fn parity_counts(bytes: &[u8]) -> (usize, usize) {
    let gains = parse_stream(bytes).unwrap().global_gains(ChannelPolicy::First).unwrap();
    let odd = gains.iter().filter(|&&g| g & 1 == 1).count();
    (odd, gains.len() - odd)
}

/// `P(X >= k)` for `X ~ Binomial(n, 1/2)`.
fn sign_test_p(k: usize, n: usize) -> f64 {
    let mut coef = 1.0f64;
    let mut tail = 0.0;
    for i in 0..=n {
        if i >= k {
            tail += coef;
        }
        coef = coef * (n - i) as f64 / (i + 1) as f64;
    }
    tail / 2f64.powi(n as i32)
}

#[test]
fn criterion_05_parity_signature() {
    let profile = EncoderProfile::gaussian("p", 150.0, 10.0, 0.5);
    let spec = EmbedSpec::keyed(1.0);
    let mut odd_heavy = 0;
    let (mut cover_shift, mut stego_shift, mut slots) = (0i64, 0i64, 0i64);
    for i in 0..100u64 {
        let cover = thirty_second_stream(&profile, 5000 + i);
        let stream = parse_stream(&cover).unwrap();
        let capacity = max_capacity(&stream, &spec).unwrap().bits;
        let mut rng = ChaCha8Rng::seed_from_u64(i);
        let biased = Message::from_bits((0..capacity).map(|_| rng.random::<f64>() >= 0.25).collect());
        let (odd, even) = parity_counts(&embed_unscrambled(&stream, &biased, StegoKey(i), &spec).unwrap());
        if odd > even {
            odd_heavy += 1;
        }
        let (co, ce) = parity_counts(&cover);
        let (so, se) = parity_counts(&embed(&stream, &random_message(i, capacity), StegoKey(i), &spec).unwrap());
        cover_shift += co as i64 - ce as i64;
        stego_shift += so as i64 - se as i64;
        slots += (co + ce) as i64;
    }
    let p = sign_test_p(odd_heavy, 100);
    let shift = (stego_shift - cover_shift) as f64 / slots as f64;
    let pass = p < 0.01 && shift.abs() < 0.02;
    assert!(report(5, "parity signature", pass, format!("{odd_heavy}/100 odd-heavy, sign test p = {p:.2e}, uniform shift {shift:.4}")));
}

fn brute_force_mi(counts: &[Vec<u64>]) -> f64 {
    let total: u64 = counts.iter().flatten().sum();
    let n = total as f64;
    let px: Vec<f64> = counts.iter().map(|r| r.iter().sum::<u64>() as f64 / n).collect();
    let pz: Vec<f64> = (0..counts[0].len()).map(|c| counts.iter().map(|r| r[c]).sum::<u64>() as f64 / n).collect();
    let mut mi = 0.0;
    for (r, row) in counts.iter().enumerate() {
        for (c, &k) in row.iter().enumerate() {
            if k > 0 {
                let pxz = k as f64 / n;
                mi += pxz * (pxz / (px[r] * pz[c])).ln();
            }
        }
    }
    mi
}

#[test]
fn criterion_06_mi_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    let mut symmetric_nonneg = true;
    for _ in 0..100 {
        let (rows, cols) = (rng.random_range(1..8), rng.random_range(1..8));
        let counts: Vec<Vec<u64>> = (0..rows).map(|_| (0..cols).map(|_| if rng.random_bool(0.3) { 0 } else { rng.random_range(0..50) }).collect()).collect();
        if counts.iter().flatten().all(|&k| k == 0) {
            continue;
        }
        let h = JointHistogram::from_counts(rows, cols, counts.concat());
        let mi = mutual_info(&h).unwrap();
        worst = worst.max((mi - brute_force_mi(&counts)).abs());
        symmetric_nonneg &= mi >= 0.0 && (mi - mutual_info(&h.transpose()).unwrap()).abs() < 1e-12;
    }
    for _ in 0..500 {
        let n = rng.random_range(1..300);
        let x: Vec<u32> = (0..n).map(|_| rng.random_range(0..20)).collect();
        let z: Vec<u32> = (0..n).map(|_| rng.random_range(0..20)).collect();
        let b = Binning::EqualWidth { bins: rng.random_range(1..12) };
        let a = mutual_info(&joint_hist(&x, &z, &b, &b).unwrap()).unwrap();
        let c = mutual_info(&joint_hist(&z, &x, &b, &b).unwrap()).unwrap();
        symmetric_nonneg &= a >= 0.0 && (a - c).abs() < 1e-12;
    }
    let pass = worst <= 1e-12 && symmetric_nonneg;
    assert!(report(6, "MI oracle", pass, format!("max |error| {worst:.2e}, symmetry/nonnegativity {symmetric_nonneg}")));
}

/// Correlated standard normal pairs, offset and scaled onto a fine integer
/// grid so equal-width binning sees the continuous shape.
fn to_grid(v: &[f64]) -> Vec<u32> {
    v.iter().map(|x| ((x + 20.0) * 10_000.0).round() as u32).collect()
}

fn binned_mi(a: &[f64], b: &[f64]) -> f64 {
    let bins = Binning::EqualWidth { bins: 64 };
    mutual_info(&joint_hist(&to_grid(a), &to_grid(b), &bins, &bins).unwrap()).unwrap()
}

#[test]
fn criterion_07_gaussian_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let rho: f64 = 0.6;
    let n = 100_000;
    let y: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let z: Vec<f64> = y.iter().map(|&y| rho * y + (1.0 - rho * rho).sqrt() * rng.sample::<f64, _>(StandardNormal)).collect();
    let mi = binned_mi(&y, &z);
    let exact = -0.5 * (1.0 - rho * rho).ln();
    assert!(report(7, "Gaussian closed form", (mi - exact).abs() <= 0.05, format!("{mi:.4} nats vs {exact:.4}")));
}

#[test]
fn criterion_08_noise_lowers_mi() {
    let rho: f64 = 0.8;
    let n = 100_000;
    let mut wins = 0;
    for trial in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(800 + trial);
        let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let z: Vec<f64> = x.iter().map(|&x| rho * x + (1.0 - rho * rho).sqrt() * rng.sample::<f64, _>(StandardNormal)).collect();
        let y: Vec<f64> = x.iter().map(|&x| x + rng.sample::<f64, _>(StandardNormal)).collect();
        if binned_mi(&x, &z) > binned_mi(&y, &z) {
            wins += 1;
        }
    }
    assert!(report(8, "noise lowers MI", wins >= 95, format!("{wins}/100 trials")));
}

#[test]
fn criterion_09_calibration() {
    let stream = parse_stream(&thirty_second_stream(&EncoderProfile::gaussian("p", 150.0, 10.0, 0.5), 9)).unwrap();
    let series = stream.extract_series(ChannelPolicy::First).unwrap();
    let spec = BinSpec::per_value((130..170).collect::<BTreeSet<u32>>());

    let identity = extended_features_with(&series, &spec, &CalibrationSpec::default(), |s: &FieldSeries, _| Ok(s.clone())).unwrap();
    let identity_zero = identity.values[..16].iter().all(|&v| v == 0.0);

    let cal = CalibrationSpec { r: 2, c_r: 1.0, key_seed: 77 };
    let f = extended_features(&series, &spec, &cal).unwrap();
    let reference = base_features(&series, &spec).unwrap().values;
    let d1: Vec<f64> = reference.iter().zip(base_features(&reembed_series(&series, 78, 1.0).unwrap(), &spec).unwrap().values).map(|(a, b)| a - b).collect();
    let d2: Vec<f64> = reference.iter().zip(base_features(&reembed_series(&series, 79, 1.0).unwrap(), &spec).unwrap().values).map(|(a, b)| a - b).collect();
    let mut worst = 0.0f64;
    for j in 0..8 {
        worst = worst.max((f.values[j] - (d1[j] + d2[j]) / 2.0).abs());
        worst = worst.max((f.values[8 + j] - (d1[j] - d2[j]).abs() / 2f64.sqrt()).abs());
    }
    let deterministic = extended_features(&series, &spec, &cal).unwrap() == f;

    let pass = identity_zero && worst <= 1e-12 && deterministic;
    assert!(report(9, "calibration", pass, format!("identity zero {identity_zero}, r = 2 error {worst:.2e}, deterministic {deterministic}")));
}

#[test]
fn criterion_10_scaler() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let scales = [1e-6, 1.0, 3.0, 1e3, 1e6, 42.0];
    let rows: Vec<Vec<f64>> = (0..200).map(|_| scales.iter().map(|s| s * rng.random_range(-5.0..5.0) + s * 7.0).collect()).collect();
    let scaled = fit_scaler(&rows).unwrap().apply(&rows).unwrap();
    let n = scaled.len() as f64;
    let (mut worst_mean, mut worst_std) = (0.0f64, 0.0f64);
    for j in 0..scales.len() {
        let mean = scaled.iter().map(|r| r[j]).sum::<f64>() / n;
        let std = (scaled.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        worst_mean = worst_mean.max(mean.abs());
        worst_std = worst_std.max((std - 1.0).abs());
    }
    let pass = worst_mean < 1e-9 && worst_std < 1e-9;
    assert!(report(10, "scaler", pass, format!("max |mean| {worst_mean:.2e}, max |std - 1| {worst_std:.2e}")));
}

#[test]
fn criterion_11_svm() {
    let two = svm_train(&[vec![-1.0, 0.0], vec![1.0, 0.0]], &[0, 1], &SvmParams::new(Kernel::Linear, 10.0)).unwrap();
    let two_ok = two.predict(&[-1.0, 0.0]).unwrap().0 == 0 && two.predict(&[1.0, 0.0]).unwrap().0 == 1;

    let xor_x: Vec<Vec<f64>> = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]];
    let xor_y = [0, 0, 1, 1];
    let xor = svm_train(&xor_x, &xor_y, &SvmParams::new(Kernel::Rbf { gamma: 2.0 }, 100.0)).unwrap();
    let xor_ok = xor_x.iter().zip(&xor_y).all(|(x, &y)| xor.predict(x).unwrap().0 == y);

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let x: Vec<Vec<f64>> = (0..150).map(|_| (0..3).map(|_| rng.sample(StandardNormal)).collect()).collect();
    let y: Vec<i32> = x.iter().map(|r| i32::from(r[0] + 0.5 * r[1] + 0.7 * rng.sample::<f64, _>(StandardNormal) > 0.0)).collect();
    let (model, smo) = svm_train_with_report(&x, &y, &SvmParams::new(Kernel::Rbf { gamma: 0.5 }, 1.0), false).unwrap();
    let worst = x
        .iter()
        .map(|row| {
            let oracle: f64 = model.support_vectors.iter().zip(&model.dual_coefs).map(|(sv, a)| a * (-0.5 * sv.iter().zip(row).map(|(p, q)| (p - q).powi(2)).sum::<f64>()).exp()).sum::<f64>()
                + model.bias;
            (model.decision(row).unwrap() - oracle).abs()
        })
        .fold(0.0f64, f64::max);

    let pass = two_ok && xor_ok && smo.converged && smo.kkt_gap <= 1e-3 && worst <= 1e-9;
    assert!(report(11, "SVM", pass, format!("two-point {two_ok}, XOR {xor_ok}, KKT gap {:.2e}, oracle error {worst:.2e}", smo.kkt_gap)));
}

#[test]
fn criterion_12_genetic_algorithm() {
    let bits = |s: &str| s.chars().map(|c| c == '1').collect::<Vec<bool>>();
    let (c1, c2) = two_point_crossover(&bits("11111111"), &bits("00000000"), 2, 5);
    let crossover_ok = c1 == bits("11000111") && c2 == bits("00111000");

    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut mask = bits("1010110010");
    let mut oracle_rng = rng.clone();
    gainsteg::learn::ga::mutate(&mut mask, 0.5, &mut rng);
    let expected: Vec<bool> = bits("1010110010").into_iter().map(|b| if oracle_rng.random::<f64>() < 0.5 { oracle_rng.random() } else { b }).collect();
    let mut untouched = bits("1010110010");
    gainsteg::learn::ga::mutate(&mut untouched, 0.0, &mut rng);
    let mutation_ok = mask == expected && untouched == bits("1010110010");

    let mut reached = 0;
    let mut monotone = true;
    for seed in 0..100 {
        let cfg = GaConfig { seed, ..GaConfig::default() };
        let r = ga_select(20, &cfg, |m| Ok(m.iter().filter(|&&b| b).count() as f64)).unwrap();
        if r.best_fitness == 20.0 {
            reached += 1;
        }
        monotone &= r.trace.windows(2).all(|w| w[1] >= w[0]);
    }
    let pass = crossover_ok && mutation_ok && reached >= 95 && monotone;
    assert!(report(12, "genetic algorithm", pass, format!("crossover {crossover_ok}, mutation {mutation_ok}, {reached}/100 reached all-ones, monotone {monotone}")));
}

/// Two encoders with disjoint gain supports. `enc_a` is strongly
/// autocorrelated with a tight part2_3_length relation; `enc_b` is nearly
/// white with a loose one, so its stego signal is weak and gets drowned
/// when both encoders share one scaler and kernel width.
fn two_profile_request(n_per_profile: usize, seed: u64) -> CorpusRequest {
    let mut a = EncoderProfile::gaussian("enc_a", 110.0, 8.0, 0.9);
    a.p_given_g.noise_std = 120.0;
    let mut b = EncoderProfile::gaussian("enc_b", 190.0, 4.0, 0.06);
    b.p_given_g.noise_std = 400.0;
    CorpusRequest { profiles: vec![a, b], n_per_profile, clip_seconds: 30.0, capacity_fractions: vec![1.0], seed, format: StreamFormat::default() }
}

#[test]
fn criterion_13_layered_beats_pooled() {
    let corpus = Corpus::new(gen_synthetic_manifest(&two_profile_request(200, 1)).unwrap(), Source::Synthetic);
    let data = Dataset::load(&corpus, ChannelPolicy::First).unwrap();
    let opts = TrainOptions::default();
    let single = cross_validate_model(&data, Architecture::Single, &opts, 10, 1).unwrap().mean_accuracy;
    let multi = cross_validate_model(&data, Architecture::Multi, &opts, 10, 1).unwrap().mean_accuracy;

    let (train_c, test_c) = corpus.split(0.3, 7);
    let model = train(&Dataset::load(&train_c, ChannelPolicy::First).unwrap(), Architecture::Multi, &opts).unwrap();
    let layer1 = evaluate(&model, &Dataset::load(&test_c, ChannelPolicy::First).unwrap(), false).unwrap().layer1_accuracy.unwrap();

    let pass = multi >= single + 0.05 && layer1 >= 0.99;
    assert!(report(13, "layered beats pooled", pass, format!("10-fold single {single:.4}, multi {multi:.4}, layer-1 {layer1:.4}")));
}

#[test]
fn criterion_14_oracle_routing() {
    let corpus = Corpus::new(gen_synthetic_manifest(&two_profile_request(40, 14)).unwrap(), Source::Synthetic);
    let (train_c, test_c) = corpus.split(0.3, 14);
    let train_d = Dataset::load(&train_c, ChannelPolicy::First).unwrap();
    let test_d = Dataset::load(&test_c, ChannelPolicy::First).unwrap();
    let opts = TrainOptions::default();
    let multi = train(&train_d, Architecture::Multi, &opts).unwrap();
    let mut agree = 0;
    for enc in ["enc_a", "enc_b"] {
        let standalone = build_single_layer(&train_d.filter(|e| e.encoder_label == enc), false, &opts).unwrap();
        let test = test_d.filter(|e| e.encoder_label == enc);
        for s in &test.series {
            let routed = multi.predict(s, Some(enc)).unwrap();
            let alone = standalone.predict(s, None).unwrap();
            if routed.class == alone.class && routed.decision == alone.decision {
                agree += 1;
            }
        }
    }
    assert!(report(14, "oracle routing", agree == test_d.len(), format!("{agree}/{} files agree", test_d.len())));
}

#[test]
fn criterion_15_roc() {
    let perfect = roc_curve(&[3.0, 2.0, 1.5, 0.1, -1.0, -2.0], &[true, true, true, false, false, false]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let scores: Vec<f64> = (0..10_000).map(|_| rng.random()).collect();
    let labels: Vec<bool> = (0..10_000).map(|_| rng.random()).collect();
    let permuted = roc_curve(&scores, &labels).unwrap();
    let endpoints = [&perfect, &permuted].iter().all(|r| r.points.first() == Some(&(0.0, 0.0)) && r.points.last() == Some(&(1.0, 1.0)));
    let pass = perfect.auc == 1.0 && (permuted.auc - 0.5).abs() <= 0.03 && endpoints;
    assert!(report(15, "ROC", pass, format!("perfect AUC {}, permuted AUC {:.4}, endpoints {endpoints}", perfect.auc, permuted.auc)));
}

#[test]
fn criterion_16_end_to_end() {
    let t = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let manifest = gen_synthetic_corpus(&two_profile_request(100, 16), dir.path()).unwrap();
    let corpus = Corpus::new(manifest, Source::Disk(dir.path().to_path_buf()));
    let (train_c, test_c) = corpus.split(0.3, 16);
    let train_d = Dataset::load(&train_c, ChannelPolicy::First).unwrap();
    let test_d = Dataset::load(&test_c, ChannelPolicy::First).unwrap();

    let opts = TrainOptions::default();
    let spec = BinSpec::per_value((0..256).collect());
    let mut table = FeatureTable::new(gainsteg::features::feature_names(opts.features.kind));
    for (e, s) in train_d.entries.iter().zip(&train_d.series) {
        let values = extended_features(s, &spec, &opts.features.calibration).unwrap().values;
        table.push(FeatureRow { file_id: e.file_id.clone(), encoder_label: e.encoder_label.clone(), class_label: e.class_label, capacity: e.capacity_fraction, values }).unwrap();
    }
    let mut csv = Vec::new();
    table.write_csv(&mut csv).unwrap();
    assert_eq!(FeatureTable::read_csv(&csv[..]).unwrap().rows.len(), train_d.len());

    let model = train(&train_d, Architecture::Multi, &opts).unwrap();
    save_bundle(&dir.path().join("bundle"), &model).unwrap();
    let reloaded = load_bundle(&dir.path().join("bundle")).unwrap();
    let r = evaluate(&reloaded, &test_d, false).unwrap();
    let elapsed = t.elapsed();

    let pass = elapsed < Duration::from_secs(600) && r.accuracy > 0.5;
    assert!(report(16, "end-to-end desk run", pass, format!("{} train / {} test files, accuracy {:.4}, {elapsed:?}", train_d.len(), test_d.len(), r.accuracy)));
}
