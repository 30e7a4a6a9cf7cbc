//! Synthetic encoder profiles and minimal mp3 stream synthesis.
//!
//! A profile describes how one encoder's side information behaves. Global
//! gains follow a sticky chain: each granule repeats the previous gain with
//! probability `gg_ar_coefficient` and otherwise draws a fresh value from
//! `gg_marginal`. Block type, part2_3_length and table_select are drawn
//! conditionally on the gain:
//!
//! - window switching happens with probability `2 * block_switch_prob * F(g)`
//!   (clamped to 1), where `F` is the marginal CDF;
//! - `part2_3_length = intercept + slope * g + N(0, noise_std)`, clamped to
//!   12 bits;
//! - `table_select[0] = (draw from table_select_dist + g / 8) mod 32`.
//!
//! Frames carry valid headers and side information and zero-filled main
//! data.

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::bitstream::{ChannelMode, FrameHeader, FrameSideInfo, GranuleChannelInfo, SAMPLES_PER_FRAME, TABLE_SELECT_ABSENT};

use super::PipelineError;

const NORMALISATION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartLengthModel {
    pub intercept: f64,
    pub slope: f64,
    pub noise_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderProfile {
    pub name: String,
    /// Probabilities of gains 0..=255.
    pub gg_marginal: Vec<f64>,
    pub gg_ar_coefficient: f64,
    pub block_switch_prob: f64,
    pub p_given_g: PartLengthModel,
    /// Probabilities of table indices 0..=31.
    pub table_select_dist: Vec<f64>,
}

/// Discretised normal weights over `0..=255`, truncated to `center +- 3 spread`.
fn truncated_normal(center: f64, spread: f64) -> Vec<f64> {
    let lo = (center - 3.0 * spread).ceil().max(0.0);
    let hi = (center + 3.0 * spread).floor().min(255.0);
    let mut w: Vec<f64> = (0..256)
        .map(|v| {
            let v = v as f64;
            if v < lo || v > hi {
                0.0
            } else {
                (-0.5 * ((v - center) / spread).powi(2)).exp()
            }
        })
        .collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

impl EncoderProfile {
    /// A profile with a truncated-normal gain marginal and mild defaults
    /// for the other fields.
    pub fn gaussian(name: &str, center: f64, spread: f64, ar: f64) -> Self {
        let tables = truncated_normal(12.0, 4.0);
        let head: f64 = tables[..32].iter().sum();
        Self {
            name: name.to_string(),
            gg_marginal: truncated_normal(center, spread),
            gg_ar_coefficient: ar,
            block_switch_prob: 0.1,
            p_given_g: PartLengthModel { intercept: 2600.0, slope: -8.0, noise_std: 120.0 },
            table_select_dist: tables[..32].iter().map(|x| x / head).collect(),
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::InvalidProfile(format!("{}: {m}", self.name)));
        if self.name.is_empty() {
            return bad("empty name".into());
        }
        for (label, dist, len) in [("gg_marginal", &self.gg_marginal, 256), ("table_select_dist", &self.table_select_dist, 32)] {
            if dist.len() != len {
                return bad(format!("{label} needs {len} entries, has {}", dist.len()));
            }
            if dist.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return bad(format!("{label} has a negative or non-finite entry"));
            }
            let sum: f64 = dist.iter().sum();
            if (sum - 1.0).abs() > NORMALISATION_TOLERANCE {
                return bad(format!("{label} sums to {sum}"));
            }
        }
        if !(0.0..1.0).contains(&self.gg_ar_coefficient) {
            return bad(format!("AR coefficient {} outside [0, 1)", self.gg_ar_coefficient));
        }
        if !(0.0..=1.0).contains(&self.block_switch_prob) {
            return bad(format!("block switch probability {} outside [0, 1]", self.block_switch_prob));
        }
        let p = &self.p_given_g;
        if !(p.intercept.is_finite() && p.slope.is_finite() && p.noise_std.is_finite() && p.noise_std >= 0.0) {
            return bad("part2_3_length model must be finite with non-negative noise".into());
        }
        Ok(())
    }

    /// Values with non-zero marginal probability.
    pub fn support(&self) -> Vec<u8> {
        (0..=255u8).filter(|&v| self.gg_marginal[v as usize] > 0.0).collect()
    }
}

/// Layout shared by every synthesised file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StreamFormat {
    pub bitrate_kbps: u32,
    pub sample_rate: u32,
    pub channel_mode: ChannelMode,
}

impl Default for StreamFormat {
    fn default() -> Self {
        Self { bitrate_kbps: 128, sample_rate: 44100, channel_mode: ChannelMode::Stereo }
    }
}

impl StreamFormat {
    /// Whole frames in a clip of `seconds`.
    pub fn frames_for(&self, seconds: f64) -> usize {
        (seconds * self.sample_rate as f64 / SAMPLES_PER_FRAME as f64).floor() as usize
    }

    fn header(&self) -> Result<FrameHeader, PipelineError> {
        FrameHeader::new(self.bitrate_kbps, self.sample_rate, self.channel_mode)
            .ok_or_else(|| PipelineError::InvalidProfile(format!("{} kbps at {} Hz is not MPEG-1 Layer III", self.bitrate_kbps, self.sample_rate)))
    }
}

struct GainChain {
    current: Option<u8>,
}

impl GainChain {
    fn next<R: Rng>(&mut self, rng: &mut R, marginal: &WeightedIndex<f64>, ar: f64) -> u8 {
        let g = match self.current {
            Some(prev) if rng.random::<f64>() < ar => prev,
            _ => marginal.sample(rng) as u8,
        };
        self.current = Some(g);
        g
    }
}

/// Synthesises a stream of `frames` frames following `profile`.
pub fn synthesize_stream(profile: &EncoderProfile, format: &StreamFormat, frames: usize, seed: u64) -> Result<Vec<u8>, PipelineError> {
    profile.validate()?;
    if frames == 0 {
        return Err(PipelineError::InvalidProfile("a stream needs at least one frame".into()));
    }
    let header = format.header()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let marginal = WeightedIndex::new(&profile.gg_marginal).map_err(|e| PipelineError::InvalidProfile(e.to_string()))?;
    let tables = WeightedIndex::new(&profile.table_select_dist).map_err(|e| PipelineError::InvalidProfile(e.to_string()))?;
    let noise = Normal::new(0.0, profile.p_given_g.noise_std).map_err(|e| PipelineError::InvalidProfile(e.to_string()))?;
    let cdf: Vec<f64> = profile
        .gg_marginal
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    let channels = format.channel_mode.channels();
    let mut chains: Vec<GainChain> = (0..channels).map(|_| GainChain { current: None }).collect();

    // CBR padding: pad whenever the fractional slot remainder wraps
    let slot_rem = (144 * format.bitrate_kbps as u64 * 1000) % format.sample_rate as u64;
    let mut acc = 0u64;
    let mut out = Vec::with_capacity(frames * (header.frame_len() + 1));
    for _ in 0..frames {
        let mut h = header;
        acc += slot_rem;
        if acc >= format.sample_rate as u64 {
            acc -= format.sample_rate as u64;
            h.padding = true;
        }
        let mut si = FrameSideInfo::empty(format.channel_mode);
        for gr in 0..2 {
            for (ch, chain) in chains.iter_mut().enumerate() {
                let g = chain.next(&mut rng, &marginal, profile.gg_ar_coefficient);
                si.granules[gr][ch] = granule(&mut rng, profile, g, cdf[g as usize], &tables, &noise);
            }
        }
        out.extend_from_slice(&h.to_bytes());
        out.extend_from_slice(&si.encode());
        out.resize(out.len() + h.frame_len() - h.side_info_offset() - format.channel_mode.side_info_len(), 0);
    }
    Ok(out)
}

fn granule<R: Rng>(rng: &mut R, profile: &EncoderProfile, g: u8, cdf: f64, tables: &WeightedIndex<f64>, noise: &Normal<f64>) -> GranuleChannelInfo {
    let p = &profile.p_given_g;
    let length = (p.intercept + p.slope * f64::from(g) + noise.sample(rng)).round().clamp(0.0, 4095.0) as u16;
    let table = ((tables.sample(rng) + usize::from(g) / 8) % 32) as u8;
    let switched = rng.random::<f64>() < (2.0 * profile.block_switch_prob * cdf).min(1.0);
    let mut info = GranuleChannelInfo { part2_3_length: length, big_values: (length / 16).min(288), global_gain: g, ..Default::default() };
    if switched {
        info.window_switching = true;
        info.block_type = match rng.random_range(0..4) {
            0 => 1,
            3 => 3,
            _ => 2,
        };
        info.table_select = [table, table, TABLE_SELECT_ABSENT];
    } else {
        info.table_select = [table, table, table];
        info.region0_count = 7;
        info.region1_count = 7;
    }
    info
}
