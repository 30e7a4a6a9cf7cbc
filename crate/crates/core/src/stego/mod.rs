//! Keyed LSB embedding of messages into global_gain fields.
//!
//! A message is XORed with a key-derived keystream and then written into the
//! least significant bit of the global gain of each selected granule
//! (`gain' = (gain & 0xFE) | bit`). Granules are selected either
//! consecutively with a fixed spacing (legacy behaviour, where the first
//! frames are always used) or by a key-seeded permutation truncated to a
//! capacity fraction and sorted ascending.
//!
//! Message bytes map to bits most-significant bit first.

pub mod keystream;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bitstream::{parse_stream, BitstreamError, ChannelPolicy, FieldSeries, SideInfoStream};
use keystream::{SplitMix64, MESSAGE_DOMAIN, SELECTION_DOMAIN};

#[derive(Debug, thiserror::Error)]
pub enum StegoError {
    #[error("message of {len} bits exceeds capacity of {capacity} bits")]
    MessageTooLong { len: usize, capacity: usize },
    #[error("requested length {length} exceeds capacity of {capacity} bits")]
    LengthExceedsCapacity { length: usize, capacity: usize },
    #[error("inputs differ in length ({left} vs {right} bytes)")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid embedding spec: {0}")]
    InvalidSpec(String),
    #[error("invalid key {0:?}: expected up to 16 hexadecimal digits")]
    InvalidKey(String),
    #[error(transparent)]
    Bitstream(#[from] BitstreamError),
}

/// 64-bit embedding key. Canonical text form is 16 hex digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StegoKey(pub u64);

impl StegoKey {
    /// Scrambling keystream of `n` bits.
    pub fn keystream(&self, n: usize) -> Vec<bool> {
        SplitMix64::new(self.0).bits(n)
    }
}

impl fmt::Display for StegoKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl FromStr for StegoKey {
    type Err = StegoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits = s.trim().trim_start_matches("0x").trim_start_matches("0X");
        if digits.is_empty() || digits.len() > 16 {
            return Err(StegoError::InvalidKey(s.to_string()));
        }
        u64::from_str_radix(digits, 16).map(StegoKey).map_err(|_| StegoError::InvalidKey(s.to_string()))
    }
}

/// Deterministic keystream of `n` bits for `key`.
pub fn keystream(key: StegoKey, n: usize) -> Vec<bool> {
    key.keystream(n)
}

/// Uniform random message of `len` bits derived from `seed`.
pub fn random_message(seed: u64, len: usize) -> Message {
    Message::from_bits(SplitMix64::new(seed ^ MESSAGE_DOMAIN).bits(len))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum Selection {
    /// Granules `0, s, 2s, ...` in order.
    LegacyConsecutive { bit_spacing: usize },
    /// Key-seeded permutation truncated to `floor(fraction * total)`, sorted.
    KeyedRandom { capacity_fraction: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbedSpec {
    pub selection: Selection,
    #[serde(default)]
    pub channels: ChannelPolicy,
}

impl EmbedSpec {
    pub fn keyed(capacity_fraction: f64) -> Self {
        Self { selection: Selection::KeyedRandom { capacity_fraction }, channels: ChannelPolicy::First }
    }

    pub fn legacy(bit_spacing: usize) -> Self {
        Self { selection: Selection::LegacyConsecutive { bit_spacing }, channels: ChannelPolicy::First }
    }

    pub fn validate(&self) -> Result<(), StegoError> {
        match self.selection {
            Selection::LegacyConsecutive { bit_spacing } if bit_spacing == 0 => {
                Err(StegoError::InvalidSpec("bit spacing must be at least 1".into()))
            }
            Selection::KeyedRandom { capacity_fraction } if !(capacity_fraction > 0.0 && capacity_fraction <= 1.0) => {
                Err(StegoError::InvalidSpec(format!("capacity fraction {capacity_fraction} outside (0, 1]")))
            }
            _ => Ok(()),
        }
    }

    /// Number of granules selected out of `total`.
    pub fn selected_count(&self, total: usize) -> usize {
        match self.selection {
            Selection::LegacyConsecutive { bit_spacing } => total.div_ceil(bit_spacing.max(1)),
            Selection::KeyedRandom { capacity_fraction } => {
                // tolerance keeps e.g. 0.29 * 100 from flooring to 28
                let count = (capacity_fraction * total as f64 + 1e-9).floor() as usize;
                count.min(total)
            }
        }
    }
}

impl Default for EmbedSpec {
    fn default() -> Self {
        Self::keyed(1.0)
    }
}

/// A message as a bit sequence.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Message {
    pub bits: Vec<bool>,
}

impl Message {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// MSB-first expansion of `bytes`.
    pub fn from_bytes(bytes: &[u8]) -> Self {
        let bits = bytes.iter().flat_map(|&b| (0..8).rev().map(move |i| (b >> i) & 1 == 1)).collect();
        Self { bits }
    }

    /// Packs bits MSB-first; a trailing partial byte is zero-padded.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.bits
            .chunks(8)
            .map(|chunk| chunk.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | (u8::from(b) << (7 - i))))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// Ordered granule indices used for embedding.
pub fn select_granules(key: StegoKey, total: usize, spec: &EmbedSpec) -> Vec<usize> {
    match spec.selection {
        Selection::LegacyConsecutive { bit_spacing } => (0..total).step_by(bit_spacing.max(1)).collect(),
        Selection::KeyedRandom { .. } => {
            let count = spec.selected_count(total);
            let mut rng = SplitMix64::new(key.0 ^ SELECTION_DOMAIN);
            let mut perm: Vec<usize> = (0..total).collect();
            // partial Fisher-Yates: the first `count` entries of a uniform permutation
            for i in 0..count {
                let j = i + rng.below((total - i) as u64) as usize;
                perm.swap(i, j);
            }
            perm.truncate(count);
            perm.sort_unstable();
            perm
        }
    }
}

/// Whether message bits are XORed with the keystream before embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scrambling {
    Keyed,
    /// Raw message bits go straight into the LSBs. Only meant for
    /// experiments on biased messages.
    Disabled,
}

fn payload_bits(message: &Message, key: StegoKey, scrambling: Scrambling) -> Vec<bool> {
    match scrambling {
        Scrambling::Keyed => message.bits.iter().zip(key.keystream(message.len())).map(|(&m, k)| m ^ k).collect(),
        Scrambling::Disabled => message.bits.clone(),
    }
}

/// LSB-replacement assignments for the granules whose gain actually changes.
fn lsb_assignments(gains: &[u8], positions: &[usize], bits: &[bool]) -> BTreeMap<usize, u8> {
    positions
        .iter()
        .zip(bits)
        .filter_map(|(&k, &bit)| {
            let new = (gains[k] & 0xFE) | u8::from(bit);
            (new != gains[k]).then_some((k, new))
        })
        .collect()
}

fn plan(stream: &SideInfoStream, message: &Message, key: StegoKey, spec: &EmbedSpec, scrambling: Scrambling) -> Result<BTreeMap<usize, u8>, StegoError> {
    spec.validate()?;
    let gains = stream.global_gains(spec.channels)?;
    let positions = select_granules(key, gains.len(), spec);
    if message.len() > positions.len() {
        return Err(StegoError::MessageTooLong { len: message.len(), capacity: positions.len() });
    }
    Ok(lsb_assignments(&gains, &positions, &payload_bits(message, key, scrambling)))
}

/// Embeds `message` and returns the stego file bytes.
pub fn embed(stream: &SideInfoStream, message: &Message, key: StegoKey, spec: &EmbedSpec) -> Result<Vec<u8>, StegoError> {
    embed_with(stream, message, key, spec, Scrambling::Keyed)
}

pub fn embed_with(stream: &SideInfoStream, message: &Message, key: StegoKey, spec: &EmbedSpec, scrambling: Scrambling) -> Result<Vec<u8>, StegoError> {
    let assignments = plan(stream, message, key, spec, scrambling)?;
    Ok(stream.write_global_gains(spec.channels, &assignments)?)
}

/// Embeds without scrambling. Used to reproduce the parity bias that
/// non-uniform messages leave in the gain histogram.
pub fn embed_unscrambled(stream: &SideInfoStream, message: &Message, key: StegoKey, spec: &EmbedSpec) -> Result<Vec<u8>, StegoError> {
    embed_with(stream, message, key, spec, Scrambling::Disabled)
}

/// Embeds and returns the updated parsed stream.
pub fn embed_stream(stream: &SideInfoStream, message: &Message, key: StegoKey, spec: &EmbedSpec) -> Result<SideInfoStream, StegoError> {
    let assignments = plan(stream, message, key, spec, Scrambling::Keyed)?;
    Ok(stream.with_global_gains(spec.channels, &assignments)?)
}

/// Applies the same embedding directly to an extracted field series. The
/// series must have been extracted with `spec.channels`.
pub fn embed_series(series: &FieldSeries, message: &Message, key: StegoKey, spec: &EmbedSpec) -> Result<FieldSeries, StegoError> {
    spec.validate()?;
    let positions = select_granules(key, series.len(), spec);
    if message.len() > positions.len() {
        return Err(StegoError::MessageTooLong { len: message.len(), capacity: positions.len() });
    }
    let mut out = series.clone();
    for (&k, bit) in positions.iter().zip(payload_bits(message, key, Scrambling::Keyed)) {
        out.set_gain(k, (series.gain[k] & !1) | u32::from(bit));
    }
    Ok(out)
}

/// Recovers `length` message bits from stego bytes.
pub fn extract(bytes: &[u8], key: StegoKey, spec: &EmbedSpec, length: usize) -> Result<Message, StegoError> {
    let stream = parse_stream(bytes)?;
    extract_from_stream(&stream, key, spec, length)
}

pub fn extract_from_stream(stream: &SideInfoStream, key: StegoKey, spec: &EmbedSpec, length: usize) -> Result<Message, StegoError> {
    spec.validate()?;
    let gains = stream.global_gains(spec.channels)?;
    let positions = select_granules(key, gains.len(), spec);
    if length > positions.len() {
        return Err(StegoError::LengthExceedsCapacity { length, capacity: positions.len() });
    }
    let bits = positions[..length]
        .iter()
        .zip(key.keystream(length))
        .map(|(&k, ks)| (gains[k] & 1 == 1) ^ ks)
        .collect();
    Ok(Message::from_bits(bits))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Capacity {
    pub bits: usize,
    pub bits_per_second: f64,
}

/// Capacity of `stream` under `spec`; the rate divides by the stream
/// duration `frames * 1152 / sample_rate`.
pub fn max_capacity(stream: &SideInfoStream, spec: &EmbedSpec) -> Result<Capacity, StegoError> {
    spec.validate()?;
    let bits = spec.selected_count(stream.granule_count(spec.channels)?);
    Ok(Capacity { bits, bits_per_second: bits as f64 / stream.duration_seconds() })
}

/// Percentage of differing bits between two equal-length byte sequences.
pub fn modification_rate(cover: &[u8], stego: &[u8]) -> Result<f64, StegoError> {
    if cover.len() != stego.len() {
        return Err(StegoError::LengthMismatch { left: cover.len(), right: stego.len() });
    }
    if cover.is_empty() {
        return Ok(0.0);
    }
    let differing: u64 = cover.iter().zip(stego).map(|(a, b)| u64::from((a ^ b).count_ones())).sum();
    Ok(100.0 * differing as f64 / (8.0 * cover.len() as f64))
}
