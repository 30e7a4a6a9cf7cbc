//! MPEG audio frame headers. Only MPEG-1 Layer III is accepted; other
//! versions and layers are recognised just well enough to be rejected.

use serde::{Deserialize, Serialize};

/// Samples carried by one MPEG-1 Layer III frame (two granules of 576).
pub const SAMPLES_PER_FRAME: u32 = 1152;
pub const GRANULES_PER_FRAME: usize = 2;
pub const HEADER_BYTES: usize = 4;
pub const CRC_BYTES: usize = 2;

const BITRATES_KBPS: [u32; 16] = [0, 32, 40, 48, 56, 64, 80, 96, 112, 128, 160, 192, 224, 256, 320, 0];
const SAMPLE_RATES: [u32; 4] = [44100, 48000, 32000, 0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelMode {
    Stereo,
    JointStereo,
    DualChannel,
    Mono,
}

impl ChannelMode {
    fn from_bits(bits: u8) -> Self {
        match bits & 3 {
            0 => ChannelMode::Stereo,
            1 => ChannelMode::JointStereo,
            2 => ChannelMode::DualChannel,
            _ => ChannelMode::Mono,
        }
    }

    fn to_bits(self) -> u8 {
        match self {
            ChannelMode::Stereo => 0,
            ChannelMode::JointStereo => 1,
            ChannelMode::DualChannel => 2,
            ChannelMode::Mono => 3,
        }
    }

    pub fn channels(self) -> usize {
        if self == ChannelMode::Mono {
            1
        } else {
            2
        }
    }

    /// Side-information size in bytes for this mode.
    pub fn side_info_len(self) -> usize {
        if self == ChannelMode::Mono {
            17
        } else {
            32
        }
    }
}

/// Outcome of inspecting four bytes that might start a frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HeaderProbe {
    /// A usable MPEG-1 Layer III header.
    Valid(FrameHeader),
    /// Sync and plausible fields, but another MPEG version or layer.
    Unsupported { version: &'static str, layer: u8 },
    /// Not a header (no sync, reserved or free-format fields).
    Invalid,
}

/// Decoded MPEG-1 Layer III frame header.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameHeader {
    pub crc_present: bool,
    pub bitrate_kbps: u32,
    pub sample_rate: u32,
    pub padding: bool,
    pub private_bit: bool,
    pub channel_mode: ChannelMode,
    pub mode_extension: u8,
    pub copyright: bool,
    pub original: bool,
    pub emphasis: u8,
}

impl FrameHeader {
    /// Builds a header for the given bitrate and sample rate. Returns `None`
    /// if either is not representable in MPEG-1 Layer III.
    pub fn new(bitrate_kbps: u32, sample_rate: u32, channel_mode: ChannelMode) -> Option<Self> {
        bitrate_index(bitrate_kbps)?;
        sample_rate_index(sample_rate)?;
        Some(Self {
            crc_present: false,
            bitrate_kbps,
            sample_rate,
            padding: false,
            private_bit: false,
            channel_mode,
            mode_extension: 0,
            copyright: false,
            original: true,
            emphasis: 0,
        })
    }

    pub fn probe(bytes: &[u8]) -> HeaderProbe {
        if bytes.len() < HEADER_BYTES || bytes[0] != 0xFF || bytes[1] & 0xE0 != 0xE0 {
            return HeaderProbe::Invalid;
        }
        let version = (bytes[1] >> 3) & 3;
        let layer = (bytes[1] >> 1) & 3;
        let bitrate_idx = (bytes[2] >> 4) as usize;
        let rate_idx = ((bytes[2] >> 2) & 3) as usize;
        if version == 1 || layer == 0 || bitrate_idx == 0 || bitrate_idx == 15 || rate_idx == 3 {
            return HeaderProbe::Invalid;
        }
        // emphasis value 2 is reserved
        if bytes[3] & 3 == 2 {
            return HeaderProbe::Invalid;
        }
        let layer_number = 4 - layer;
        if version != 3 || layer_number != 3 {
            let version = match version {
                3 => "MPEG-1",
                2 => "MPEG-2",
                _ => "MPEG-2.5",
            };
            return HeaderProbe::Unsupported { version, layer: layer_number };
        }
        HeaderProbe::Valid(FrameHeader {
            crc_present: bytes[1] & 1 == 0,
            bitrate_kbps: BITRATES_KBPS[bitrate_idx],
            sample_rate: SAMPLE_RATES[rate_idx],
            padding: (bytes[2] >> 1) & 1 == 1,
            private_bit: bytes[2] & 1 == 1,
            channel_mode: ChannelMode::from_bits(bytes[3] >> 6),
            mode_extension: (bytes[3] >> 4) & 3,
            copyright: (bytes[3] >> 3) & 1 == 1,
            original: (bytes[3] >> 2) & 1 == 1,
            emphasis: bytes[3] & 3,
        })
    }

    /// Parses a header, returning `None` unless it is MPEG-1 Layer III.
    pub fn parse(bytes: &[u8]) -> Option<Self> {
        match Self::probe(bytes) {
            HeaderProbe::Valid(h) => Some(h),
            _ => None,
        }
    }

    pub fn to_bytes(&self) -> [u8; 4] {
        let bitrate_idx = bitrate_index(self.bitrate_kbps).expect("bitrate validated at construction");
        let rate_idx = sample_rate_index(self.sample_rate).expect("sample rate validated at construction");
        [
            0xFF,
            0xE0 | (3 << 3) | (1 << 1) | u8::from(!self.crc_present),
            (bitrate_idx << 4) | (rate_idx << 2) | (u8::from(self.padding) << 1) | u8::from(self.private_bit),
            (self.channel_mode.to_bits() << 6)
                | ((self.mode_extension & 3) << 4)
                | (u8::from(self.copyright) << 3)
                | (u8::from(self.original) << 2)
                | (self.emphasis & 3),
        ]
    }

    /// Frame length in bytes: `floor(144 * bitrate / sample_rate) + padding`.
    pub fn frame_len(&self) -> usize {
        (144 * self.bitrate_kbps as usize * 1000) / self.sample_rate as usize + usize::from(self.padding)
    }

    pub fn channels(&self) -> usize {
        self.channel_mode.channels()
    }

    /// Offset of the side information from the start of the frame.
    pub fn side_info_offset(&self) -> usize {
        HEADER_BYTES + if self.crc_present { CRC_BYTES } else { 0 }
    }

    /// Two headers can belong to the same elementary stream.
    pub fn compatible_with(&self, other: &FrameHeader) -> bool {
        self.sample_rate == other.sample_rate
    }
}

fn bitrate_index(kbps: u32) -> Option<u8> {
    BITRATES_KBPS[1..15].iter().position(|&b| b == kbps).map(|i| i as u8 + 1)
}

fn sample_rate_index(rate: u32) -> Option<u8> {
    SAMPLE_RATES[..3].iter().position(|&r| r == rate).map(|i| i as u8)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decodes_common_128k_header() {
        let h = FrameHeader::parse(&[0xFF, 0xFB, 0x90, 0x00]).unwrap();
        assert_eq!(h.bitrate_kbps, 128);
        assert_eq!(h.sample_rate, 44100);
        assert!(!h.padding);
        assert!(!h.crc_present);
        assert_eq!(h.channel_mode, ChannelMode::Stereo);
        assert_eq!(h.frame_len(), 417);
        assert_eq!(h.to_bytes(), [0xFF, 0xFB, 0x90, 0x00]);
    }

    #[test]
    fn frame_lengths_match_reference_table() {
        // (kbps, rate, padding, expected bytes)
        let table = [
            (128, 44100, true, 418),
            (320, 44100, false, 1044),
            (32, 32000, false, 144),
            (192, 48000, false, 576),
            (64, 44100, false, 208),
            (112, 32000, true, 505),
        ];
        for (kbps, rate, pad, expected) in table {
            let mut h = FrameHeader::new(kbps, rate, ChannelMode::Mono).unwrap();
            h.padding = pad;
            assert_eq!(h.frame_len(), expected, "{kbps} kbps @ {rate}");
        }
    }

    #[test]
    fn rejects_other_versions_and_reserved_fields() {
        // MPEG-2 Layer III
        assert!(matches!(
            FrameHeader::probe(&[0xFF, 0xF3, 0x90, 0x00]),
            HeaderProbe::Unsupported { version: "MPEG-2", layer: 3 }
        ));
        // MPEG-1 Layer II
        assert!(matches!(FrameHeader::probe(&[0xFF, 0xFD, 0x90, 0x00]), HeaderProbe::Unsupported { layer: 2, .. }));
        // free format
        assert_eq!(FrameHeader::probe(&[0xFF, 0xFB, 0x00, 0x00]), HeaderProbe::Invalid);
        // bad bitrate index
        assert_eq!(FrameHeader::probe(&[0xFF, 0xFB, 0xF0, 0x00]), HeaderProbe::Invalid);
        // reserved sample rate
        assert_eq!(FrameHeader::probe(&[0xFF, 0xFB, 0x9C, 0x00]), HeaderProbe::Invalid);
        // no sync
        assert_eq!(FrameHeader::probe(&[0xFF, 0x7B, 0x90, 0x00]), HeaderProbe::Invalid);
    }

    #[test]
    fn every_valid_header_round_trips() {
        for b1 in [0xFAu8, 0xFB] {
            for b2 in 0..=255u8 {
                for b3 in [0x00u8, 0x44, 0xC0, 0x7F, 0xF1] {
                    let bytes = [0xFF, b1, b2, b3];
                    if let Some(h) = FrameHeader::parse(&bytes) {
                        assert_eq!(h.to_bytes(), bytes);
                    }
                }
            }
        }
    }
}
