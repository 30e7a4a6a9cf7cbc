//! Frame location, whole-stream parsing and selective global_gain rewriting.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::bits::write_bits_at;
use super::header::{FrameHeader, HeaderProbe, GRANULES_PER_FRAME, HEADER_BYTES, SAMPLES_PER_FRAME};
use super::side_info::FrameSideInfo;
use super::BitstreamError;

/// Which channel(s) of a multi-channel stream map onto the granule index
/// space used for series extraction and embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy", content = "channel")]
pub enum ChannelPolicy {
    /// Channel 0 only.
    #[default]
    First,
    /// A single explicit channel.
    Channel(usize),
    /// All of channel 0, then all of channel 1 (mono frames contribute only
    /// to the first block).
    Concatenated,
}

/// Location of one granule/channel record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GranuleSlot {
    pub frame: usize,
    pub granule: usize,
    pub channel: usize,
}

/// A parsed MPEG-1 Layer III stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SideInfoStream {
    pub headers: Vec<FrameHeader>,
    pub side_infos: Vec<FrameSideInfo>,
    pub frame_byte_offsets: Vec<usize>,
    pub raw_bytes: Vec<u8>,
}

/// Consecutively arranged per-granule field sequences.
///
/// `gain[k]` for `k = 2j + i` is the global gain of granule `i` of frame `j`,
/// so `gain = [G(1,1), G(2,1), G(1,2), G(2,2), ...]`. `granule1` and
/// `granule2` are the per-granule subsequences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSeries {
    pub gain: Vec<u32>,
    pub block_type: Vec<u32>,
    pub part2_3_length: Vec<u32>,
    pub table_select: Vec<u32>,
    pub granule1: Vec<u32>,
    pub granule2: Vec<u32>,
}

impl FieldSeries {
    /// Builds a series from per-slot fields; `gain.len()` must be even.
    pub fn from_slots(gain: Vec<u32>, block_type: Vec<u32>, part2_3_length: Vec<u32>, table_select: Vec<u32>) -> Self {
        assert_eq!(gain.len() % 2, 0, "two granules per frame");
        assert!(block_type.len() == gain.len() && part2_3_length.len() == gain.len() && table_select.len() == gain.len());
        let granule1 = gain.iter().step_by(2).copied().collect();
        let granule2 = gain.iter().skip(1).step_by(2).copied().collect();
        Self { gain, block_type, part2_3_length, table_select, granule1, granule2 }
    }

    /// Gains only; the companion fields are zero.
    pub fn from_gains(gain: Vec<u32>) -> Self {
        let n = gain.len();
        Self::from_slots(gain, vec![0; n], vec![0; n], vec![0; n])
    }

    /// Number of frames (length of each per-granule subsequence).
    pub fn frames(&self) -> usize {
        self.granule1.len()
    }

    pub fn len(&self) -> usize {
        self.gain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gain.is_empty()
    }

    /// Replaces the gain at slot `k`, keeping the granule views in sync.
    pub fn set_gain(&mut self, k: usize, value: u32) {
        self.gain[k] = value;
        if k % 2 == 0 {
            self.granule1[k / 2] = value;
        } else {
            self.granule2[k / 2] = value;
        }
    }
}

impl SideInfoStream {
    pub fn frame_count(&self) -> usize {
        self.headers.len()
    }

    pub fn sample_rate(&self) -> u32 {
        self.headers[0].sample_rate
    }

    pub fn duration_seconds(&self) -> f64 {
        self.frame_count() as f64 * f64::from(SAMPLES_PER_FRAME) / f64::from(self.sample_rate())
    }

    /// Sum of frame lengths; the remainder of `raw_bytes` is tag or garbage.
    pub fn frame_bytes(&self) -> usize {
        self.headers.iter().map(FrameHeader::frame_len).sum()
    }

    /// Enumerates granule slots in index order for `policy`.
    pub fn granule_slots(&self, policy: ChannelPolicy) -> Result<Vec<GranuleSlot>, BitstreamError> {
        let mut slots = Vec::with_capacity(self.frame_count() * GRANULES_PER_FRAME);
        let mut push_channel = |channel: usize, strict: bool| -> Result<(), BitstreamError> {
            for (frame, header) in self.headers.iter().enumerate() {
                if channel >= header.channels() {
                    if strict {
                        return Err(BitstreamError::ChannelUnavailable { channel, frame });
                    }
                    continue;
                }
                for granule in 0..GRANULES_PER_FRAME {
                    slots.push(GranuleSlot { frame, granule, channel });
                }
            }
            Ok(())
        };
        match policy {
            ChannelPolicy::First => push_channel(0, true)?,
            ChannelPolicy::Channel(c) => push_channel(c, true)?,
            ChannelPolicy::Concatenated => {
                push_channel(0, true)?;
                push_channel(1, false)?;
            }
        }
        Ok(slots)
    }

    /// Number of embeddable granules under `policy`.
    pub fn granule_count(&self, policy: ChannelPolicy) -> Result<usize, BitstreamError> {
        Ok(self.granule_slots(policy)?.len())
    }

    pub fn global_gains(&self, policy: ChannelPolicy) -> Result<Vec<u8>, BitstreamError> {
        Ok(self
            .granule_slots(policy)?
            .into_iter()
            .map(|s| self.side_infos[s.frame].granules[s.granule][s.channel].global_gain)
            .collect())
    }

    /// Extracts the g, b, p and t sequences.
    pub fn extract_series(&self, policy: ChannelPolicy) -> Result<FieldSeries, BitstreamError> {
        if self.headers.is_empty() {
            return Err(BitstreamError::EmptyStream);
        }
        let slots = self.granule_slots(policy)?;
        let mut gain = Vec::with_capacity(slots.len());
        let mut block_type = Vec::with_capacity(slots.len());
        let mut part2_3_length = Vec::with_capacity(slots.len());
        let mut table_select = Vec::with_capacity(slots.len());
        for s in slots {
            let g = &self.side_infos[s.frame].granules[s.granule][s.channel];
            gain.push(u32::from(g.global_gain));
            block_type.push(u32::from(g.effective_block_type()));
            part2_3_length.push(u32::from(g.part2_3_length));
            table_select.push(u32::from(g.table_select[0]));
        }
        Ok(FieldSeries::from_slots(gain, block_type, part2_3_length, table_select))
    }

    /// Rebuilds the file from the parsed headers and side information,
    /// copying every other byte from `raw_bytes`.
    pub fn serialize(&self) -> Vec<u8> {
        let mut out = self.raw_bytes.clone();
        for ((header, info), &offset) in self.headers.iter().zip(&self.side_infos).zip(&self.frame_byte_offsets) {
            out[offset..offset + HEADER_BYTES].copy_from_slice(&header.to_bytes());
            let si = offset + header.side_info_offset();
            let encoded = info.encode();
            out[si..si + encoded.len()].copy_from_slice(&encoded);
        }
        out
    }

    fn check_assignments(&self, slots: &[GranuleSlot], assignments: &BTreeMap<usize, u8>) -> Result<(), BitstreamError> {
        if let Some((&index, _)) = assignments.range(slots.len()..).next() {
            return Err(BitstreamError::IndexOutOfRange { index, len: slots.len() });
        }
        Ok(())
    }

    /// Returns a copy of the file with the listed granules' global_gain
    /// fields replaced. No other bit changes.
    pub fn write_global_gains(&self, policy: ChannelPolicy, assignments: &BTreeMap<usize, u8>) -> Result<Vec<u8>, BitstreamError> {
        let slots = self.granule_slots(policy)?;
        self.check_assignments(&slots, assignments)?;
        let mut out = self.raw_bytes.clone();
        for (&index, &gain) in assignments {
            let s = slots[index];
            let offset = self.side_infos[s.frame].global_gain_bit_offsets[s.granule][s.channel];
            write_bits_at(&mut out, offset, 8, u32::from(gain));
        }
        Ok(out)
    }

    /// Like [`write_global_gains`](Self::write_global_gains) but returns an
    /// updated parsed stream instead of re-parsing the output.
    pub fn with_global_gains(&self, policy: ChannelPolicy, assignments: &BTreeMap<usize, u8>) -> Result<SideInfoStream, BitstreamError> {
        let slots = self.granule_slots(policy)?;
        let raw_bytes = self.write_global_gains(policy, assignments)?;
        let mut side_infos = self.side_infos.clone();
        for (&index, &gain) in assignments {
            let s = slots[index];
            side_infos[s.frame].granules[s.granule][s.channel].global_gain = gain;
        }
        Ok(SideInfoStream {
            headers: self.headers.clone(),
            side_infos,
            frame_byte_offsets: self.frame_byte_offsets.clone(),
            raw_bytes,
        })
    }
}

/// Length of a leading ID3v2 tag, if present.
fn id3v2_len(bytes: &[u8]) -> usize {
    if bytes.len() < 10 || &bytes[..3] != b"ID3" {
        return 0;
    }
    let size = bytes[6..10].iter().fold(0usize, |acc, &b| (acc << 7) | usize::from(b & 0x7F));
    let footer = if bytes[5] & 0x10 != 0 { 10 } else { 0 };
    (10 + size + footer).min(bytes.len())
}

/// Locates every MPEG-1 Layer III frame in `bytes` and decodes its side
/// information.
///
/// Frames are found by sync scan. An unlocked candidate is accepted only if
/// the next frame header also parses (or the candidate ends the file, or is
/// followed by an ID3v1 tag); once locked, consecutive frames are accepted
/// directly. A truncated final frame is dropped with a warning.
pub fn parse_stream(bytes: &[u8]) -> Result<SideInfoStream, BitstreamError> {
    let mut headers: Vec<FrameHeader> = Vec::new();
    let mut side_infos = Vec::new();
    let mut offsets = Vec::new();
    let mut unsupported: Option<(&'static str, u8)> = None;
    let mut locked = false;
    let mut pos = id3v2_len(bytes);

    while pos + HEADER_BYTES <= bytes.len() {
        let header = match FrameHeader::probe(&bytes[pos..]) {
            HeaderProbe::Valid(h) => h,
            HeaderProbe::Unsupported { version, layer } => {
                unsupported.get_or_insert((version, layer));
                locked = false;
                pos += 1;
                continue;
            }
            HeaderProbe::Invalid => {
                locked = false;
                pos += 1;
                continue;
            }
        };
        if let Some(first) = headers.first() {
            if !header.compatible_with(first) {
                locked = false;
                pos += 1;
                continue;
            }
        }
        let end = pos + header.frame_len();
        if end > bytes.len() {
            if locked {
                log::warn!("dropping truncated final frame at byte {pos} ({} of {} bytes)", bytes.len() - pos, header.frame_len());
                break;
            }
            pos += 1;
            continue;
        }
        let confirmed = locked
            || end == bytes.len()
            || bytes[end..].starts_with(b"TAG")
            || FrameHeader::parse(&bytes[end..]).is_some_and(|next| next.compatible_with(&header));
        if !confirmed {
            pos += 1;
            continue;
        }
        let si_start = pos + header.side_info_offset();
        let info = FrameSideInfo::decode(&bytes[si_start..end], header.channel_mode, (si_start as u64) * 8)
            .ok_or(BitstreamError::TruncatedFrame { offset: pos })?;
        headers.push(header);
        side_infos.push(info);
        offsets.push(pos);
        locked = true;
        pos = end;
    }

    if headers.is_empty() {
        return Err(match unsupported {
            Some((version, layer)) => BitstreamError::UnsupportedFormat { version, layer },
            None => BitstreamError::NoFramesFound,
        });
    }
    Ok(SideInfoStream { headers, side_infos, frame_byte_offsets: offsets, raw_bytes: bytes.to_vec() })
}
