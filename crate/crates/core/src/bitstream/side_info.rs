//! MPEG-1 Layer III side information: decode, encode and field offsets.
//!
//! Bit layout (per ISO/IEC 11172-3):
//!
//! ```text
//! main_data_begin 9 | private_bits 5 (mono) / 3 | scfsi 4 per channel
//! per granule, per channel:
//!   part2_3_length 12 | big_values 9 | global_gain 8 | scalefac_compress 4
//!   window_switching_flag 1
//!     set:   block_type 2 | mixed_block_flag 1 | table_select 2x5 | subblock_gain 3x3
//!     clear: table_select 3x5 | region0_count 4 | region1_count 3
//!   preflag 1 | scalefac_scale 1 | count1table_select 1
//! ```

use serde::{Deserialize, Serialize};

use super::bits::{BitReader, BitWriter};
use super::header::{ChannelMode, GRANULES_PER_FRAME};

/// Reported in `table_select[2]` when a window-switched granule codes only
/// two regions.
pub const TABLE_SELECT_ABSENT: u8 = u8::MAX;

/// Bits between the start of a granule/channel record and its global_gain.
const GLOBAL_GAIN_SHIFT: usize = 12 + 9;
const GRANULE_BITS: usize = 59;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GranuleChannelInfo {
    pub part2_3_length: u16,
    pub big_values: u16,
    pub global_gain: u8,
    pub scalefac_compress: u8,
    pub window_switching: bool,
    /// 0 (normal) whenever `window_switching` is false.
    pub block_type: u8,
    pub mixed_block_flag: bool,
    /// Third entry is [`TABLE_SELECT_ABSENT`] for window-switched granules.
    pub table_select: [u8; 3],
    pub subblock_gain: [u8; 3],
    /// Only coded for normal windows; 0 otherwise.
    pub region0_count: u8,
    pub region1_count: u8,
    pub preflag: bool,
    pub scalefac_scale: bool,
    pub count1table_select: bool,
}

impl Default for GranuleChannelInfo {
    fn default() -> Self {
        Self {
            part2_3_length: 0,
            big_values: 0,
            global_gain: 0,
            scalefac_compress: 0,
            window_switching: false,
            block_type: 0,
            mixed_block_flag: false,
            table_select: [0; 3],
            subblock_gain: [0; 3],
            region0_count: 0,
            region1_count: 0,
            preflag: false,
            scalefac_scale: false,
            count1table_select: false,
        }
    }
}

impl GranuleChannelInfo {
    fn read(r: &mut BitReader<'_>) -> Option<Self> {
        let mut g = GranuleChannelInfo {
            part2_3_length: r.read(12)? as u16,
            big_values: r.read(9)? as u16,
            global_gain: r.read(8)? as u8,
            scalefac_compress: r.read(4)? as u8,
            window_switching: r.read_bool()?,
            ..Default::default()
        };
        if g.window_switching {
            g.block_type = r.read(2)? as u8;
            g.mixed_block_flag = r.read_bool()?;
            g.table_select = [r.read(5)? as u8, r.read(5)? as u8, TABLE_SELECT_ABSENT];
            g.subblock_gain = [r.read(3)? as u8, r.read(3)? as u8, r.read(3)? as u8];
        } else {
            g.table_select = [r.read(5)? as u8, r.read(5)? as u8, r.read(5)? as u8];
            g.region0_count = r.read(4)? as u8;
            g.region1_count = r.read(3)? as u8;
        }
        g.preflag = r.read_bool()?;
        g.scalefac_scale = r.read_bool()?;
        g.count1table_select = r.read_bool()?;
        Some(g)
    }

    fn write(&self, w: &mut BitWriter) {
        w.write(12, u32::from(self.part2_3_length & 0x0FFF));
        w.write(9, u32::from(self.big_values & 0x01FF));
        w.write(8, u32::from(self.global_gain));
        w.write(4, u32::from(self.scalefac_compress & 0x0F));
        w.write_bool(self.window_switching);
        if self.window_switching {
            w.write(2, u32::from(self.block_type & 3));
            w.write_bool(self.mixed_block_flag);
            w.write(5, u32::from(self.table_select[0] & 0x1F));
            w.write(5, u32::from(self.table_select[1] & 0x1F));
            for sg in self.subblock_gain {
                w.write(3, u32::from(sg & 7));
            }
        } else {
            for ts in self.table_select {
                w.write(5, u32::from(ts & 0x1F));
            }
            w.write(4, u32::from(self.region0_count & 0x0F));
            w.write(3, u32::from(self.region1_count & 7));
        }
        w.write_bool(self.preflag);
        w.write_bool(self.scalefac_scale);
        w.write_bool(self.count1table_select);
    }

    /// Block type with the normal-window convention applied.
    pub fn effective_block_type(&self) -> u8 {
        if self.window_switching {
            self.block_type
        } else {
            0
        }
    }
}

/// Decoded side information of one frame.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameSideInfo {
    pub main_data_begin: u16,
    pub private_bits: u8,
    /// One 4-bit scfsi group per channel; unused channel slot is 0.
    pub scfsi: [u8; 2],
    pub channels: usize,
    /// Indexed `[granule][channel]`; channel 1 is unused for mono.
    pub granules: [[GranuleChannelInfo; 2]; GRANULES_PER_FRAME],
    /// Absolute bit offset of each global_gain field in the file, same
    /// indexing as `granules`.
    pub global_gain_bit_offsets: [[u64; 2]; GRANULES_PER_FRAME],
}

impl FrameSideInfo {
    /// An all-default side info block for `mode`.
    pub fn empty(mode: ChannelMode) -> Self {
        Self {
            main_data_begin: 0,
            private_bits: 0,
            scfsi: [0; 2],
            channels: mode.channels(),
            granules: [[GranuleChannelInfo::default(); 2]; GRANULES_PER_FRAME],
            global_gain_bit_offsets: [[0; 2]; GRANULES_PER_FRAME],
        }
    }

    /// Decodes side info from `bytes`, which must start at the side-info
    /// boundary. `base_bit_offset` is the absolute bit position of
    /// `bytes[0]` and is used to record global_gain offsets.
    pub fn decode(bytes: &[u8], mode: ChannelMode, base_bit_offset: u64) -> Option<Self> {
        let len = mode.side_info_len();
        if bytes.len() < len {
            return None;
        }
        let channels = mode.channels();
        let mut r = BitReader::new(&bytes[..len]);
        let mut info = FrameSideInfo::empty(mode);
        info.main_data_begin = r.read(9)? as u16;
        info.private_bits = r.read(if channels == 1 { 5 } else { 3 })? as u8;
        for ch in 0..channels {
            info.scfsi[ch] = r.read(4)? as u8;
        }
        for gr in 0..GRANULES_PER_FRAME {
            for ch in 0..channels {
                let start = r.position();
                info.granules[gr][ch] = GranuleChannelInfo::read(&mut r)?;
                debug_assert_eq!(r.position() - start, GRANULE_BITS);
                info.global_gain_bit_offsets[gr][ch] = base_bit_offset + (start + GLOBAL_GAIN_SHIFT) as u64;
            }
        }
        Some(info)
    }

    /// Encodes to exactly `mode.side_info_len()` bytes. Bit offsets are not
    /// consulted.
    pub fn encode(&self) -> Vec<u8> {
        let mut w = BitWriter::new();
        w.write(9, u32::from(self.main_data_begin & 0x01FF));
        if self.channels == 1 {
            w.write(5, u32::from(self.private_bits & 0x1F));
        } else {
            w.write(3, u32::from(self.private_bits & 7));
        }
        for ch in 0..self.channels {
            w.write(4, u32::from(self.scfsi[ch] & 0x0F));
        }
        for gr in 0..GRANULES_PER_FRAME {
            for ch in 0..self.channels {
                self.granules[gr][ch].write(&mut w);
            }
        }
        debug_assert_eq!(w.bit_len() % 8, 0);
        w.into_bytes()
    }
}
