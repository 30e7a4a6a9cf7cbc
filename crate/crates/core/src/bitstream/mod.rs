//! Bit-exact parsing and selective rewriting of MPEG-1 Layer III frame
//! headers and side information.
//!
//! Only side information is decoded. Main data (scale factors, Huffman
//! payload) is carried through untouched, and CRC words are skipped without
//! validation or recomputation.

pub mod bits;
pub mod header;
pub mod side_info;
pub mod stream;

pub use header::{ChannelMode, FrameHeader, HeaderProbe, GRANULES_PER_FRAME, SAMPLES_PER_FRAME};
pub use side_info::{FrameSideInfo, GranuleChannelInfo, TABLE_SELECT_ABSENT};
pub use stream::{parse_stream, ChannelPolicy, FieldSeries, GranuleSlot, SideInfoStream};

#[derive(Debug, thiserror::Error)]
pub enum BitstreamError {
    #[error("no MPEG-1 Layer III frames found")]
    NoFramesFound,
    #[error("unsupported format: {version} layer {layer} (only MPEG-1 Layer III is handled)")]
    UnsupportedFormat { version: &'static str, layer: u8 },
    #[error("frame at byte {offset} is too short to hold its side information")]
    TruncatedFrame { offset: usize },
    #[error("stream has no frames")]
    EmptyStream,
    #[error("granule index {index} out of range ({len} granules)")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("channel {channel} not present in frame {frame}")]
    ChannelUnavailable { channel: usize, frame: usize },
}
