//! The three steganalysis feature sets over a [`FieldSeries`].

use crate::bitstream::FieldSeries;

use super::bins::BinSpec;
use super::histogram::sequence_mi;
use super::FeatureError;

pub const SET1_NAMES: [&str; 5] = ["F1.1", "F1.2", "F1.3", "F1.4", "F1.5"];
pub const SET2_NAMES: [&str; 3] = ["F2.1", "F2.2", "F2.3"];
pub const SET3_NAMES: [&str; 4] = ["F3.1", "F3.2", "F3.3", "F3.4"];

/// Inter-granule gain dependencies:
///
/// 1. granule 1 vs granule 2 of the same frame
/// 2. granule 1 of frame j+1 vs granule 2 of frame j
/// 3. granule 1, lag one frame
/// 4. granule 2, lag one frame
/// 5. the combined series g, lag one granule
pub fn feature_set1(series: &FieldSeries, spec: &BinSpec) -> Result<[f64; 5], FeatureError> {
    let n = series.frames();
    if n < 3 {
        return Err(FeatureError::TooFewFrames { need: 3, got: n });
    }
    let gb = spec.gain_binning();
    let g1 = &series.granule1;
    let g2 = &series.granule2;
    let g = &series.gain;
    Ok([
        sequence_mi(g1, g2, &gb, &gb)?,
        sequence_mi(&g1[1..], &g2[..n - 1], &gb, &gb)?,
        sequence_mi(&g1[..n - 1], &g1[1..], &gb, &gb)?,
        sequence_mi(&g2[..n - 1], &g2[1..], &gb, &gb)?,
        sequence_mi(&g[..g.len() - 1], &g[1..], &gb, &gb)?,
    ])
}

/// Gain against block type, part2_3_length and the first table select.
pub fn feature_set2(series: &FieldSeries, spec: &BinSpec) -> Result<[f64; 3], FeatureError> {
    let n = series.frames();
    if n < 2 {
        return Err(FeatureError::TooFewFrames { need: 2, got: n });
    }
    let gb = spec.gain_binning();
    let c = &spec.companion;
    Ok([
        sequence_mi(&series.gain, &series.block_type, &gb, &c.block_type)?,
        sequence_mi(&series.gain, &series.part2_3_length, &gb, &c.part2_3_length)?,
        sequence_mi(&series.gain, &series.table_select, &gb, &c.table_select)?,
    ])
}

/// `[max G1, max G2, min G1, min G2]`.
pub fn feature_set3(series: &FieldSeries) -> Result<[f64; 4], FeatureError> {
    if series.frames() == 0 {
        return Err(FeatureError::EmptyStream);
    }
    let max = |s: &[u32]| f64::from(*s.iter().max().expect("non-empty"));
    let min = |s: &[u32]| f64::from(*s.iter().min().expect("non-empty"));
    Ok([max(&series.granule1), max(&series.granule2), min(&series.granule1), min(&series.granule2)])
}
