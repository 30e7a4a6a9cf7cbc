//! Global-gain bin specifications and their fitting.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::histogram::Binning;
use super::FeatureError;

/// Default probability-difference threshold for per-value bin selection.
pub const DEFAULT_SELECTION_THRESHOLD: f64 = 1e-5;
/// Number of equal-width bins used by the min/max binning method.
pub const EQUAL_WIDTH_BINS: usize = 30;

/// How global-gain values are binned.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum GainBins {
    /// Equal-width bins over each sequence's own `[min, max]`.
    EqualWidth { bins: usize },
    /// One bin per selected gain value.
    PerValue {
        values: BTreeSet<u32>,
        #[serde(default)]
        merge_unselected: bool,
    },
}

/// Binning of the second variable in the gain-vs-field features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompanionBinning {
    pub block_type: Binning,
    pub part2_3_length: Binning,
    pub table_select: Binning,
}

impl Default for CompanionBinning {
    fn default() -> Self {
        Self {
            block_type: Binning::Raw { alphabet: 4 },
            part2_3_length: Binning::Quantile { bins: 32 },
            table_select: Binning::Raw { alphabet: 32 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinSpec {
    pub gain: GainBins,
    #[serde(default)]
    pub companion: CompanionBinning,
}

impl BinSpec {
    /// 30 equal-width bins between the sequence minimum and maximum.
    pub fn equal_width() -> Self {
        Self { gain: GainBins::EqualWidth { bins: EQUAL_WIDTH_BINS }, companion: CompanionBinning::default() }
    }

    /// One bin per value in `values`; other values are dropped.
    pub fn per_value(values: BTreeSet<u32>) -> Self {
        Self { gain: GainBins::PerValue { values, merge_unselected: false }, companion: CompanionBinning::default() }
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        match &self.gain {
            GainBins::EqualWidth { bins } if *bins < 2 => Err(FeatureError::InvalidSpec("equal-width binning needs at least 2 bins".into())),
            GainBins::PerValue { values, .. } if values.is_empty() => Err(FeatureError::InvalidSpec("per-value binning needs a non-empty value set".into())),
            _ => Ok(()),
        }
    }

    /// Histogram binning for gain sequences.
    pub fn gain_binning(&self) -> Binning {
        match &self.gain {
            GainBins::EqualWidth { bins } => Binning::EqualWidth { bins: *bins },
            GainBins::PerValue { values, merge_unselected } => Binning::Values { values: values.iter().copied().collect(), merge_unselected: *merge_unselected },
        }
    }

    /// Union of per-value selections; `None` if any spec is not per-value.
    pub fn union<'a>(specs: impl IntoIterator<Item = &'a BinSpec>) -> Option<BinSpec> {
        let mut all = BTreeSet::new();
        let mut merge = false;
        for spec in specs {
            match &spec.gain {
                GainBins::PerValue { values, merge_unselected } => {
                    all.extend(values.iter().copied());
                    merge |= *merge_unselected;
                }
                GainBins::EqualWidth { .. } => return None,
            }
        }
        if all.is_empty() {
            return None;
        }
        Some(BinSpec { gain: GainBins::PerValue { values: all, merge_unselected: merge }, companion: CompanionBinning::default() })
    }
}

fn pooled_distribution(corpus: &[&[u32]]) -> (Vec<f64>, usize) {
    let mut counts = vec![0u64; 256];
    let mut total = 0u64;
    for seq in corpus {
        for &v in *seq {
            let v = v as usize;
            if v >= counts.len() {
                counts.resize(v + 1, 0);
            }
            counts[v] += 1;
            total += 1;
        }
    }
    let len = counts.len();
    let dist = counts.into_iter().map(|c| if total == 0 { 0.0 } else { c as f64 / total as f64 }).collect();
    (dist, len)
}

/// Gain values whose pooled cover and stego probabilities differ by more
/// than `threshold`.
pub fn select_bins_method2(cover_gg: &[&[u32]], stego_gg: &[&[u32]], threshold: f64) -> Result<BTreeSet<u32>, FeatureError> {
    if cover_gg.iter().all(|s| s.is_empty()) || stego_gg.iter().all(|s| s.is_empty()) {
        return Err(FeatureError::EmptyCorpus);
    }
    if !(threshold > 0.0) {
        return Err(FeatureError::InvalidSpec(format!("selection threshold must be positive, got {threshold}")));
    }
    let (mut cover, lc) = pooled_distribution(cover_gg);
    let (mut stego, ls) = pooled_distribution(stego_gg);
    let len = lc.max(ls);
    cover.resize(len, 0.0);
    stego.resize(len, 0.0);
    let selected: BTreeSet<u32> = cover
        .iter()
        .zip(&stego)
        .enumerate()
        .filter(|(_, (c, s))| (*c - *s).abs() > threshold)
        .map(|(v, _)| v as u32)
        .collect();
    if selected.is_empty() {
        return Err(FeatureError::NoBinsSelected);
    }
    Ok(selected)
}

/// Every value that occurs in `corpus`; the fallback when selection finds
/// nothing.
pub fn observed_values(corpus: &[&[u32]]) -> BTreeSet<u32> {
    corpus.iter().flat_map(|s| s.iter().copied()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stego::{embed_series, random_message, EmbedSpec, StegoKey};
    use crate::bitstream::FieldSeries;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_distributions_select_nothing() {
        let a: Vec<u32> = vec![1, 2, 3, 3];
        assert!(matches!(select_bins_method2(&[&a], &[&a], 1e-5), Err(FeatureError::NoBinsSelected)));
    }

    #[test]
    fn disjoint_mass_selects_both_values() {
        let c = vec![100u32; 10];
        let s = vec![101u32; 10];
        assert_eq!(select_bins_method2(&[&c], &[&s], 1e-5).unwrap(), BTreeSet::from([100, 101]));
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let c: Vec<u32> = vec![];
        let s = vec![1u32];
        assert!(matches!(select_bins_method2(&[&c], &[&s], 1e-5), Err(FeatureError::EmptyCorpus)));
    }

    #[test]
    fn lsb_embedded_corpus_selects_shifted_values() {
        // covers concentrated on even values; full-capacity embedding moves
        // about half of that mass onto the odd neighbours
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let covers: Vec<FieldSeries> = (0..20)
            .map(|_| FieldSeries::from_gains((0..400).map(|_| 2 * rng.random_range(50..60u32)).collect()))
            .collect();
        let stegos: Vec<FieldSeries> = covers
            .iter()
            .enumerate()
            .map(|(i, c)| embed_series(c, &random_message(i as u64, c.len()), StegoKey(i as u64), &EmbedSpec::keyed(1.0)).unwrap())
            .collect();
        let cg: Vec<&[u32]> = covers.iter().map(|s| s.gain.as_slice()).collect();
        let sg: Vec<&[u32]> = stegos.iter().map(|s| s.gain.as_slice()).collect();
        let selected = select_bins_method2(&cg, &sg, 1e-5).unwrap();

        // direct distribution differencing as the oracle
        let (pc, _) = pooled_distribution(&cg);
        let (ps, _) = pooled_distribution(&sg);
        for v in 100u32..120 {
            let shift = (pc[v as usize] - ps[v as usize]).abs();
            assert_eq!(selected.contains(&v), shift > 1e-5, "value {v}");
            if v % 2 == 1 {
                assert!(selected.contains(&v));
            }
        }
    }

    #[test]
    fn union_of_per_value_specs() {
        let a = BinSpec::per_value(BTreeSet::from([1, 2]));
        let b = BinSpec::per_value(BTreeSet::from([2, 9]));
        assert_eq!(BinSpec::union([&a, &b]).unwrap().gain, GainBins::PerValue { values: BTreeSet::from([1, 2, 9]), merge_unselected: false });
        assert!(BinSpec::union([&a, &BinSpec::equal_width()]).is_none());
    }

    #[test]
    fn json_round_trip() {
        let spec = BinSpec::per_value(BTreeSet::from([3, 4, 250]));
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<BinSpec>(&text).unwrap(), spec);
    }
}
