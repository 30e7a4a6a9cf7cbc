//! Multiple re-embedding calibration.
//!
//! The carrier is re-embedded `r` times with independent random messages.
//! Each round yields the difference `base(x) - base(reembed(x))`; the output
//! is the per-feature mean of those differences followed by their sample
//! standard deviation (divisor `r - 1`).

use serde::{Deserialize, Serialize};

use crate::bitstream::FieldSeries;
use crate::stego::{embed_series, random_message, EmbedSpec, StegoError, StegoKey};

use super::{FeatureError, FeatureVector, Provenance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSpec {
    /// Re-embedding order.
    pub r: usize,
    /// Re-embedding capacity fraction.
    pub c_r: f64,
    /// Round `i` (1-based) uses key and message seed `key_seed + i`.
    pub key_seed: u64,
}

impl Default for CalibrationSpec {
    fn default() -> Self {
        Self { r: 10, c_r: 1.0, key_seed: 0 }
    }
}

impl CalibrationSpec {
    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.r < 2 {
            return Err(FeatureError::InvalidSpec(format!("re-embedding order must be at least 2, got {}", self.r)));
        }
        if !(self.c_r > 0.0 && self.c_r <= 1.0) {
            return Err(FeatureError::InvalidSpec(format!("re-embedding capacity {} outside (0, 1]", self.c_r)));
        }
        Ok(())
    }

    /// Seed for round `i` in `1..=r`.
    pub fn round_seed(&self, i: usize) -> u64 {
        self.key_seed.wrapping_add(i as u64)
    }
}

/// Re-embeds a uniform random message at full `fraction` of the keyed
/// capacity, with key and message both derived from `seed`.
pub fn reembed_series(series: &FieldSeries, seed: u64, fraction: f64) -> Result<FieldSeries, StegoError> {
    let spec = EmbedSpec::keyed(fraction);
    let capacity = spec.selected_count(series.len());
    embed_series(series, &random_message(seed, capacity), StegoKey(seed), &spec)
}

/// Calibrates `base` on `carrier` using `embedder(carrier, seed)` for each
/// round.
pub fn calibrate<T, B, E>(carrier: &T, base: B, cal: &CalibrationSpec, embedder: E) -> Result<FeatureVector, FeatureError>
where
    B: Fn(&T) -> Result<FeatureVector, FeatureError>,
    E: Fn(&T, u64) -> Result<T, StegoError>,
{
    cal.validate()?;
    let reference = base(carrier)?;
    let k = reference.len();
    let mut diffs: Vec<Vec<f64>> = Vec::with_capacity(cal.r);
    for i in 1..=cal.r {
        let reembedded = embedder(carrier, cal.round_seed(i))?;
        let f = base(&reembedded)?;
        diffs.push(reference.values.iter().zip(&f.values).map(|(a, b)| a - b).collect());
    }
    let r = cal.r as f64;
    let means: Vec<f64> = (0..k).map(|j| diffs.iter().map(|d| d[j]).sum::<f64>() / r).collect();
    let stds: Vec<f64> = (0..k)
        .map(|j| (diffs.iter().map(|d| (d[j] - means[j]).powi(2)).sum::<f64>() / (r - 1.0)).sqrt())
        .collect();
    let names = reference
        .names
        .iter()
        .map(|n| format!("{n}.mean"))
        .chain(reference.names.iter().map(|n| format!("{n}.std")))
        .collect();
    FeatureVector::new(means.into_iter().chain(stds).collect(), names, Provenance::Calibrated)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Toy carrier: the base feature is the value itself.
    fn base(x: &f64) -> Result<FeatureVector, FeatureError> {
        FeatureVector::new(vec![*x, 2.0 * x], vec!["a".into(), "b".into()], Provenance::Raw)
    }

    #[test]
    fn identity_embedder_gives_zero() {
        let f = calibrate(&3.5, base, &CalibrationSpec::default(), |x, _| Ok(*x)).unwrap();
        assert_eq!(f.values, vec![0.0; 4]);
        assert_eq!(f.names, vec!["a.mean", "b.mean", "a.std", "b.std"]);
        assert_eq!(f.provenance, Provenance::Calibrated);
    }

    #[test]
    fn two_round_hand_check() {
        // round seeds 101 and 102 move the carrier to 1.0 and 4.0
        let cal = CalibrationSpec { r: 2, c_r: 1.0, key_seed: 100 };
        let f = calibrate(&10.0, base, &cal, |_, seed| Ok(if seed == 101 { 1.0 } else { 4.0 })).unwrap();
        // differences a: [9, 6], b: [18, 12]
        assert!((f.values[0] - 7.5).abs() < 1e-12);
        assert!((f.values[1] - 15.0).abs() < 1e-12);
        assert!((f.values[2] - (4.5f64).sqrt()).abs() < 1e-12);
        assert!((f.values[3] - (18.0f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rejects_order_below_two() {
        let cal = CalibrationSpec { r: 1, ..Default::default() };
        assert!(matches!(calibrate(&1.0, base, &cal, |x, _| Ok(*x)), Err(FeatureError::InvalidSpec(_))));
    }

    #[test]
    fn reembedding_is_seeded() {
        let series = FieldSeries::from_gains((0..100).map(|i| 100 + i % 7).collect());
        assert_eq!(reembed_series(&series, 5, 1.0).unwrap(), reembed_series(&series, 5, 1.0).unwrap());
        assert_ne!(reembed_series(&series, 5, 1.0).unwrap(), reembed_series(&series, 6, 1.0).unwrap());
    }
}
