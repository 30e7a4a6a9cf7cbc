//! Joint histograms of integer-valued sequences and plug-in mutual
//! information in nats.

use serde::{Deserialize, Serialize};

use super::FeatureError;

/// How one variable is discretised.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Binning {
    /// `bins` equal-width bins over `[min, max]` of the sample; a constant
    /// sample gets a single bin.
    EqualWidth { bins: usize },
    /// One bin per listed value. Samples with other values are dropped, or
    /// collected in a trailing "other" bin when `merge_unselected` is set.
    Values {
        values: Vec<u32>,
        #[serde(default)]
        merge_unselected: bool,
    },
    /// Value `v` goes to bin `v`; values `>= alphabet` are dropped.
    Raw { alphabet: u32 },
    /// `bins` equal-frequency bins computed from the sample. Tied values
    /// always share a bin.
    Quantile { bins: usize },
}

/// Bin index per sample (`None` = dropped), bin count and per-bin lower
/// edges.
struct Assignment {
    index: Vec<Option<usize>>,
    bins: usize,
    edges: Vec<f64>,
}

impl Binning {
    fn assign(&self, data: &[u32]) -> Result<Assignment, FeatureError> {
        match self {
            Binning::EqualWidth { bins } => {
                if *bins < 1 {
                    return Err(FeatureError::InvalidSpec("equal-width binning needs at least one bin".into()));
                }
                let min = *data.iter().min().expect("non-empty input checked by caller");
                let max = *data.iter().max().expect("non-empty input checked by caller");
                if min == max {
                    return Ok(Assignment { index: vec![Some(0); data.len()], bins: 1, edges: vec![f64::from(min)] });
                }
                let width = f64::from(max - min) / *bins as f64;
                let index = data
                    .iter()
                    .map(|&v| Some((((f64::from(v - min)) / width).floor() as usize).min(bins - 1)))
                    .collect();
                let edges = (0..*bins).map(|b| f64::from(min) + b as f64 * width).collect();
                Ok(Assignment { index, bins: *bins, edges })
            }
            Binning::Values { values, merge_unselected } => {
                if values.is_empty() {
                    return Err(FeatureError::InvalidSpec("value binning needs at least one value".into()));
                }
                let top = *values.iter().max().expect("non-empty") as usize;
                let mut lookup = vec![None; top + 1];
                for (i, &v) in values.iter().enumerate() {
                    lookup[v as usize] = Some(i);
                }
                let other = merge_unselected.then_some(values.len());
                let index = data
                    .iter()
                    .map(|&v| lookup.get(v as usize).copied().flatten().or(other))
                    .collect();
                let mut edges: Vec<f64> = values.iter().map(|&v| f64::from(v)).collect();
                if *merge_unselected {
                    edges.push(f64::NAN);
                }
                Ok(Assignment { index, bins: values.len() + usize::from(*merge_unselected), edges })
            }
            Binning::Raw { alphabet } => {
                let index = data.iter().map(|&v| (v < *alphabet).then_some(v as usize)).collect();
                Ok(Assignment { index, bins: *alphabet as usize, edges: (0..*alphabet).map(f64::from).collect() })
            }
            Binning::Quantile { bins } => {
                if *bins < 1 {
                    return Err(FeatureError::InvalidSpec("quantile binning needs at least one bin".into()));
                }
                let mut sorted = data.to_vec();
                sorted.sort_unstable();
                let n = sorted.len();
                let index: Vec<Option<usize>> = data
                    .iter()
                    .map(|v| {
                        let rank = sorted.partition_point(|x| x < v);
                        Some(rank * bins / n)
                    })
                    .collect();
                let mut edges = vec![f64::NAN; *bins];
                for (&v, b) in data.iter().zip(&index) {
                    let e = &mut edges[b.expect("quantile bins never drop")];
                    if e.is_nan() || f64::from(v) < *e {
                        *e = f64::from(v);
                    }
                }
                Ok(Assignment { index, bins: *bins, edges })
            }
        }
    }
}

/// Contingency table of two discretised variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointHistogram {
    /// Row-major `rows x cols` counts.
    pub counts: Vec<u64>,
    pub rows: usize,
    pub cols: usize,
    /// Lower edge (or value) of each row/column bin; NaN for empty or
    /// catch-all bins.
    pub row_edges: Vec<f64>,
    pub col_edges: Vec<f64>,
    pub total: u64,
}

impl JointHistogram {
    /// Builds a histogram directly from counts.
    pub fn from_counts(rows: usize, cols: usize, counts: Vec<u64>) -> Self {
        assert_eq!(counts.len(), rows * cols);
        let total = counts.iter().sum();
        Self { counts, rows, cols, row_edges: vec![f64::NAN; rows], col_edges: vec![f64::NAN; cols], total }
    }

    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.counts[row * self.cols + col]
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.chunks(self.cols.max(1)).map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        let mut sums = vec![0u64; self.cols];
        for row in self.counts.chunks(self.cols.max(1)) {
            for (s, &c) in sums.iter_mut().zip(row) {
                *s += c;
            }
        }
        sums
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0u64; self.counts.len()];
        for r in 0..self.rows {
            for c in 0..self.cols {
                counts[c * self.rows + r] = self.get(r, c);
            }
        }
        Self {
            counts,
            rows: self.cols,
            cols: self.rows,
            row_edges: self.col_edges.clone(),
            col_edges: self.row_edges.clone(),
            total: self.total,
        }
    }
}

/// Tallies paired samples. A pair is dropped when either side falls outside
/// its binning.
pub fn joint_hist(x: &[u32], z: &[u32], row: &Binning, col: &Binning) -> Result<JointHistogram, FeatureError> {
    if x.len() != z.len() {
        return Err(FeatureError::LengthMismatch { left: x.len(), right: z.len() });
    }
    if x.is_empty() {
        return Err(FeatureError::EmptyInput);
    }
    let rx = row.assign(x)?;
    let cz = col.assign(z)?;
    let mut counts = vec![0u64; rx.bins * cz.bins];
    let mut total = 0;
    for (a, b) in rx.index.iter().zip(&cz.index) {
        if let (Some(a), Some(b)) = (a, b) {
            counts[a * cz.bins + b] += 1;
            total += 1;
        }
    }
    Ok(JointHistogram { counts, rows: rx.bins, cols: cz.bins, row_edges: rx.edges, col_edges: cz.edges, total })
}

/// `sum p(x,z) ln(p(x,z) / (p(x) p(z)))` over occupied cells, in nats.
/// Rounding noise just below zero is clamped to zero.
pub fn mutual_info(h: &JointHistogram) -> Result<f64, FeatureError> {
    if h.total == 0 {
        return Err(FeatureError::EmptyHistogram);
    }
    let total = h.total as f64;
    let rows = h.row_sums();
    let cols = h.col_sums();
    let mut mi = 0.0;
    for (r, row) in h.counts.chunks(h.cols.max(1)).enumerate() {
        for (c, &n) in row.iter().enumerate() {
            if n == 0 {
                continue;
            }
            let n = n as f64;
            mi += (n / total) * ((n * total) / (rows[r] as f64 * cols[c] as f64)).ln();
        }
    }
    if mi < 0.0 && mi > -1e-12 {
        mi = 0.0;
    }
    Ok(mi)
}

/// Mutual information of two sequences; an empty histogram (every pair
/// dropped) counts as zero dependence.
pub fn sequence_mi(x: &[u32], z: &[u32], row: &Binning, col: &Binning) -> Result<f64, FeatureError> {
    let h = joint_hist(x, z, row, col)?;
    match mutual_info(&h) {
        Err(FeatureError::EmptyHistogram) => Ok(0.0),
        other => other,
    }
}
