//! Global-gain steganography and mutual-information steganalysis for
//! MPEG-1 Layer III streams.
//!
//! * [`bitstream`]: frame location, side-information decoding and bit-exact
//!   global_gain rewriting.
//! * [`stego`]: keyed LSB embedding into global_gain and its inverse.
//! * [`features`]: histogram mutual information, the three feature sets and
//!   multiple re-embedding calibration.
//! * [`learn`]: feature scaling, SMO-trained SVMs, k-fold cross-validation
//!   and genetic feature selection.
//! * [`pipeline`]: synthetic corpora, single- and multi-layer detectors,
//!   evaluation and ROC analysis.

pub mod bitstream;
pub mod features;
pub mod learn;
pub mod pipeline;
pub mod stego;
