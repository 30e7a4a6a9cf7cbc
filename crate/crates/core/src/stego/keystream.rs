//! Portable pseudo-random streams derived from a 64-bit key.
//!
//! All streams use SplitMix64:
//!
//! ```text
//! state = state + 0x9E3779B97F4A7C15           (wrapping)
//! z = state
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9     (wrapping)
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB     (wrapping)
//! output z ^ (z >> 31)
//! ```
//!
//! The scrambling keystream starts from `state = seed`. Bit `i` of the
//! keystream is bit `63 - (i mod 64)` of output word `i / 64`, i.e. each
//! word is consumed most-significant bit first.
//!
//! Granule selection starts from `state = seed ^ SELECTION_DOMAIN` and draws
//! uniform integers below `n` by rejection: a word `x` is accepted when
//! `x >= 2^64 mod n` and yields `x mod n`.
//!
//! Random messages start from `state = seed ^ MESSAGE_DOMAIN` and use the
//! same bit order as the keystream.

pub const SELECTION_DOMAIN: u64 = 0x6A09_E667_F3BC_C909;
pub const MESSAGE_DOMAIN: u64 = 0xBB67_AE85_84CA_A73B;

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform integer in `0..n` (`n > 0`) by rejection sampling.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        let threshold = n.wrapping_neg() % n;
        loop {
            let x = self.next_u64();
            if x >= threshold {
                return x % n;
            }
        }
    }

    /// The next `n` bits, MSB-first within each word.
    pub fn bits(&mut self, n: usize) -> Vec<bool> {
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let word = self.next_u64();
            let take = (n - out.len()).min(64);
            out.extend((0..take).map(|i| (word >> (63 - i)) & 1 == 1));
        }
        out
    }
}
