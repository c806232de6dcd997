//! Deterministic random number generation.
//!
//! The generator is SplitMix64 (Steele, Lea & Flood; the seeding generator
//! of the xoshiro family). It is a 64-bit counter-based generator: state
//! advances by a fixed odd constant and the output is a bijective finalizer
//! of the counter, so streams for nearby seeds are decorrelated. Uniform
//! doubles use the 53-bit mantissa convention: the top 53 bits of the output
//! word scaled by 2^-53, giving values in [0, 1).
//!
//! Cross-language ports that reproduce these two rules reproduce every
//! sampled trajectory in this crate bit for bit.

/// SplitMix64 stream.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Stream for trial `index` of a batch: seeds are derived by counter,
    /// `base_seed + index`, relying on the finalizer for decorrelation.
    pub fn for_trial(base_seed: u64, index: u64) -> Self {
        Self::new(base_seed.wrapping_add(index))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(Self::GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53 random mantissa bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn next_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}
