//! SplitMix64, the single source of randomness in the crate.
//!
//! Every stochastic component (environment spawns, weight init, exploration,
//! replay sampling, random attack starts) draws from its own `SplitMix64`
//! stream, so a run is reproducible from its seed in any language that
//! implements the same three constants.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const MIX_1: u64 = 0xBF58_476D_1CE4_E5B9;
const MIX_2: u64 = 0x94D0_49BB_1331_11EB;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(MIX_1);
        z = (z ^ (z >> 27)).wrapping_mul(MIX_2);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in `[0, n)`. Uses plain modulo reduction; the bias is
    /// below 2^-58 for the small `n` used here.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        (self.next_u64() % n as u64) as usize
    }

    /// Derive an independent child stream, e.g. one per subsystem.
    pub fn fork(&mut self) -> SplitMix64 {
        SplitMix64::new(self.next_u64())
    }
}

/// Mix two values into a seed. Used to derive per-step attack seeds from
/// a run seed and a frame counter without sharing stream state.
pub fn derive_seed(base: u64, salt: u64) -> u64 {
    let mut rng = SplitMix64::new(base ^ salt.wrapping_mul(GOLDEN_GAMMA));
    rng.next_u64()
}
