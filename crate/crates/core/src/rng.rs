//! Deterministic RNG substreams for Monte-Carlo runs.
//!
//! Every random quantity consumed during a trial comes from a ChaCha8
//! stream keyed by (master seed, trial index, role). Results therefore do
//! not depend on thread count or scheduling order, and adding a draw site
//! to one stage cannot shift the draws of another.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Which stream of a trial a draw belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamRole {
    /// Path angles and scattering gains.
    Channel,
    /// Phase-shifter gain and phase error draws.
    Impairment,
    /// Thermal noise, both training and data.
    Noise,
    /// Stand-alone scheduling experiments (non-silent user statistics).
    Scheduling,
}

impl StreamRole {
    fn tag(self) -> u64 {
        match self {
            StreamRole::Channel => 1,
            StreamRole::Impairment => 2,
            StreamRole::Noise => 3,
            StreamRole::Scheduling => 4,
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the ChaCha8 stream for (master seed, trial index, role).
pub fn substream(master: u64, trial: u64, role: StreamRole) -> ChaCha8Rng {
    let mut state = master;
    splitmix64(&mut state);
    state ^= trial;
    splitmix64(&mut state);
    state ^= role.tag();
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// One CN(0, 1) draw: circular complex Gaussian with unit total variance.
#[inline]
pub fn complex_gaussian<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(rand_distr::StandardNormal);
    let im: f64 = rng.sample(rand_distr::StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}
