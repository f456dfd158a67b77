//! Reproducible per-path random number streams.
//!
//! Every path owns two ChaCha12 streams derived from `(master seed,
//! path id)` through the cipher's 64-bit stream counter: stream `2*path`
//! feeds the jump draws, stream `2*path + 1` the Gaussian draws. The
//! mapping is pure, so results are independent of worker count and two
//! schemes running the same path see identical underlying randomness.
//!
//! Draw positions are part of the contract:
//! * jump stream: one Poisson count over the full horizon, then the jump
//!   times, then the jump sizes (rejection proposals consume as needed);
//! * Gaussian stream: Euler and annuity schemes consume one standard
//!   normal per sub-step in time order (skipped entirely when the
//!   diffusion scale is zero); the log-Levy scheme consumes its Gaussian
//!   factor rank in slot order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Jump and Gaussian generators for one path.
pub struct PathStreams {
    pub jumps: ChaCha12Rng,
    pub gauss: ChaCha12Rng,
}

fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Expand a 64-bit seed into the 256-bit ChaCha key.
pub fn master_key(seed: u64) -> [u8; 32] {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix(&mut state).to_le_bytes());
    }
    key
}

/// The deterministic substreams of path `path_id` under `seed`.
pub fn path_streams(seed: u64, path_id: u64) -> PathStreams {
    let key = master_key(seed);
    let mut jumps = ChaCha12Rng::from_seed(key);
    jumps.set_stream(2 * path_id);
    let mut gauss = ChaCha12Rng::from_seed(key);
    gauss.set_stream(2 * path_id + 1);
    PathStreams { jumps, gauss }
}
