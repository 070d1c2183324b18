//! Seeding contract.
//!
//! Every random draw in the crate comes from a ChaCha8 stream addressed by
//! `(seed, stream, position)`. A label cell `(i, j)` is the `j`-th `u64` of
//! stream `i`, so any partition of the label grid (by worker, by item range,
//! by thread) reproduces the serial result bit for bit.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a parent seed with a path of tags into an independent child seed.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(seed), |acc, &tag| splitmix64(acc ^ splitmix64(tag)))
}

/// Maps a `u64` onto `[0, 1)` using its top 53 bits.
#[inline]
pub fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Random-access uniform stream: `draw(s, j)` is the same value whether the
/// stream is read sequentially or jumped into at `j`.
#[derive(Clone)]
pub struct UniformStream {
    rng: ChaCha8Rng,
}

impl UniformStream {
    /// Positions the stream `stream` of generator `seed` at draw `start`.
    pub fn new(seed: u64, stream: u64, start: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        // one draw = one u64 = two 32-bit words
        rng.set_word_pos(u128::from(start) * 2);
        UniformStream { rng }
    }

    #[inline]
    pub fn next_unit(&mut self) -> f64 {
        unit_f64(self.rng.next_u64())
    }
}
