//! Seeded random streams.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] seeded with a
//! 64-bit value. Monte Carlo repetitions derive one seed per (repetition,
//! stream) pair with [`derive_seed`], so the graph, the treatment and the
//! noise of any repetition can be regenerated in isolation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent random streams used within one repetition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamTag {
    Graph,
    Treatment,
    Noise,
}

impl StreamTag {
    fn salt(self) -> u64 {
        match self {
            StreamTag::Graph => 0x6a09_e667_f3bc_c908,
            StreamTag::Treatment => 0xbb67_ae85_84ca_a73b,
            StreamTag::Noise => 0x3c6e_f372_fe94_f82b,
        }
    }
}

/// SplitMix64 finaliser. A bijection on `u64`.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for stream `tag` of repetition `rep`.
///
/// The function is `mix(mix(mix(base) ^ rep * φ) ^ salt(tag))` where `mix` is
/// the SplitMix64 finaliser and φ the odd 64-bit golden-ratio constant. Since
/// `mix` is a bijection and multiplication by an odd constant is a bijection,
/// for a fixed base seed distinct repetitions (same tag) and distinct tags
/// (same repetition) can never collide.
pub fn derive_seed(base_seed: u64, rep: u64, tag: StreamTag) -> u64 {
    let h = mix64(base_seed);
    let h = mix64(h ^ rep.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    mix64(h ^ tag.salt())
}
