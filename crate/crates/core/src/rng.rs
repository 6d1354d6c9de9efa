//! Seeded generators and seed derivation.
//!
//! All randomness goes through ChaCha8 from `rand_chacha`, seeded with
//! `seed_from_u64`. Independent draws (subjects, replicates, metrics) get
//! their own seed via [`derive_seed`] or their own ChaCha stream via
//! [`substream`], so results never depend on evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Identifier of the generator, reported by the CLI and stored in reports.
pub const RNG_ALGORITHM: &str = "chacha8/rand_chacha-0.9/seed_from_u64+stream";

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for replicate `index`: same key as `seeded_rng(seed)`, distinct stream.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a tag into a base seed.
pub fn derive_seed(base: u64, tag: u64) -> u64 {
    splitmix64(splitmix64(base) ^ tag)
}

/// 64-bit FNV-1a, used to turn names into seed tags.
pub fn name_tag(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}
