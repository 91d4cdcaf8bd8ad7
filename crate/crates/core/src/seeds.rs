//! Counter-based seed derivation so that every table, level and sketch copy
//! gets an independent stream from one master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) const STREAM_VALUE_TABLES: u64 = 1;
pub(crate) const STREAM_VALUE_RANKS: u64 = 2;
pub(crate) const STREAM_SEQUENCE_INDEX: u64 = 3;
pub(crate) const STREAM_REMOVAL_INDEX: u64 = 4;

#[inline]
pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub(crate) fn derive(master: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(stream)).wrapping_add(index))
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
