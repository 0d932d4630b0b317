//! Seeding scheme.
//!
//! Every random stream is derived from one master seed. A stream is named by
//! a path of tags, e.g. `[REPLICATION, r, RESTART, k]`, and its seed is the
//! SplitMix64 fold of the master seed with each tag in order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::scalar::Scalar;

pub const REPLICATION: u64 = 0x5245_504c;
pub const RESTART: u64 = 0x5253_5452;
pub const MONTE_CARLO: u64 = 0x4d43_4d43;
pub const NOISE: u64 = 0x4e4f_4953;
pub const GENERATOR: u64 = 0x4745_4e52;
pub const VARIANT: u64 = 0x5641_5249;
pub const TUNING: u64 = 0x5455_4e45;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix(master), |acc, &tag| splitmix(acc ^ splitmix(tag)))
}

pub fn stream(master: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, path))
}

pub fn normal<T: Scalar, R: Rng + ?Sized>(rng: &mut R) -> T {
    T::lit(rng.sample::<f64, _>(StandardNormal))
}

pub fn uniform<T: Scalar, R: Rng + ?Sized>(rng: &mut R) -> T {
    T::lit(rng.random::<f64>())
}
