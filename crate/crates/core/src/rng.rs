//! Seeded, splittable random streams.
//!
//! A [`SimRng`] is not a generator itself but a position in a tree of
//! streams: `substream(i)` derives a child keyed by `i`, and `generator()`
//! instantiates a ChaCha8 generator for the node. Monte Carlo loops give each
//! trial (or sample block) its own child, so results do not depend on how the
//! work is split across workers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::C64;

pub const RNG_ALGORITHM: &str = "chacha8";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimRng {
    seed: u64,
    path: u64,
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        SimRng { seed, path: 0 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn algorithm(&self) -> &'static str {
        RNG_ALGORITHM
    }

    pub fn substream(&self, id: u64) -> SimRng {
        SimRng {
            seed: self.seed,
            path: splitmix64(self.path ^ splitmix64(id.wrapping_add(0x5851_f42d_4c95_7f2d))),
        }
    }

    pub fn generator(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.path);
        rng
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Circularly-symmetric complex Gaussian with the given total variance.
#[inline]
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(scale * re, scale * im)
}
