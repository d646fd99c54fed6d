//! Seeded random streams. Every stochastic routine takes an explicit seed so
//! runs are reproducible independently of thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// SplitMix64 finalizer; used to derive well-separated child seeds.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `index`-th child of `master` (trial seeds, per-brick seeds).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(master ^ mix64(index.wrapping_add(0xA076_1D64_78BD_642F)))
}

/// Independent ChaCha stream `stream` of `seed`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Zero-mean Gaussian sample; exactly zero when `sigma == 0` so noise-free
/// runs stay bit-exact.
pub fn gaussian<R: rand::Rng + ?Sized>(rng: &mut R, sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return 0.0;
    }
    Normal::new(0.0, sigma)
        .map(|n| n.sample(rng))
        .unwrap_or(0.0)
}

/// Gaussian truncated to `±k·sigma` by resampling.
pub fn truncated_gaussian<R: rand::Rng + ?Sized>(rng: &mut R, sigma: f64, k: f64) -> f64 {
    if sigma <= 0.0 {
        return 0.0;
    }
    loop {
        let x = gaussian(rng, sigma);
        if x.abs() <= k * sigma {
            return x;
        }
    }
}
