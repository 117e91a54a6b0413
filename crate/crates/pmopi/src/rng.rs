//! Seeded randomness helpers.
//!
//! All stochastic quantities in this crate flow through explicitly seeded
//! ChaCha streams so that every simulation is reproducible bit-for-bit.
//! Gaussian variates use Box-Muller on the raw uniform stream instead of a
//! distribution crate, which keeps the sampled values independent of any
//! third-party ziggurat table layout.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

/// Derives an independent stream seed from a master seed and a stream index
/// (SplitMix64 finalizer). Used to give every Monte-Carlo trial, grid point,
/// and protocol party its own stream regardless of execution order.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A deterministic ChaCha stream for the given seed.
pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One pair of independent standard normal variates (Box-Muller).
pub fn standard_normal_pair<R: Rng>(rng: &mut R) -> (f64, f64) {
    // 1 - u keeps the argument of ln strictly positive.
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    let radius = (-2.0 * u1.ln()).sqrt();
    let angle = TAU * u2;
    (radius * angle.cos(), radius * angle.sin())
}

/// A circularly symmetric complex Gaussian sample with total variance
/// `variance` (each quadrature carries half of it).
pub fn complex_gaussian<R: Rng>(rng: &mut R, variance: f64) -> Complex64 {
    let (re, im) = standard_normal_pair(rng);
    let scale = (variance / 2.0).sqrt();
    Complex64::new(scale * re, scale * im)
}
