//! Helpers shared by the integration tests.

#![allow(dead_code)]

use ncindex::models::random;
use ncindex::models::ComposableCorners;
use ncindex::BlockOperator;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn composable(seed: u64) -> ComposableCorners {
    ComposableCorners::sample(seed).unwrap()
}

pub fn corner_noise(rng: &mut ChaCha8Rng, p: &BlockOperator, q: &BlockOperator, norm: f64) -> BlockOperator {
    random::random_corner_operator(rng, p, q, norm).unwrap()
}

pub fn smallest_nonzero_singular(t: &BlockOperator, rel: f64) -> f64 {
    random::smallest_nonzero_singular(t, rel).unwrap()
}
