//! Shared fixtures for the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use noisekey::gf::Elem;
use noisekey::{CodeSpec, Params};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The (255, 167) code over GF(256).
pub fn design_code() -> CodeSpec {
    Params::preset("paper-255-167").unwrap().code().unwrap()
}

pub fn random_info(code: &CodeSpec, rng: &mut impl Rng) -> Vec<Elem> {
    let top = 1u32 << code.m();
    (0..code.k()).map(|_| rng.random_range(0..top) as Elem).collect()
}

/// A codeword with `errors` symbols replaced by random nonzero offsets.
pub fn corrupted(code: &CodeSpec, errors: usize, rng: &mut impl Rng) -> Vec<Elem> {
    let mut word = code.encode(&random_info(code, rng)).unwrap();
    let top = 1u32 << code.m();
    for pos in rand::seq::index::sample(rng, code.n(), errors) {
        word[pos] ^= rng.random_range(1..top) as Elem;
    }
    word
}

pub fn random_bits(len: usize, rng: &mut impl Rng) -> Vec<bool> {
    (0..len).map(|_| rng.random()).collect()
}
