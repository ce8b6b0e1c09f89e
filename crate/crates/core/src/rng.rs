//! Seeded randomness.
//!
//! Every stochastic operation in this crate takes an explicit `u64` seed and
//! draws from [`Xoshiro256PlusPlus`], initialised through
//! `SeedableRng::seed_from_u64` (which expands the seed with SplitMix64).
//! Derived seeds (per trial, per doubling run) go through [`derive_seed`].

use std::collections::HashMap;

use rand::{Rng as _, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub type Rng = Xoshiro256PlusPlus;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

pub fn rng_from_seed(seed: u64) -> Rng {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// The SplitMix64 output function. A bijection on `u64`.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes the 128-bit concatenation `base || stream` down to a seed:
/// `mix64(mix64(base + γ) ^ stream)`.
///
/// For a fixed `base` this is injective in `stream`, since both the xor with a
/// constant and `mix64` are bijections.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    mix64(mix64(base.wrapping_add(GOLDEN_GAMMA)) ^ stream)
}

/// Draws `t` distinct indices from `0..n` uniformly without replacement, in
/// draw order, using a partial Fisher-Yates shuffle of `[0, n)`.
///
/// Position `i` of the output swaps with a uniform position in `i..n`. For
/// small `t` the permuted prefix is tracked sparsely so the work is O(t); the
/// dense and sparse paths consume the RNG identically and return the same
/// sequence.
pub fn sample_without_replacement(rng: &mut Rng, n: usize, t: usize) -> Vec<usize> {
    assert!(t <= n, "cannot draw {t} distinct indices from {n}");
    if t.saturating_mul(4) >= n {
        let mut perm: Vec<usize> = (0..n).collect();
        for i in 0..t {
            let j = rng.random_range(i..n);
            perm.swap(i, j);
        }
        perm.truncate(t);
        perm
    } else {
        let mut moved: HashMap<usize, usize> = HashMap::with_capacity(2 * t);
        let mut out = Vec::with_capacity(t);
        for i in 0..t {
            let j = rng.random_range(i..n);
            let at_i = moved.get(&i).copied().unwrap_or(i);
            let at_j = moved.get(&j).copied().unwrap_or(j);
            moved.insert(j, at_i);
            out.push(at_j);
        }
        out
    }
}
