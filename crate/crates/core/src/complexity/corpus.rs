//! Seeded word corpora for the axiom harness.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ProductSample, WordPair};
use crate::covering::{build_covering, encode_orbit, product_covering, SymbolWord};
use crate::error::Result;
use crate::lattice::{sample_initial, HaloPolicy, MeasureSampler, SystemDefinition};
use crate::window::Window;

fn random_symbols(rng: &mut ChaCha8Rng, len: usize, alphabet: u128) -> Vec<u128> {
    (0..len).map(|_| rng.random_range(0..alphabet)).collect()
}

/// `count` i.i.d. uniform words with lengths uniform in `1..=max_len`.
pub fn random_words(seed: u64, count: usize, max_len: usize, alphabet: u128) -> Vec<SymbolWord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let len = rng.random_range(1..=max_len);
            SymbolWord {
                symbols: random_symbols(&mut rng, len, alphabet),
                alphabet,
                provenance: None,
            }
        })
        .collect()
}

/// Random words with a uniform split point in `0..=len`.
pub fn split_pairs(seed: u64, count: usize, max_len: usize, alphabet: u128) -> Vec<WordPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa5a5);
    random_words(seed, count, max_len, alphabet)
        .into_iter()
        .map(|word| {
            let split = rng.random_range(0..=word.len());
            WordPair { word, split }
        })
        .collect()
}

/// Uniform words over `A1 × A2`, coded as `x * |A2| + y`.
pub fn product_samples(
    seed: u64,
    count: usize,
    max_len: usize,
    a1: u128,
    a2: u128,
) -> Vec<ProductSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let len = rng.random_range(1..=max_len);
            let x = random_symbols(&mut rng, len, a1);
            let y = random_symbols(&mut rng, len, a2);
            let joint = x.iter().zip(&y).map(|(a, b)| a * a2 + b).collect();
            ProductSample {
                joint: SymbolWord {
                    symbols: joint,
                    alphabet: a1 * a2,
                    provenance: None,
                },
                first: SymbolWord {
                    symbols: x,
                    alphabet: a1,
                    provenance: None,
                },
                second: SymbolWord {
                    symbols: y,
                    alphabet: a2,
                    provenance: None,
                },
                q: 1,
            }
        })
        .collect()
}

/// Coded orbits of `system` on `[0, sites)` with random lengths and splits.
pub fn orbit_pairs(
    system: &SystemDefinition,
    eps: f64,
    sites: usize,
    max_len: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<WordPair>> {
    let window = Window::with_len(0, sites)?;
    let covering = build_covering(window, eps, 0)?;
    let sampler = MeasureSampler::uniform(system, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5a5a);
    (0..count)
        .map(|i| {
            let f = sample_initial(&sampler.nth(i as u64), &window, HaloPolicy::Periodic);
            let len = rng.random_range(1..=max_len);
            let word = encode_orbit(&f, system, &covering, len as u64)?;
            let split = rng.random_range(0..=len);
            Ok(WordPair { word, split })
        })
        .collect()
}

/// Coded orbits on `[0, l1 + l2)` projected onto `[0, l1)` and `[l1, l1 + l2)`.
pub fn orbit_product_samples(
    system: &SystemDefinition,
    eps: f64,
    l1: usize,
    l2: usize,
    max_len: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<ProductSample>> {
    let first = build_covering(Window::with_len(0, l1)?, eps, 0)?;
    let second = build_covering(Window::with_len(l1 as i64, l2)?, eps, 0)?;
    let product = product_covering(&first, &second)?;
    let window = product.joint.window();
    let sampler = MeasureSampler::uniform(system, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x3c3c);
    (0..count)
        .map(|i| {
            let f = sample_initial(&sampler.nth(i as u64), &window, HaloPolicy::Periodic);
            let len = rng.random_range(1..=max_len);
            let joint = encode_orbit(&f, system, &product.joint, len as u64)?;
            let (a, b) = product.project_word(&joint)?;
            Ok(ProductSample {
                joint,
                first: a,
                second: b,
                q: product.q,
            })
        })
        .collect()
}
