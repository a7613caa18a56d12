//! Unbounded bit tapes with a read offset.
//!
//! Bits are read most significant first, so the tape `b0 b1 b2 ...` read at
//! offset `o` has value `sum_j b_{o+j} 2^{-(j+1)}`. Random tapes are
//! counter-based: bit `j` of the tape at site `x` is a pure function of
//! `(seed, x, j)`, so no tape is ever materialised.

use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Maximum number of bits folded into an `f64` site value.
pub const VALUE_BITS: u32 = 53;

/// Per-bit distribution of a random tape.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BitBias {
    Fair,
    Bernoulli { p: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum TapeSource {
    /// Finite explicit prefix followed by zeros.
    Explicit(Arc<[bool]>),
    Random {
        seed: u64,
        site: i64,
        bias: BitBias,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tape {
    source: TapeSource,
    offset: u64,
}

pub(crate) fn stream_rng(seed: u64, stream: i64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Uniform draw in `[0, 1)` with 53 bits, from a u64 word.
pub(crate) fn unit_f64(word: u64) -> f64 {
    (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

impl Tape {
    pub fn explicit(bits: impl Into<Arc<[bool]>>) -> Self {
        Tape {
            source: TapeSource::Explicit(bits.into()),
            offset: 0,
        }
    }

    pub fn random(seed: u64, site: i64, bias: BitBias) -> Self {
        Tape {
            source: TapeSource::Random { seed, site, bias },
            offset: 0,
        }
    }

    pub fn source(&self) -> &TapeSource {
        &self.source
    }

    pub fn offset(&self) -> u64 {
        self.offset
    }

    pub fn advanced(&self, steps: u64) -> Tape {
        Tape {
            source: self.source.clone(),
            offset: self.offset + steps,
        }
    }

    /// Bits `offset .. offset + count` relative to the read head.
    pub fn bits(&self, count: usize) -> Vec<bool> {
        self.absolute_bits(self.offset, count)
    }

    fn absolute_bits(&self, start: u64, count: usize) -> Vec<bool> {
        match &self.source {
            TapeSource::Explicit(bits) => (0..count as u64)
                .map(|j| bits.get((start + j) as usize).copied().unwrap_or(false))
                .collect(),
            TapeSource::Random { seed, site, bias } => {
                let mut rng = stream_rng(*seed, *site);
                match *bias {
                    BitBias::Fair => {
                        let first = start / 32;
                        rng.set_word_pos(first as u128);
                        let mut out = Vec::with_capacity(count);
                        let mut word = rng.next_u32();
                        let mut pos = (start % 32) as u32;
                        for _ in 0..count {
                            if pos == 32 {
                                word = rng.next_u32();
                                pos = 0;
                            }
                            out.push((word >> (31 - pos)) & 1 == 1);
                            pos += 1;
                        }
                        out
                    }
                    BitBias::Bernoulli { p } => {
                        rng.set_word_pos(2 * start as u128);
                        (0..count).map(|_| unit_f64(rng.next_u64()) < p).collect()
                    }
                }
            }
        }
    }

    /// The next `bits` bits as an unsigned integer, first bit most significant.
    pub fn prefix_int(&self, bits: u32) -> u64 {
        debug_assert!(bits <= 64);
        self.bits(bits as usize)
            .into_iter()
            .fold(0u64, |acc, b| (acc << 1) | b as u64)
    }

    /// Value of the tape truncated to `bits` bits (at most [`VALUE_BITS`]).
    pub fn value(&self, bits: u32) -> f64 {
        let bits = bits.min(VALUE_BITS);
        self.prefix_int(bits) as f64 / (1u64 << bits) as f64
    }

    /// An explicit copy of the first `len` bits from the read head.
    pub fn materialise(&self, len: usize) -> Tape {
        Tape::explicit(self.bits(len))
    }
}
