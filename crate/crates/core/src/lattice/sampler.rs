use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::config::{HaloPolicy, LatticeConfiguration, SiteState};
use super::system::{SiteKind, SystemDefinition};
use super::tape::{stream_rng, BitBias, Tape, VALUE_BITS};
use crate::window::Window;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution {
    /// Independent fair bits on every site tape.
    ProductUniform,
    /// Independent bits with `P(1) = p` on every site tape.
    Bernoulli { p: f64 },
}

impl Distribution {
    fn bias(&self) -> BitBias {
        match *self {
            Distribution::ProductUniform => BitBias::Fair,
            Distribution::Bernoulli { p } => BitBias::Bernoulli { p },
        }
    }
}

/// Product measure on the lattice. Every site draws from its own counter
/// stream keyed by the absolute site index, so samples are reproducible and
/// covariant under translation of the window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureSampler {
    pub site_kind: SiteKind,
    pub seed: u64,
    pub distribution: Distribution,
}

impl MeasureSampler {
    pub fn for_system(system: &SystemDefinition, seed: u64, distribution: Distribution) -> Self {
        MeasureSampler {
            site_kind: system.site_kind(),
            seed,
            distribution,
        }
    }

    pub fn uniform(system: &SystemDefinition, seed: u64) -> Self {
        Self::for_system(system, seed, Distribution::ProductUniform)
    }

    /// Sampler for the `index`-th member of an ensemble.
    pub fn nth(&self, index: u64) -> Self {
        MeasureSampler {
            seed: derive_seed(self.seed, index),
            ..*self
        }
    }

    fn site(&self, x: i64) -> SiteState {
        let tape = Tape::random(self.seed, x, self.distribution.bias());
        match self.site_kind {
            SiteKind::Tape => SiteState::Tape(tape),
            SiteKind::Value => SiteState::Value(tape.value(VALUE_BITS)),
            SiteKind::Cell { alphabet } => {
                let a = alphabet.max(1);
                let symbol = ((tape.value(VALUE_BITS) * a as f64) as u8).min(a - 1);
                SiteState::Cell {
                    symbol,
                    alphabet: a,
                }
            }
        }
    }
}

/// Independent child seed; a pure function of `(seed, index)`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut rng = stream_rng(seed ^ 0x5851_f42d_4c95_7f2d, index as i64);
    rng.next_u64()
}

/// Draws a configuration on `window` from the sampler's product measure.
pub fn sample_initial(
    sampler: &MeasureSampler,
    window: &Window,
    halo: HaloPolicy,
) -> LatticeConfiguration {
    let sites = window.sites().map(|x| sampler.site(x)).collect();
    LatticeConfiguration::from_parts(*window, sites, halo, 0)
}
