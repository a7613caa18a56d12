//! Extended dynamical systems on the integer lattice.

mod config;
mod sampler;
mod separation;
mod system;
pub mod tape;

pub use config::{sup_distance, HaloPolicy, LatticeConfiguration, SiteState, SupMetric};
pub use sampler::{derive_seed, sample_initial, Distribution, MeasureSampler};
pub use separation::{estimate_separation_rate, SeparationEstimate};
pub use system::{evolve, translate, translate_onto, SiteKind, SystemDefinition, SystemKind};
pub use tape::{BitBias, Tape};
