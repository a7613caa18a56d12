//! Rate estimators: orbit complexity and its limits in time, covering,
//! volume, ε and τ; distinguishable-orbit counts and topological entropy;
//! empirical measures and the variational comparison.
//!
//! Every limit is a regression slope over a finite grid (see
//! [`ScalingEstimate`]). Work is spread over samples, windows and grid points
//! with rayon and reduced in a fixed order, so results do not depend on the
//! number of worker threads.

mod entropy;
mod measure;
mod orbit;
mod scaling;
mod variational;
mod volume;

pub use entropy::{
    bit_tape_ensemble, bit_tape_log2_count, count_distinguishable, entropy_pipeline, entropy_trend,
    sampled_entropy, separated_subset, trajectory, CountRow, DistinguishableCount, EntropyEstimate,
    EntropyTrend, WindowEntropy, TRUSTED_FRACTION,
};
pub use measure::{
    build_empirical_measure, measure_complexity, time_space_average, EmpiricalMeasure,
    NORMALISATION_TOLERANCE,
};
pub use orbit::{
    covering_infimum_rate, orbit_complexity, space_subadditivity, time_rate, time_subadditivity,
    InfimumRate, SpaceTrial, SubadditivityTrial, TimeRate,
};
pub use scaling::{mean_and_error, relative_gap, ScalingEstimate};
pub use variational::{variational_gap, VariationalGap, VariationalParams, VARIATIONAL_SLACK};
pub use volume::{
    epsilon_scan, sample_for_window, sample_rate, summarise_scan, tau_invariance, volume_rate,
    EpsilonScan, HaloMode, RateParams, TauReport, VolumeRate, WindowRate, CONVERGENCE_THRESHOLD,
    EPS_MONOTONE_ALLOWANCE, TAU_TOLERANCE,
};
