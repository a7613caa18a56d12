use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::orbit::{covering_infimum_rate, InfimumRate};
use super::scaling::{mean_and_error, relative_gap, ScalingEstimate};
use crate::complexity::{AxiomBounds, Backend};
use crate::ergodic::{
    validate, AdmissibleSequence, ValidationReport, DEFAULT_K_MAX, DEFAULT_L_MIN,
};
use crate::error::{Error, Result};
use crate::lattice::{
    derive_seed, sample_initial, HaloPolicy, LatticeConfiguration, MeasureSampler, SystemDefinition,
};
use crate::window::Window;

/// How a sampled window is given surroundings for evolution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HaloMode {
    /// Sample the full light cone so the window evolves as on the infinite lattice.
    #[default]
    LightCone,
    Periodic,
    IidRefresh,
}

/// A draw of `f` on `window` ready for `steps` elementary updates.
pub fn sample_for_window(
    sampler: &MeasureSampler,
    system: &SystemDefinition,
    window: &Window,
    steps: u64,
    mode: HaloMode,
) -> LatticeConfiguration {
    match mode {
        HaloMode::LightCone => {
            let width = steps * system.interaction_radius();
            sample_initial(
                sampler,
                &window.padded(width),
                HaloPolicy::FixedHalo { width },
            )
        }
        HaloMode::Periodic => sample_initial(sampler, window, HaloPolicy::Periodic),
        HaloMode::IidRefresh => sample_initial(
            sampler,
            window,
            HaloPolicy::iid(derive_seed(sampler.seed, u64::MAX)),
        ),
    }
}

/// Grids and tolerances shared by the rate estimators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RateParams {
    pub n_grid: Vec<u64>,
    pub max_level: u32,
    pub halo: HaloMode,
    /// Multiplicative allowance on the covering refinement ladder.
    pub level_tolerance: f64,
    pub l_min: f64,
    pub bounds: AxiomBounds,
}

impl Default for RateParams {
    fn default() -> Self {
        RateParams {
            n_grid: (1..=8).map(|i| i * 128).collect(),
            max_level: 1,
            halo: HaloMode::LightCone,
            level_tolerance: 1.1,
            l_min: DEFAULT_L_MIN,
            bounds: AxiomBounds::default(),
        }
    }
}

impl RateParams {
    fn steps(&self, system: &SystemDefinition) -> u64 {
        self.n_grid.last().map_or(0, |n| n.saturating_sub(1)) * system.tau
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowRate {
    pub k: u64,
    pub window: Window,
    /// Covering-infimum rate of each sample in bits per coded step.
    pub rates: Vec<f64>,
    pub mean: f64,
    pub std_err: f64,
    /// Every sample passed the refinement monotonicity check.
    pub levels_monotone: bool,
    /// Every sample passed the time sub-additivity check.
    pub subadditive: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VolumeRate {
    pub windows: Vec<WindowRate>,
    /// `(|Λ_k|, mean rate)` fitted against `|Λ_k|`.
    pub estimate: ScalingEstimate,
    pub validation: ValidationReport,
}

impl VolumeRate {
    /// Estimated bits per coded step per site.
    pub fn rate(&self) -> f64 {
        self.estimate.fitted_rate
    }
}

/// Covering-infimum rate of sample `index` on `window`.
pub fn sample_rate(
    sampler: &MeasureSampler,
    system: &SystemDefinition,
    window: &Window,
    eps: f64,
    backend: &Backend,
    index: u64,
    params: &RateParams,
) -> Result<InfimumRate> {
    let f = sample_for_window(
        &sampler.nth(index),
        system,
        window,
        params.steps(system),
        params.halo,
    );
    covering_infimum_rate(
        &f,
        system,
        window,
        eps,
        backend,
        &params.n_grid,
        params.max_level,
        params.level_tolerance,
        &params.bounds.slack_function(),
    )
}

/// Mean covering-infimum rate over μ-samples along an admissible sequence,
/// fitted against window size.
#[allow(clippy::too_many_arguments)]
pub fn volume_rate(
    sampler: &MeasureSampler,
    system: &SystemDefinition,
    eps: f64,
    backend: &Backend,
    seq: &AdmissibleSequence,
    k_grid: &[u64],
    samples: usize,
    params: &RateParams,
) -> Result<VolumeRate> {
    if samples == 0 {
        return Err(Error::domain("at least one sample is required"));
    }
    if k_grid.is_empty() || k_grid.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::domain(
            "window index grid must be non-empty and strictly increasing",
        ));
    }
    system.validate()?;
    let k_max = k_grid.iter().copied().max().unwrap_or(0).max(DEFAULT_K_MAX);
    let validation = validate(seq, params.l_min, k_max)?.into_result()?;
    let windows: Vec<(u64, Window)> = k_grid
        .iter()
        .map(|&k| Ok((k, seq.window(k)?)))
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, u64)> = (0..windows.len())
        .flat_map(|i| (0..samples as u64).map(move |j| (i, j)))
        .collect();
    let results: Vec<InfimumRate> = jobs
        .par_iter()
        .map(|&(i, j)| sample_rate(sampler, system, &windows[i].1, eps, backend, j, params))
        .collect::<Result<_>>()?;
    let per_window: Vec<WindowRate> = windows
        .iter()
        .zip(results.chunks(samples))
        .map(|(&(k, window), chunk)| {
            let rates: Vec<f64> = chunk.iter().map(|r| r.rate).collect();
            let (mean, std_err) = mean_and_error(&rates);
            WindowRate {
                k,
                window,
                rates,
                mean,
                std_err,
                levels_monotone: chunk.iter().all(|r| r.monotone),
                subadditive: chunk
                    .iter()
                    .all(|r| r.levels.iter().all(|(_, t)| t.subadditive())),
            }
        })
        .collect();
    let estimate = ScalingEstimate::fit(
        per_window
            .iter()
            .map(|w| (w.window.len() as f64, w.mean))
            .collect(),
    )?;
    log::debug!(
        "volume rate {} for {system} at eps {eps}",
        estimate.fitted_rate
    );
    Ok(VolumeRate {
        windows: per_window,
        estimate,
        validation,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpsilonScan {
    /// `(ε, K̂_μ(τ, ε))` with ε decreasing.
    pub rows: Vec<(f64, f64)>,
    /// No value falls more than `allowance` below its predecessor.
    pub monotone: bool,
    pub allowance: f64,
    /// Largest relative fall from one ε to the next.
    pub worst_drop: f64,
    /// Value at the smallest ε.
    pub terminal: f64,
    /// `|last − previous| / last < 0.1`.
    pub converged: bool,
}

pub const EPS_MONOTONE_ALLOWANCE: f64 = 0.05;
pub const CONVERGENCE_THRESHOLD: f64 = 0.1;

/// `K̂_μ(τ, ε)` over a strictly decreasing ε grid.
#[allow(clippy::too_many_arguments)]
pub fn epsilon_scan(
    sampler: &MeasureSampler,
    system: &SystemDefinition,
    backend: &Backend,
    eps_grid: &[f64],
    seq: &AdmissibleSequence,
    k_grid: &[u64],
    samples: usize,
    params: &RateParams,
) -> Result<EpsilonScan> {
    if eps_grid.is_empty() || eps_grid.windows(2).any(|p| p[1] >= p[0]) {
        return Err(Error::domain(
            "eps grid must be non-empty and strictly decreasing",
        ));
    }
    let rows: Vec<(f64, f64)> = eps_grid
        .par_iter()
        .map(|&eps| {
            let v = volume_rate(sampler, system, eps, backend, seq, k_grid, samples, params)?;
            Ok((eps, v.rate()))
        })
        .collect::<Result<_>>()?;
    Ok(summarise_scan(rows))
}

/// Monotonicity and convergence report for an ε table.
pub fn summarise_scan(rows: Vec<(f64, f64)>) -> EpsilonScan {
    let worst_drop = rows
        .windows(2)
        .map(|p| {
            let (prev, next) = (p[0].1, p[1].1);
            if prev > 0.0 {
                ((prev - next) / prev).max(0.0)
            } else if next < prev {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max);
    let terminal = rows.last().map_or(0.0, |r| r.1);
    let converged = match rows.len() {
        0 | 1 => false,
        n => {
            let prev = rows[n - 2].1;
            if terminal == 0.0 {
                prev == 0.0
            } else {
                ((terminal - prev) / terminal).abs() < CONVERGENCE_THRESHOLD
            }
        }
    };
    EpsilonScan {
        rows,
        monotone: worst_drop <= EPS_MONOTONE_ALLOWANCE,
        allowance: EPS_MONOTONE_ALLOWANCE,
        worst_drop,
        terminal,
        converged,
    }
}

pub const TAU_TOLERANCE: f64 = 0.15;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TauReport {
    /// `(τ, K̂_μ(τ), K̂_μ(τ) / τ)`.
    pub rows: Vec<(u64, f64, f64)>,
    /// Largest pairwise `|a − b| / max(|a|, |b|)` over the normalised rates.
    pub max_deviation: f64,
    pub pass: bool,
}

/// `K̂_μ(τ) / τ` for each τ; the ratios should not depend on τ.
#[allow(clippy::too_many_arguments)]
pub fn tau_invariance(
    sampler: &MeasureSampler,
    system: &SystemDefinition,
    eps: f64,
    backend: &Backend,
    tau_list: &[u64],
    seq: &AdmissibleSequence,
    k_grid: &[u64],
    samples: usize,
    params: &RateParams,
) -> Result<TauReport> {
    if tau_list.len() < 2 || tau_list.contains(&0) {
        return Err(Error::domain(
            "tau list needs at least two positive entries",
        ));
    }
    let rows: Vec<(u64, f64, f64)> = tau_list
        .par_iter()
        .map(|&tau| {
            let sys = system.with_tau(tau);
            let v = volume_rate(sampler, &sys, eps, backend, seq, k_grid, samples, params)?;
            Ok((tau, v.rate(), v.rate() / tau as f64))
        })
        .collect::<Result<_>>()?;
    let mut max_deviation: f64 = 0.0;
    for (i, a) in rows.iter().enumerate() {
        for b in &rows[i + 1..] {
            max_deviation = max_deviation.max(relative_gap(a.2, b.2));
        }
    }
    Ok(TauReport {
        rows,
        max_deviation,
        pass: max_deviation <= TAU_TOLERANCE,
    })
}
