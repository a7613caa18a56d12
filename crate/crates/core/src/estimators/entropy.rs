use std::collections::HashSet;

use rayon::prelude::*;
use serde::Serialize;

use super::scaling::ScalingEstimate;
use super::volume::{sample_for_window, summarise_scan, EpsilonScan, HaloMode};
use crate::error::{Error, Result};
use crate::lattice::{
    evolve, HaloPolicy, LatticeConfiguration, MeasureSampler, SiteKind, SystemDefinition,
    SystemKind, Tape,
};
use crate::window::Window;

/// Counts above this fraction of the ensemble are left out of rate fits.
pub const TRUSTED_FRACTION: f64 = 0.25;

/// Windowed site values of `f` at coded times `0, τ, …, (n − 1)τ`, flattened
/// time-major.
pub fn trajectory(
    f: &LatticeConfiguration,
    system: &SystemDefinition,
    window: &Window,
    n: u64,
) -> Result<Vec<f64>> {
    let bits = system.metric().tape_bits;
    let mut out = Vec::with_capacity(n as usize * window.len());
    let mut state = f.clone();
    for t in 0..n {
        if t > 0 {
            state = evolve(&state, system, system.tau)?;
        }
        out.extend(state.values_on(window, bits)?);
    }
    Ok(out)
}

/// Smallest non-zero distance two site values of `system` can have, if any.
fn resolution(system: &SystemDefinition) -> Option<f64> {
    match (system.kind, system.site_kind()) {
        (SystemKind::BitTapeShift { precision }, _) => Some(2f64.powi(-(precision as i32))),
        (_, SiteKind::Cell { alphabet }) if alphabet >= 2 => Some(1.0 / (alphabet - 1) as f64),
        _ => None,
    }
}

fn distinct_first_occurrences(trajs: &[&[f64]]) -> Vec<usize> {
    let mut seen = HashSet::with_capacity(trajs.len());
    let mut keep = Vec::new();
    for (i, t) in trajs.iter().enumerate() {
        let key: Vec<u64> = t.iter().map(|v| v.to_bits()).collect();
        if seen.insert(key) {
            keep.push(i);
        }
    }
    keep
}

/// Greedy maximal subset whose members are pairwise `eps`-distinguishable,
/// scanning in ensemble order.
fn greedy_separated(trajs: &[&[f64]], eps: f64, res: Option<f64>) -> Vec<usize> {
    if trajs.is_empty() {
        return Vec::new();
    }
    if eps > 1.0 {
        return vec![0];
    }
    if res.is_some_and(|r| eps <= r) {
        return distinct_first_occurrences(trajs);
    }
    let mut kept: Vec<usize> = Vec::new();
    for (i, t) in trajs.iter().enumerate() {
        let apart = kept.iter().all(|&j| {
            t.iter()
                .zip(trajs[j].iter())
                .any(|(a, b)| (a - b).abs() >= eps)
        });
        if apart {
            kept.push(i);
        }
    }
    kept
}

/// Greedy cover by balls of radius `r` centred on ensemble members.
fn greedy_cover(trajs: &[&[f64]], r: f64, res: Option<f64>) -> usize {
    if res.is_some_and(|q| r <= q) {
        return distinct_first_occurrences(trajs).len();
    }
    let mut centres: Vec<usize> = Vec::new();
    for (i, t) in trajs.iter().enumerate() {
        let covered = centres.iter().any(|&j| {
            t.iter()
                .zip(trajs[j].iter())
                .all(|(a, b)| (a - b).abs() < r)
        });
        if !covered {
            centres.push(i);
        }
    }
    centres.len()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DistinguishableCount {
    pub n: u64,
    /// Greedy `(Λ, n, ε)`-separated count.
    pub n_lower: usize,
    /// Greedy cover count at radius `ε/4`.
    pub sigma_upper: usize,
    pub ensemble: usize,
    /// `n_lower` equals the ensemble size.
    pub saturated: bool,
}

fn check_ensemble(len: usize) -> Result<()> {
    if len < 2 {
        return Err(Error::domain(format!(
            "ensemble needs at least 2 members, got {len}"
        )));
    }
    Ok(())
}

fn trajectories(
    ensemble: &[LatticeConfiguration],
    system: &SystemDefinition,
    window: &Window,
    n: u64,
) -> Result<Vec<Vec<f64>>> {
    ensemble
        .par_iter()
        .map(|f| trajectory(f, system, window, n))
        .collect()
}

fn count_prefix(
    trajs: &[Vec<f64>],
    width: usize,
    n: u64,
    eps: f64,
    res: Option<f64>,
) -> DistinguishableCount {
    let cut: Vec<&[f64]> = trajs.iter().map(|t| &t[..n as usize * width]).collect();
    let n_lower = greedy_separated(&cut, eps, res).len();
    DistinguishableCount {
        n,
        n_lower,
        sigma_upper: greedy_cover(&cut, eps / 4.0, res),
        ensemble: trajs.len(),
        saturated: n_lower == trajs.len(),
    }
}

/// Distinguishable-orbit counts for an ensemble over `n` coded steps.
pub fn count_distinguishable(
    ensemble: &[LatticeConfiguration],
    system: &SystemDefinition,
    window: &Window,
    n: u64,
    eps: f64,
) -> Result<DistinguishableCount> {
    check_ensemble(ensemble.len())?;
    check_eps(eps)?;
    if n == 0 {
        return Err(Error::domain("n must be positive"));
    }
    let trajs = trajectories(ensemble, system, window, n)?;
    Ok(count_prefix(
        &trajs,
        window.len(),
        n,
        eps,
        resolution(system),
    ))
}

/// Indices of the greedy separated subset, in ensemble order.
pub fn separated_subset(
    ensemble: &[LatticeConfiguration],
    system: &SystemDefinition,
    window: &Window,
    n: u64,
    eps: f64,
) -> Result<Vec<usize>> {
    check_eps(eps)?;
    let trajs = trajectories(ensemble, system, window, n)?;
    let refs: Vec<&[f64]> = trajs.iter().map(|t| t.as_slice()).collect();
    Ok(greedy_separated(&refs, eps, resolution(system)))
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::domain(format!("eps must be positive, got {eps}")));
    }
    Ok(())
}

/// `log2 N` for the bit-tape lattice where a closed form exists.
///
/// Distinct tape prefixes of `k + n − 1` bits per site are distinguishable
/// once `eps ≤ 2^-k`; no two states are once `eps` exceeds the diameter.
pub fn bit_tape_log2_count(precision: u32, sites: usize, n: u64, eps: f64) -> Option<f64> {
    let step = 2f64.powi(-(precision as i32));
    if eps > 1.0 - step {
        Some(0.0)
    } else if eps <= step {
        Some((sites as u64 * (precision as u64 + n - 1)) as f64)
    } else {
        None
    }
}

/// Every bit-tape configuration on `[0, sites)` that differs within the
/// first `precision + n − 1` bits of some tape.
pub fn bit_tape_ensemble(
    precision: u32,
    sites: usize,
    n: u64,
) -> Result<Vec<LatticeConfiguration>> {
    let per_site = precision as u64 + n - 1;
    let total = per_site * sites as u64;
    if total > 24 {
        return Err(Error::EnumerationGuard {
            words: 1u128 << total.min(127),
            limit: 1 << 24,
        });
    }
    (0..1u64 << total)
        .map(|code| {
            let tapes = (0..sites as u64)
                .map(|s| {
                    let bits: Vec<bool> = (0..per_site)
                        .map(|b| code >> (total - 1 - (s * per_site + b)) & 1 == 1)
                        .collect();
                    Tape::explicit(bits)
                })
                .collect();
            LatticeConfiguration::from_tapes(0, tapes, HaloPolicy::Periodic)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CountRow {
    pub n: u64,
    pub log2_lower: f64,
    pub log2_upper: f64,
    pub saturated: bool,
    /// Used in the rate fit.
    pub trusted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowEntropy {
    pub window: Window,
    pub counts: Vec<CountRow>,
    /// `h_Λ(ε)`: growth of `log2 N` in `n`.
    pub h_window: ScalingEstimate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyEstimate {
    pub eps: f64,
    pub windows: Vec<WindowEntropy>,
    /// `(|Λ|, h_Λ(ε) / |Λ|)`.
    pub per_volume: Vec<(usize, f64)>,
    /// `h(ε)`: growth of `h_Λ(ε)` in `|Λ|`.
    pub h_eps: ScalingEstimate,
    /// Some count hit the ensemble size, so the estimate is a lower bound.
    pub ensemble_limited: bool,
    /// Counts came from the closed form rather than sampling.
    pub exact: bool,
}

impl EntropyEstimate {
    pub fn rate(&self) -> f64 {
        self.h_eps.fitted_rate
    }
}

fn check_windows_and_grid(windows: &[Window], n_grid: &[u64]) -> Result<()> {
    if windows.is_empty() || windows.windows(2).any(|p| p[1].len() <= p[0].len()) {
        return Err(Error::domain(
            "windows must be non-empty and strictly increasing in size",
        ));
    }
    if n_grid.is_empty() || n_grid[0] == 0 || n_grid.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::domain(
            "n grid must be positive and strictly increasing",
        ));
    }
    Ok(())
}

fn fit_counts(counts: &[CountRow]) -> Result<ScalingEstimate> {
    let trusted: Vec<(f64, f64)> = counts
        .iter()
        .filter(|c| c.trusted)
        .map(|c| (c.n as f64, c.log2_lower))
        .collect();
    ScalingEstimate::fit(trusted)
}

/// Marks the counts that enter the fit: all of them on the exact path,
/// otherwise those at most [`TRUSTED_FRACTION`] of the ensemble, falling back
/// to the two smallest `n` when fewer qualify.
fn mark_trusted(rows: &mut [CountRow], ensemble: usize) {
    let cap = (TRUSTED_FRACTION * ensemble as f64).log2();
    for r in rows.iter_mut() {
        r.trusted = r.log2_lower <= cap;
    }
    if rows.iter().filter(|r| r.trusted).count() < 2 {
        for (i, r) in rows.iter_mut().enumerate() {
            r.trusted = i < 2;
        }
    }
}

/// Topological entropy per unit time and volume at precision `eps`.
///
/// The bit-tape lattice uses its closed-form counts whenever they exist.
pub fn entropy_pipeline(
    sampler: &MeasureSampler,
    system: &SystemDefinition,
    eps: f64,
    windows: &[Window],
    n_grid: &[u64],
    ensemble: usize,
) -> Result<EntropyEstimate> {
    entropy_with(sampler, system, eps, windows, n_grid, ensemble, true)
}

/// [`entropy_pipeline`] that always counts a sampled ensemble.
pub fn sampled_entropy(
    sampler: &MeasureSampler,
    system: &SystemDefinition,
    eps: f64,
    windows: &[Window],
    n_grid: &[u64],
    ensemble: usize,
) -> Result<EntropyEstimate> {
    entropy_with(sampler, system, eps, windows, n_grid, ensemble, false)
}

fn entropy_with(
    sampler: &MeasureSampler,
    system: &SystemDefinition,
    eps: f64,
    windows: &[Window],
    n_grid: &[u64],
    ensemble: usize,
    allow_exact: bool,
) -> Result<EntropyEstimate> {
    check_eps(eps)?;
    check_windows_and_grid(windows, n_grid)?;
    system.validate()?;
    let n_max = *n_grid.last().expect("checked");
    let exact_precision = match system.kind {
        SystemKind::BitTapeShift { precision }
            if allow_exact
                && n_grid.iter().all(|n| {
                    bit_tape_log2_count(precision, 1, *n, eps).is_some()
                        && bit_tape_log2_count(precision, 1, *n, eps / 4.0).is_some()
                }) =>
        {
            Some(precision)
        }
        _ => None,
    };
    if exact_precision.is_none() {
        check_ensemble(ensemble)?;
    }
    let mut ensemble_limited = false;
    let mut per_window = Vec::with_capacity(windows.len());
    for window in windows {
        let counts = match exact_precision {
            Some(k) => n_grid
                .iter()
                .map(|&n| {
                    let lower = bit_tape_log2_count(k, window.len(), n, eps).expect("checked");
                    let upper =
                        bit_tape_log2_count(k, window.len(), n, eps / 4.0).expect("checked");
                    CountRow {
                        n,
                        log2_lower: lower,
                        log2_upper: upper,
                        saturated: false,
                        trusted: true,
                    }
                })
                .collect(),
            None => {
                let steps = (n_max - 1) * system.tau;
                let members: Vec<LatticeConfiguration> = (0..ensemble as u64)
                    .into_par_iter()
                    .map(|i| {
                        sample_for_window(
                            &sampler.nth(i),
                            system,
                            window,
                            steps,
                            HaloMode::LightCone,
                        )
                    })
                    .collect();
                let trajs = trajectories(&members, system, window, n_max)?;
                let res = resolution(system);
                let mut rows: Vec<CountRow> = n_grid
                    .par_iter()
                    .map(|&n| {
                        let c = count_prefix(&trajs, window.len(), n, eps, res);
                        CountRow {
                            n,
                            log2_lower: (c.n_lower as f64).log2(),
                            log2_upper: (c.sigma_upper as f64).log2(),
                            saturated: c.saturated,
                            trusted: true,
                        }
                    })
                    .collect();
                mark_trusted(&mut rows, ensemble);
                rows
            }
        };
        ensemble_limited |= counts.iter().any(|c: &CountRow| c.saturated);
        let h_window = fit_counts(&counts)?;
        per_window.push(WindowEntropy {
            window: *window,
            counts,
            h_window,
        });
    }
    let per_volume = per_window
        .iter()
        .map(|w| {
            (
                w.window.len(),
                w.h_window.fitted_rate / w.window.len() as f64,
            )
        })
        .collect();
    let h_eps = ScalingEstimate::fit(
        per_window
            .iter()
            .map(|w| (w.window.len() as f64, w.h_window.fitted_rate))
            .collect(),
    )?;
    if ensemble_limited {
        log::info!("entropy at eps {eps} for {system} is ensemble-limited");
    }
    Ok(EntropyEstimate {
        eps,
        windows: per_window,
        per_volume,
        h_eps,
        ensemble_limited,
        exact: exact_precision.is_some(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyTrend {
    pub estimates: Vec<EntropyEstimate>,
    /// `h(ε)` against decreasing ε with its monotonicity report; the terminal
    /// value is `ĥ_top`.
    pub trend: EpsilonScan,
}

/// [`entropy_pipeline`] over a strictly decreasing ε grid.
pub fn entropy_trend(
    sampler: &MeasureSampler,
    system: &SystemDefinition,
    eps_grid: &[f64],
    windows: &[Window],
    n_grid: &[u64],
    ensemble: usize,
) -> Result<EntropyTrend> {
    if eps_grid.is_empty() || eps_grid.windows(2).any(|p| p[1] >= p[0]) {
        return Err(Error::domain(
            "eps grid must be non-empty and strictly decreasing",
        ));
    }
    let estimates = eps_grid
        .iter()
        .map(|&eps| entropy_pipeline(sampler, system, eps, windows, n_grid, ensemble))
        .collect::<Result<Vec<_>>>()?;
    let trend = summarise_scan(estimates.iter().map(|e| (e.eps, e.rate())).collect());
    Ok(EntropyTrend { estimates, trend })
}
