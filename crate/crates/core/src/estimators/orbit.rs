use serde::Serialize;

use super::scaling::ScalingEstimate;
use crate::complexity::{complexity, prefix_complexities, Backend, SlackFunction};
use crate::covering::{
    build_covering, coarsen_word, encode_orbit, encode_segment, QuantizerCovering,
};
use crate::error::{Error, Result};
use crate::lattice::{LatticeConfiguration, SystemDefinition};
use crate::window::Window;

/// `K(ψ(φ_{mτ} f, n − m, U))` in bits.
pub fn orbit_complexity(
    f: &LatticeConfiguration,
    system: &SystemDefinition,
    covering: &QuantizerCovering,
    m: u64,
    n: u64,
    backend: &Backend,
) -> Result<f64> {
    let word = encode_segment(f, system, covering, m, n)?;
    complexity(&word, backend)
}

/// One instance of `K(0, n+m) ≤ K(0, n) + K(n, n+m) + h(n) + h(m)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SubadditivityTrial {
    pub n: u64,
    pub m: u64,
    pub whole: f64,
    pub parts: f64,
    pub slack: f64,
    pub holds: bool,
}

impl SubadditivityTrial {
    fn new(n: u64, m: u64, whole: f64, parts: f64, h: &SlackFunction) -> Self {
        let slack = h.eval(n as usize) + h.eval(m as usize);
        SubadditivityTrial {
            n,
            m,
            whole,
            parts,
            slack,
            holds: whole <= parts + slack,
        }
    }
}

/// Checks time sub-additivity for a single split of the orbit of `f`.
pub fn time_subadditivity(
    f: &LatticeConfiguration,
    system: &SystemDefinition,
    covering: &QuantizerCovering,
    backend: &Backend,
    n: u64,
    m: u64,
    h: &SlackFunction,
) -> Result<SubadditivityTrial> {
    if n == 0 || m == 0 {
        return Err(Error::domain("both segments must be non-empty"));
    }
    let word = encode_orbit(f, system, covering, n + m)?;
    let whole = complexity(&word, backend)?;
    let parts = complexity(&word.slice(0, n as usize), backend)?
        + complexity(&word.slice(n as usize, (n + m) as usize), backend)?;
    Ok(SubadditivityTrial::new(n, m, whole, parts, h))
}

/// One instance of `K_{Λ1∪Λ2}/n ≤ K_{Λ1}/n + K_{Λ2}/n + log2 q + 2h(n)/n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpaceTrial {
    pub n: u64,
    pub joint_rate: f64,
    pub parts_rate: f64,
    pub slack: f64,
    pub holds: bool,
}

/// Checks space sub-additivity over two adjacent windows at a common `eps`.
#[allow(clippy::too_many_arguments)]
pub fn space_subadditivity(
    f: &LatticeConfiguration,
    system: &SystemDefinition,
    first: &Window,
    second: &Window,
    eps: f64,
    backend: &Backend,
    n: u64,
    h: &SlackFunction,
) -> Result<SpaceTrial> {
    let bits = system.metric().tape_bits;
    let c1 = build_covering(*first, eps, 0)?.with_tape_bits(bits);
    let c2 = build_covering(*second, eps, 0)?.with_tape_bits(bits);
    let product = crate::covering::product_covering(&c1, &c2)?;
    let joint = encode_orbit(f, system, &product.joint, n)?;
    let (w1, w2) = product.project_word(&joint)?;
    let nf = n as f64;
    let joint_rate = complexity(&joint, backend)? / nf;
    let parts_rate = (complexity(&w1, backend)? + complexity(&w2, backend)?) / nf;
    let slack = (product.q as f64).log2() + 2.0 * h.eval(n as usize) / nf;
    Ok(SpaceTrial {
        n,
        joint_rate,
        parts_rate,
        slack,
        holds: joint_rate <= parts_rate + slack,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimeRate {
    /// `(n, K(0, n))` fitted against `n`.
    pub estimate: ScalingEstimate,
    /// Splits at consecutive grid points.
    pub subadditivity: Vec<SubadditivityTrial>,
}

impl TimeRate {
    pub fn rate(&self) -> f64 {
        self.estimate.fitted_rate
    }

    pub fn subadditive(&self) -> bool {
        self.subadditivity.iter().all(|t| t.holds)
    }
}

fn check_grid(n_grid: &[u64]) -> Result<()> {
    if n_grid.len() < 4 {
        return Err(Error::domain(format!(
            "time grid needs at least 4 points, got {}",
            n_grid.len()
        )));
    }
    if n_grid[0] == 0 || n_grid.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::domain(
            "time grid must be positive and strictly increasing",
        ));
    }
    Ok(())
}

/// Fits the growth of orbit complexity along `n_grid`.
pub fn time_rate(
    f: &LatticeConfiguration,
    system: &SystemDefinition,
    covering: &QuantizerCovering,
    backend: &Backend,
    n_grid: &[u64],
    h: &SlackFunction,
) -> Result<TimeRate> {
    check_grid(n_grid)?;
    let n_max = *n_grid.last().expect("checked");
    let word = encode_orbit(f, system, covering, n_max)?;
    rate_of_word(&word, backend, n_grid, h)
}

fn rate_of_word(
    word: &crate::covering::SymbolWord,
    backend: &Backend,
    n_grid: &[u64],
    h: &SlackFunction,
) -> Result<TimeRate> {
    let lengths: Vec<usize> = n_grid.iter().map(|n| *n as usize).collect();
    let ks = prefix_complexities(word, backend, &lengths)?;
    let mut subadditivity = Vec::with_capacity(n_grid.len() - 1);
    for i in 0..n_grid.len() - 1 {
        let (n, total) = (n_grid[i], n_grid[i + 1]);
        let tail = complexity(&word.slice(n as usize, total as usize), backend)?;
        subadditivity.push(SubadditivityTrial::new(
            n,
            total - n,
            ks[i + 1],
            ks[i] + tail,
            h,
        ));
    }
    let samples = n_grid
        .iter()
        .zip(&ks)
        .map(|(n, k)| (*n as f64, *k))
        .collect();
    Ok(TimeRate {
        estimate: ScalingEstimate::fit(samples)?,
        subadditivity,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InfimumRate {
    /// Time rate at each refinement level `0..=S`.
    pub levels: Vec<(u32, TimeRate)>,
    /// Minimum rate over levels.
    pub rate: f64,
    /// Each level is at most `tolerance` times the previous one.
    pub monotone: bool,
    pub tolerance: f64,
}

/// Time rate over the refinement ladder of the `eps` covering on `window`.
#[allow(clippy::too_many_arguments)]
pub fn covering_infimum_rate(
    f: &LatticeConfiguration,
    system: &SystemDefinition,
    window: &Window,
    eps: f64,
    backend: &Backend,
    n_grid: &[u64],
    max_level: u32,
    tolerance: f64,
    h: &SlackFunction,
) -> Result<InfimumRate> {
    check_grid(n_grid)?;
    let finest = build_covering(*window, eps, max_level)?.with_tape_bits(system.metric().tape_bits);
    let n_max = *n_grid.last().expect("checked");
    let fine_word = encode_orbit(f, system, &finest, n_max)?;
    let levels = (0..=max_level)
        .map(|s| {
            let word = if s == max_level {
                fine_word.clone()
            } else {
                coarsen_word(&fine_word, &finest, max_level - s)?
            };
            Ok((s, rate_of_word(&word, backend, n_grid, h)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let rates: Vec<f64> = levels.iter().map(|(_, r)| r.rate()).collect();
    let monotone = rates
        .windows(2)
        .all(|p| p[1] <= tolerance * p[0].max(0.0) + 1e-9);
    let rate = rates.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(InfimumRate {
        levels,
        rate,
        monotone,
        tolerance,
    })
}
