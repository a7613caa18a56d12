use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{HaloPolicy, LatticeConfiguration, SiteState, SupMetric};
use super::sampler::{derive_seed, sample_initial, MeasureSampler};
use super::system::{evolve, SystemDefinition};
use super::tape::{Tape, VALUE_BITS};
use crate::error::{Error, Result};
use crate::window::Window;

/// Mean separations above this are treated as saturated and left out of the fit.
const SATURATION: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeparationEstimate {
    /// Least-squares growth rate of the mean log separation, per step.
    pub gamma: f64,
    /// Smallest `Γ` with `d_t <= Γ e^{γ t} ε` over all fitted samples.
    pub envelope: f64,
    /// Window erosion speed times `ε`: sites lost per step on each side is `Ĉ / ε`.
    pub front_speed: f64,
    /// Mean separation per step, `t = 0..=steps`.
    pub mean_distance: Vec<f64>,
    /// Steps actually simulated.
    pub steps: u64,
    /// Number of leading steps used in the fit.
    pub fitted: usize,
    /// The window was too narrow to reach `tmax`.
    pub partial: bool,
    /// First step at which the mean separation saturated.
    pub saturated_at: Option<u64>,
}

fn perturb(
    config: &LatticeConfiguration,
    eps: f64,
    tail_bits: usize,
    rng: &mut ChaCha8Rng,
) -> LatticeConfiguration {
    let hidden = (1.0 / eps).log2().ceil().max(0.0) as usize;
    let sites = config
        .sites()
        .iter()
        .map(|s| match s {
            SiteState::Value(v) => {
                let d = eps * (rng.random::<f64>() - 0.5);
                let mut x = v + d;
                if x > 1.0 {
                    x = 2.0 - x;
                }
                if x < 0.0 {
                    x = -x;
                }
                SiteState::Value(x)
            }
            SiteState::Tape(t) => {
                let mut bits = t.bits(hidden);
                bits.extend((0..tail_bits).map(|_| rng.random::<bool>()));
                SiteState::Tape(Tape::explicit(bits))
            }
            cell => cell.clone(),
        })
        .collect();
    LatticeConfiguration::from_parts(config.window(), sites, config.halo(), config.time())
}

fn least_squares_slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    if ys.len() < 2 {
        return 0.0;
    }
    let mx = (n - 1.0) / 2.0;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        let dx = i as f64 - mx;
        sxy += dx * (y - my);
        sxx += dx * dx;
    }
    sxy / sxx
}

/// Fits `d(φ_t f₁, φ_t f₂) < Γ e^{γt} ε` over perturbed pairs with
/// `d(f₁, f₂) < ε`, measuring on the window eroded by the interaction
/// radius per step.
pub fn estimate_separation_rate(
    system: &SystemDefinition,
    eps: f64,
    window: &Window,
    tmax: u64,
    trials: usize,
    seed: u64,
) -> Result<SeparationEstimate> {
    if !(eps > 0.0) {
        return Err(Error::domain(format!("eps must be positive, got {eps}")));
    }
    if trials < 8 {
        return Err(Error::domain(format!(
            "need at least 8 trials, got {trials}"
        )));
    }
    if tmax == 0 {
        return Err(Error::domain("tmax must be positive"));
    }
    system.validate()?;
    let radius = system.interaction_radius();
    let steps = if radius == 0 {
        tmax
    } else {
        tmax.min((window.len() as u64 - 1) / (2 * radius))
    };
    let halo = HaloPolicy::FixedHalo {
        width: radius * steps,
    };
    let metric = SupMetric {
        tape_bits: VALUE_BITS,
    };
    let sampler = MeasureSampler::uniform(system, seed);

    let mut dist = vec![vec![0.0f64; trials]; steps as usize + 1];
    for trial in 0..trials {
        let f1 = sample_initial(&sampler.nth(trial as u64), window, halo);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, u64::MAX - trial as u64));
        let f2 = perturb(&f1, eps, steps as usize + 64, &mut rng);
        let (mut a, mut b) = (f1, f2);
        for t in 0..=steps {
            if t > 0 {
                a = evolve(&a, system, 1)?;
                b = evolve(&b, system, 1)?;
            }
            dist[t as usize][trial] = metric.distance(&a, &b, &a.window())?;
        }
    }

    let mean_distance: Vec<f64> = dist
        .iter()
        .map(|d| d.iter().sum::<f64>() / trials as f64)
        .collect();
    let saturated_at = mean_distance
        .iter()
        .position(|m| *m >= SATURATION)
        .map(|t| t as u64);
    let fitted = mean_distance
        .iter()
        .zip(&dist)
        .take_while(|(m, d)| **m < SATURATION && d.iter().all(|x| *x > 0.0))
        .count();
    let mean_log: Vec<f64> = dist[..fitted]
        .iter()
        .map(|d| d.iter().map(|x| x.ln()).sum::<f64>() / trials as f64)
        .collect();
    let gamma = least_squares_slope(&mean_log);
    let envelope = dist[..fitted]
        .iter()
        .enumerate()
        .flat_map(|(t, d)| d.iter().map(move |x| x / (eps * (gamma * t as f64).exp())))
        .fold(0.0f64, f64::max);

    Ok(SeparationEstimate {
        gamma,
        envelope,
        front_speed: radius as f64 * eps,
        mean_distance,
        steps,
        fitted,
        partial: steps < tmax,
        saturated_at,
    })
}
