use std::ops::Range;

use rayon::prelude::*;
use serde::Serialize;

use super::entropy::separated_subset;
use super::volume::{sample_for_window, HaloMode};
use crate::complexity::{complexity, Backend};
use crate::covering::{encode_orbit, QuantizerCovering};
use crate::error::{Error, Result};
use crate::lattice::{evolve, translate, LatticeConfiguration, MeasureSampler, SystemDefinition};
use crate::window::Window;

/// Largest tolerated `|Σ weights − 1|`.
pub const NORMALISATION_TOLERANCE: f64 = 1.0 / (1u64 << 40) as f64;

/// A finitely supported probability measure on configurations observed
/// through a common window.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmpiricalMeasure {
    #[serde(skip)]
    atoms: Vec<(LatticeConfiguration, f64)>,
    window: Window,
}

impl EmpiricalMeasure {
    /// Equal weights on `configs`, each of which must cover `window`.
    pub fn uniform(configs: Vec<LatticeConfiguration>, window: Window) -> Result<Self> {
        if configs.is_empty() {
            return Err(Error::domain("a measure needs at least one atom"));
        }
        for c in &configs {
            c.check_covers(&window)?;
        }
        let w = 1.0 / configs.len() as f64;
        Ok(EmpiricalMeasure {
            atoms: configs.into_iter().map(|c| (c, w)).collect(),
            window,
        })
    }

    pub fn atoms(&self) -> &[(LatticeConfiguration, f64)] {
        &self.atoms
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    pub fn is_normalised(&self) -> bool {
        (self.total_weight() - 1.0).abs() <= NORMALISATION_TOLERANCE
    }
}

/// Uniform measure on the greedy `(Λ, n, ε)`-separated subset of `M` draws.
///
/// Draws carry enough surroundings for `horizon` further coded steps, so the
/// atoms can be coded over that many steps afterwards.
#[allow(clippy::too_many_arguments)]
pub fn build_empirical_measure(
    sampler: &MeasureSampler,
    system: &SystemDefinition,
    window: &Window,
    n: u64,
    eps: f64,
    ensemble: usize,
    horizon: u64,
    mode: HaloMode,
) -> Result<EmpiricalMeasure> {
    if ensemble == 0 || n == 0 {
        return Err(Error::domain("ensemble and n must be positive"));
    }
    let steps = horizon.max(n).saturating_sub(1) * system.tau;
    let draws: Vec<LatticeConfiguration> = (0..ensemble as u64)
        .into_par_iter()
        .map(|i| sample_for_window(&sampler.nth(i), system, window, steps, mode))
        .collect();
    let keep = separated_subset(&draws, system, window, n, eps)?;
    let atoms: Vec<LatticeConfiguration> = keep.into_iter().map(|i| draws[i].clone()).collect();
    EmpiricalMeasure::uniform(atoms, *window)
}

/// Pushes each atom forward by `ζ_x φ_{tτ}` for every `t` and `x` in the
/// ranges, splitting its weight equally.
pub fn time_space_average(
    measure: &EmpiricalMeasure,
    system: &SystemDefinition,
    t_range: Range<u64>,
    x_range: Range<i64>,
) -> Result<EmpiricalMeasure> {
    if t_range.is_empty() || x_range.is_empty() {
        return Err(Error::domain("time and space ranges must be non-empty"));
    }
    let share = 1.0 / ((t_range.end - t_range.start) as f64 * (x_range.end - x_range.start) as f64);
    let mut atoms = Vec::new();
    for (g, w) in &measure.atoms {
        for t in t_range.clone() {
            let moved = evolve(g, system, t * system.tau)?;
            for x in x_range.clone() {
                let c = translate(&moved, x);
                c.check_covers(&measure.window)?;
                atoms.push((c, w * share));
            }
        }
    }
    Ok(EmpiricalMeasure {
        atoms,
        window: measure.window,
    })
}

/// `(1/|Λ|) ∫ K(ψ(g, n, U)) / n dν(g)` in bits per coded step per site.
pub fn measure_complexity(
    measure: &EmpiricalMeasure,
    system: &SystemDefinition,
    covering: &QuantizerCovering,
    backend: &Backend,
    n: u64,
) -> Result<f64> {
    if covering.window() != measure.window {
        return Err(Error::WindowMismatch {
            requested: covering.window(),
            available: measure.window,
        });
    }
    if n == 0 {
        return Err(Error::domain("n must be positive"));
    }
    let rates: Vec<f64> = measure
        .atoms
        .par_iter()
        .map(|(g, w)| {
            let word = encode_orbit(g, system, covering, n)?;
            Ok(w * complexity(&word, backend)? / n as f64)
        })
        .collect::<Result<_>>()?;
    Ok(rates.iter().sum::<f64>() / measure.window.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covering::build_covering;
    use crate::estimators::entropy::bit_tape_ensemble;
    use crate::lattice::HaloPolicy;
    use proptest::prelude::*;

    fn w(lo: i64, hi: i64) -> Window {
        Window::new(lo, hi).unwrap()
    }

    #[test]
    fn coarse_eps_gives_a_single_atom() {
        let sys = SystemDefinition::logistic_cml(4.0, 0.0);
        let s = MeasureSampler::uniform(&sys, 1);
        let m = build_empirical_measure(&s, &sys, &w(0, 2), 4, 1.5, 50, 4, HaloMode::LightCone)
            .unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.atoms()[0].1, 1.0);
    }

    #[test]
    fn exhaustive_micro_case_has_eight_atoms() {
        let sys = SystemDefinition::bit_tape(1);
        let ens = bit_tape_ensemble(1, 1, 3).unwrap();
        let keep = separated_subset(&ens, &sys, &w(0, 1), 3, 0.5).unwrap();
        let m =
            EmpiricalMeasure::uniform(keep.into_iter().map(|i| ens[i].clone()).collect(), w(0, 1))
                .unwrap();
        assert_eq!(m.len(), 8);
        assert!(m.atoms().iter().all(|a| a.1 == 0.125));
    }

    #[test]
    fn identity_atom_has_small_complexity() {
        let sys = SystemDefinition::identity();
        let f = LatticeConfiguration::from_values(0, &[0.3], HaloPolicy::Periodic).unwrap();
        let m = EmpiricalMeasure::uniform(vec![f], w(0, 1)).unwrap();
        let cov = build_covering(w(0, 1), 0.25, 0).unwrap();
        let short = measure_complexity(&m, &sys, &cov, &Backend::default(), 1 << 12).unwrap();
        let long = measure_complexity(&m, &sys, &cov, &Backend::default(), 1 << 16).unwrap();
        assert!(long < short && long < 0.07, "{short} {long}");
    }

    #[test]
    fn averaging_keeps_mass_and_window() {
        let sys = SystemDefinition::elementary_ca(30);
        let s = MeasureSampler::uniform(&sys, 2);
        let m =
            build_empirical_measure(&s, &sys, &w(0, 4), 3, 0.5, 64, 8, HaloMode::Periodic).unwrap();
        let avg = time_space_average(&m, &sys, 0..3, -2..3).unwrap();
        assert_eq!(avg.len(), m.len() * 15);
        assert!(avg.is_normalised());
        assert_eq!(avg.window(), m.window());
    }

    #[test]
    fn averaging_needs_content_under_the_window() {
        let sys = SystemDefinition::elementary_ca(30);
        let s = MeasureSampler::uniform(&sys, 2);
        let m = build_empirical_measure(&s, &sys, &w(0, 4), 2, 0.5, 16, 2, HaloMode::LightCone)
            .unwrap();
        assert!(time_space_average(&m, &sys, 0..1, 0..3).is_err());
    }

    proptest! {
        #[test]
        fn weights_always_sum_to_one(count in 1usize..3000) {
            let configs = vec![LatticeConfiguration::from_values(0, &[0.5], HaloPolicy::Periodic).unwrap(); count];
            let m = EmpiricalMeasure::uniform(configs, w(0, 1)).unwrap();
            prop_assert!(m.is_normalised());
        }

        #[test]
        fn permuting_atoms_leaves_complexity_unchanged(seed in 0u64..1000, rot in 0usize..8) {
            let sys = SystemDefinition::bit_tape(2);
            let s = MeasureSampler::uniform(&sys, seed);
            let m = build_empirical_measure(&s, &sys, &w(0, 1), 2, 0.25, 8, 64, HaloMode::Periodic).unwrap();
            let mut configs: Vec<_> = m.atoms().iter().map(|a| a.0.clone()).collect();
            let len = configs.len();
            configs.rotate_left(rot % len);
            let p = EmpiricalMeasure::uniform(configs, w(0, 1)).unwrap();
            let cov = build_covering(w(0, 1), 0.25, 0).unwrap().with_tape_bits(2);
            let a = measure_complexity(&m, &sys, &cov, &Backend::default(), 64).unwrap();
            let b = measure_complexity(&p, &sys, &cov, &Backend::default(), 64).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
