//! Admissible window sequences and windowed Birkhoff averages.
//!
//! A sequence `Λ_k = [a_k, b_k)` is admissible when its widths diverge and
//! its endpoints do not run away faster than the width grows. The liminf
//! conditions are checked on a finite prefix `k = 1..=K_max`, with the ratio
//! proxies evaluated over the second half of the prefix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{sample_initial, HaloPolicy, LatticeConfiguration, MeasureSampler};
use crate::window::Window;

pub const DEFAULT_L_MIN: f64 = 0.1;
pub const DEFAULT_K_MAX: u64 = 16;

pub const COND_SUCC_1: &str = "cond-succ-1";
pub const COND_SUCC_2: &str = "cond-succ-2";
pub const COND_SUCC_3: &str = "cond-succ-3";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdmissibleSequence {
    /// `[0, k)`
    Growing,
    /// `[-k, k)`
    Symmetric,
    /// `[⌊αk⌋, ⌊αk⌋ + k)`
    Drifting { alpha: f64 },
    /// `Λ_k` is the `k`-th entry (1-based) of the list.
    Explicit { windows: Vec<Window> },
    /// `[k², k² + k)`: the left end runs away faster than the width grows.
    Quadratic,
}

impl AdmissibleSequence {
    pub fn window(&self, k: u64) -> Result<Window> {
        if k == 0 {
            return Err(Error::domain("sequence indices start at 1"));
        }
        let ki = k as i64;
        match self {
            AdmissibleSequence::Growing => Window::new(0, ki),
            AdmissibleSequence::Symmetric => Window::new(-ki, ki),
            AdmissibleSequence::Drifting { alpha } => {
                let a = (alpha * k as f64).floor() as i64;
                Window::new(a, a + ki)
            }
            AdmissibleSequence::Explicit { windows } => windows
                .get(k as usize - 1)
                .copied()
                .ok_or_else(|| Error::domain(format!("explicit sequence has no entry {k}"))),
            AdmissibleSequence::Quadratic => Window::new(ki * ki, ki * ki + ki),
        }
    }

    pub fn name(&self) -> String {
        match self {
            AdmissibleSequence::Growing => "growing".into(),
            AdmissibleSequence::Symmetric => "symmetric".into(),
            AdmissibleSequence::Drifting { alpha } => format!("drifting({alpha})"),
            AdmissibleSequence::Explicit { windows } => format!("explicit({})", windows.len()),
            AdmissibleSequence::Quadratic => "quadratic".into(),
        }
    }

    /// Longest prefix the sequence can supply.
    pub fn max_index(&self) -> Option<u64> {
        match self {
            AdmissibleSequence::Explicit { windows } => Some(windows.len() as u64),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub pass: bool,
    /// First violated condition and its witnessing index.
    pub violation: Option<(&'static str, u64)>,
    /// Smallest tail value of `(b_k - a_k) / max(a_k, 0)`.
    pub l_a: f64,
    /// Smallest tail value of `(b_k - a_k) / -min(b_k, 0)`.
    pub l_b: f64,
    pub k_max: u64,
    pub l_min: f64,
}

impl ValidationReport {
    pub fn into_result(self) -> Result<Self> {
        match self.violation {
            Some((condition, k)) => Err(Error::Inadmissible { condition, k }),
            None => Ok(self),
        }
    }
}

fn ratio(width: f64, denom: f64) -> f64 {
    if denom <= 0.0 {
        f64::INFINITY
    } else {
        width / denom
    }
}

pub fn validate(seq: &AdmissibleSequence, l_min: f64, k_max: u64) -> Result<ValidationReport> {
    if k_max < 16 {
        return Err(Error::domain(format!(
            "K_max must be at least 16, got {k_max}"
        )));
    }
    if !(l_min > 0.0) {
        return Err(Error::domain("l_min must be positive"));
    }
    if let Some(m) = seq.max_index() {
        if m < k_max {
            return Err(Error::domain(format!(
                "explicit sequence has {m} windows, K_max is {k_max}"
            )));
        }
    }
    let windows = (1..=k_max)
        .map(|k| seq.window(k))
        .collect::<Result<Vec<_>>>()?;
    let half = (k_max / 2) as usize;
    let width = |w: &Window| w.len() as f64;

    let mut violation = None;
    let head_max = windows[..half].iter().map(width).fold(0.0, f64::max);
    if let Some(i) = windows[half..].iter().position(|w| width(w) <= head_max) {
        violation = Some((COND_SUCC_1, (half + i + 1) as u64));
    }

    let mut l_a = f64::INFINITY;
    let mut l_b = f64::INFINITY;
    for (i, w) in windows.iter().enumerate().skip(half) {
        let k = (i + 1) as u64;
        let ra = ratio(width(w), w.lo().max(0) as f64);
        let rb = ratio(width(w), -(w.hi().min(0) as f64));
        l_a = l_a.min(ra);
        l_b = l_b.min(rb);
        if violation.is_none() && ra < l_min {
            violation = Some((COND_SUCC_2, k));
        }
        if violation.is_none() && rb < l_min {
            violation = Some((COND_SUCC_3, k));
        }
    }
    Ok(ValidationReport {
        pass: violation.is_none(),
        violation,
        l_a,
        l_b,
        k_max,
        l_min,
    })
}

/// Supplies `ζ_j f` restricted to a fixed support window.
pub trait OrbitSource: Sync {
    fn shifted(&self, j: i64) -> LatticeConfiguration;
}

/// A sampled extended state; `ζ_j f` on `support` is the sample on `support + j`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledField {
    pub sampler: MeasureSampler,
    pub support: Window,
    pub halo: HaloPolicy,
}

impl OrbitSource for SampledField {
    fn shifted(&self, j: i64) -> LatticeConfiguration {
        let sample = sample_initial(&self.sampler, &self.support.shifted(j), self.halo);
        LatticeConfiguration::from_parts(self.support, sample.sites().to_vec(), self.halo, 0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowedAverage {
    /// `(k, |Λ_k|, mean of θ over Λ_k)`.
    pub averages: Vec<(u64, usize, f64)>,
    pub space_average: f64,
    /// `|last − space| / |space|`, or the absolute gap when the space average is 0.
    pub relative_deviation: f64,
    pub validation: ValidationReport,
}

/// Mean of `θ(ζ_j f)` over `j ∈ Λ_k` for each `k`, compared with `space_average`.
pub fn windowed_average(
    theta: &(dyn Fn(&LatticeConfiguration) -> f64 + Sync),
    source: &dyn OrbitSource,
    seq: &AdmissibleSequence,
    k_grid: &[u64],
    space_average: f64,
    l_min: f64,
) -> Result<WindowedAverage> {
    use rayon::prelude::*;
    if k_grid.is_empty() {
        return Err(Error::domain("k grid is empty"));
    }
    let k_max = k_grid.iter().copied().max().unwrap_or(0).max(DEFAULT_K_MAX);
    let validation = validate(seq, l_min, k_max)?.into_result()?;
    let averages = k_grid
        .iter()
        .map(|&k| {
            let w = seq.window(k)?;
            let vals: Vec<f64> = w
                .sites()
                .into_par_iter()
                .map(|j| theta(&source.shifted(j)))
                .collect();
            Ok((k, w.len(), vals.iter().sum::<f64>() / w.len() as f64))
        })
        .collect::<Result<Vec<_>>>()?;
    let last = averages.last().expect("non-empty").2;
    let gap = (last - space_average).abs();
    let relative_deviation = if space_average != 0.0 {
        gap / space_average.abs()
    } else {
        gap
    };
    Ok(WindowedAverage {
        averages,
        space_average,
        relative_deviation,
        validation,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundaryReport {
    /// `(k, ξ(ζ_{b_k} f) / (b_k − a_k))`.
    pub ratios: Vec<(u64, f64)>,
    /// Largest ratio over the second half of the grid.
    pub tail_max: f64,
    pub threshold: f64,
    pub pass: bool,
    /// Number of grid points with `ξ(ζ_k f) / k > η`.
    pub exceedances: usize,
    pub eta: f64,
}

pub fn boundary_term_check(
    xi: &(dyn Fn(&LatticeConfiguration) -> f64 + Sync),
    source: &dyn OrbitSource,
    seq: &AdmissibleSequence,
    k_grid: &[u64],
    threshold: f64,
    eta: f64,
) -> Result<BoundaryReport> {
    use rayon::prelude::*;
    if k_grid.is_empty() {
        return Err(Error::domain("k grid is empty"));
    }
    let ratios = k_grid
        .par_iter()
        .map(|&k| {
            let w = seq.window(k)?;
            let v = xi(&source.shifted(w.hi()));
            if !(v >= 0.0) {
                return Err(Error::domain(format!("boundary observable returned {v}")));
            }
            Ok((k, v / w.len() as f64))
        })
        .collect::<Result<Vec<_>>>()?;
    let exceedances = k_grid
        .par_iter()
        .filter(|&&k| xi(&source.shifted(k as i64)) / k as f64 > eta)
        .count();
    let tail_max = ratios[ratios.len() / 2..]
        .iter()
        .map(|r| r.1)
        .fold(0.0, f64::max);
    Ok(BoundaryReport {
        ratios,
        tail_max,
        threshold,
        pass: tail_max < threshold,
        exceedances,
        eta,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum IndexClass {
    /// Both endpoints at least `√(b_k − a_k)` from the origin.
    I1,
    /// Only the left endpoint is far.
    I2,
    /// Only the right endpoint is far.
    I3,
    /// Both endpoints are near the origin.
    I4,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SignPattern {
    PlusPlus,
    MinusPlus,
    MinusMinus,
}

impl std::fmt::Display for SignPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SignPattern::PlusPlus => "++",
            SignPattern::MinusPlus => "-+",
            SignPattern::MinusMinus => "--",
        })
    }
}

pub fn index_partition(
    seq: &AdmissibleSequence,
    k_grid: &[u64],
) -> Result<Vec<(u64, IndexClass, SignPattern)>> {
    k_grid
        .iter()
        .map(|&k| {
            let w = seq.window(k)?;
            let (a, b) = (w.lo(), w.hi());
            let s = (w.len() as f64).sqrt();
            let far_a = a.unsigned_abs() as f64 >= s;
            let far_b = b.unsigned_abs() as f64 >= s;
            let class = match (far_a, far_b) {
                (true, true) => IndexClass::I1,
                (true, false) => IndexClass::I2,
                (false, true) => IndexClass::I3,
                (false, false) => IndexClass::I4,
            };
            let sign = match (a >= 0, b >= 0) {
                (true, _) => SignPattern::PlusPlus,
                (false, true) => SignPattern::MinusPlus,
                (false, false) => SignPattern::MinusMinus,
            };
            Ok((k, class, sign))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{SiteState, SystemDefinition};

    #[test]
    fn validation_examples() {
        let r = validate(&AdmissibleSequence::Growing, 0.1, 16).unwrap();
        assert!(r.pass);
        assert_eq!(r.l_a, f64::INFINITY);

        let r = validate(&AdmissibleSequence::Quadratic, 0.1, 16).unwrap();
        assert!(!r.pass);
        let (cond, k) = r.violation.unwrap();
        assert_eq!(cond, COND_SUCC_2);
        // (b_k - a_k) / a_k = 1/k drops below 0.1 first at k = 11
        assert_eq!(k, 11);

        let r = validate(&AdmissibleSequence::Symmetric, 0.1, 16).unwrap();
        assert!(r.pass);
        assert!(r.l_a >= 1.0 && r.l_b >= 1.0);

        assert!(
            validate(&AdmissibleSequence::Drifting { alpha: 0.5 }, 0.1, 64)
                .unwrap()
                .pass
        );
        assert!(validate(&AdmissibleSequence::Growing, 0.1, 8).is_err());
    }

    #[test]
    fn non_diverging_and_left_running_sequences_fail() {
        let flat = AdmissibleSequence::Explicit {
            windows: (0..16).map(|_| Window::new(0, 5).unwrap()).collect(),
        };
        assert_eq!(
            validate(&flat, 0.1, 16).unwrap().violation.unwrap().0,
            COND_SUCC_1
        );

        let left = AdmissibleSequence::Explicit {
            windows: (1..=16i64)
                .map(|k| Window::new(-k * k - k, -k * k).unwrap())
                .collect(),
        };
        assert_eq!(
            validate(&left, 0.1, 16).unwrap().violation.unwrap().0,
            COND_SUCC_3
        );
        assert!(matches!(
            validate(&left, 0.1, 16).unwrap().into_result(),
            Err(Error::Inadmissible {
                condition: COND_SUCC_3,
                ..
            })
        ));
    }

    #[test]
    fn constant_observable_averages_to_itself() {
        let source = SampledField {
            sampler: MeasureSampler::uniform(&SystemDefinition::logistic_cml(4.0, 0.0), 1),
            support: Window::new(0, 1).unwrap(),
            halo: HaloPolicy::FixedHalo { width: 0 },
        };
        let r = windowed_average(
            &|_| 0.75,
            &source,
            &AdmissibleSequence::Growing,
            &[16, 64],
            0.75,
            0.1,
        )
        .unwrap();
        assert!(r.averages.iter().all(|a| a.2 == 0.75));
        assert_eq!(r.relative_deviation, 0.0);
    }

    #[test]
    fn site_value_average_is_near_one_half() {
        let source = SampledField {
            sampler: MeasureSampler::uniform(&SystemDefinition::logistic_cml(4.0, 0.0), 77),
            support: Window::new(0, 1).unwrap(),
            halo: HaloPolicy::FixedHalo { width: 0 },
        };
        let theta = |c: &LatticeConfiguration| c.sites()[0].real(53);
        let r = windowed_average(
            &theta,
            &source,
            &AdmissibleSequence::Growing,
            &[1 << 14],
            0.5,
            0.1,
        )
        .unwrap();
        assert!((0.48..=0.52).contains(&r.averages[0].2));
    }

    #[test]
    fn inadmissible_sequences_are_rejected_before_averaging() {
        let source = SampledField {
            sampler: MeasureSampler::uniform(&SystemDefinition::identity(), 0),
            support: Window::new(0, 1).unwrap(),
            halo: HaloPolicy::FixedHalo { width: 0 },
        };
        let r = windowed_average(
            &|_| 1.0,
            &source,
            &AdmissibleSequence::Quadratic,
            &[4],
            1.0,
            0.1,
        );
        assert!(matches!(
            r,
            Err(Error::Inadmissible {
                condition: COND_SUCC_2,
                ..
            })
        ));
    }

    #[test]
    fn boundary_terms() {
        let source = SampledField {
            sampler: MeasureSampler::uniform(&SystemDefinition::identity(), 3),
            support: Window::new(0, 2).unwrap(),
            halo: HaloPolicy::FixedHalo { width: 0 },
        };
        let grid: Vec<u64> = (4..12).map(|e| 1u64 << e).collect();
        let zero = boundary_term_check(
            &|_| 0.0,
            &source,
            &AdmissibleSequence::Growing,
            &grid,
            0.05,
            0.01,
        )
        .unwrap();
        assert!(zero.pass && zero.ratios.iter().all(|r| r.1 == 0.0));
        let bounded = |c: &LatticeConfiguration| match &c.sites()[0] {
            SiteState::Value(v) => 3.0 * v,
            _ => 0.0,
        };
        let r = boundary_term_check(
            &bounded,
            &source,
            &AdmissibleSequence::Growing,
            &grid,
            0.05,
            0.01,
        )
        .unwrap();
        for (k, ratio) in &r.ratios {
            assert!(*ratio <= 3.0 / *k as f64);
        }
        assert!(r.pass);
    }

    #[test]
    fn index_partition_examples() {
        let grid: Vec<u64> = (1..=64).collect();
        let growing = index_partition(&AdmissibleSequence::Growing, &grid).unwrap();
        assert!(growing
            .iter()
            .all(|(_, c, s)| *c == IndexClass::I3 && *s == SignPattern::PlusPlus));
        let sym = index_partition(&AdmissibleSequence::Symmetric, &grid).unwrap();
        assert!(sym
            .iter()
            .filter(|(k, _, _)| *k >= 4)
            .all(|(_, c, s)| *c == IndexClass::I1 && *s == SignPattern::MinusPlus));
        for seq in [
            AdmissibleSequence::Growing,
            AdmissibleSequence::Symmetric,
            AdmissibleSequence::Drifting { alpha: 0.5 },
        ] {
            let labels = index_partition(&seq, &grid).unwrap();
            assert!(
                labels.iter().skip(4).all(|(_, c, _)| *c != IndexClass::I4),
                "{}",
                seq.name()
            );
        }
    }
}
