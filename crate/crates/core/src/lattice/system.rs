use std::fmt;

use serde::{Deserialize, Serialize};

use super::config::{HaloPolicy, LatticeConfiguration, SiteState, SupMetric};
use super::tape::VALUE_BITS;
use crate::error::{Error, Result};
use crate::window::Window;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemKind {
    /// No dynamics. Test stub.
    Identity,
    /// Uncoupled doubling maps realised as shifts on bit tapes, observed at
    /// `precision` bits.
    BitTapeShift {
        precision: u32,
    },
    TentLattice {
        slope: f64,
    },
    /// Diffusively coupled logistic maps.
    LogisticCml {
        r: f64,
        coupling: f64,
    },
    ElementaryCa {
        rule: u8,
    },
}

/// What a system expects to find at each site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiteKind {
    Value,
    Tape,
    Cell { alphabet: u8 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemDefinition {
    #[serde(flatten)]
    pub kind: SystemKind,
    /// Elementary steps per unit of coded time.
    #[serde(default = "one")]
    pub tau: u64,
}

fn one() -> u64 {
    1
}

impl SystemDefinition {
    pub fn new(kind: SystemKind, tau: u64) -> Result<Self> {
        let s = SystemDefinition { kind, tau };
        s.validate()?;
        Ok(s)
    }

    pub fn identity() -> Self {
        SystemDefinition {
            kind: SystemKind::Identity,
            tau: 1,
        }
    }

    pub fn bit_tape(precision: u32) -> Self {
        SystemDefinition {
            kind: SystemKind::BitTapeShift { precision },
            tau: 1,
        }
    }

    pub fn logistic_cml(r: f64, coupling: f64) -> Self {
        SystemDefinition {
            kind: SystemKind::LogisticCml { r, coupling },
            tau: 1,
        }
    }

    pub fn elementary_ca(rule: u8) -> Self {
        SystemDefinition {
            kind: SystemKind::ElementaryCa { rule },
            tau: 1,
        }
    }

    pub fn with_tau(self, tau: u64) -> Self {
        SystemDefinition { tau, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tau == 0 {
            return Err(Error::domain("tau must be positive"));
        }
        match self.kind {
            SystemKind::BitTapeShift { precision } if precision == 0 || precision > VALUE_BITS => {
                Err(Error::domain(format!(
                    "tape precision {precision} outside 1..={VALUE_BITS}"
                )))
            }
            SystemKind::TentLattice { slope } if !(slope > 0.0 && slope <= 2.0) => {
                Err(Error::domain(format!("tent slope {slope} outside (0, 2]")))
            }
            SystemKind::LogisticCml { r, coupling }
                if !(r > 0.0 && r <= 4.0) || !(0.0..=1.0).contains(&coupling) =>
            {
                Err(Error::domain(format!(
                    "logistic parameters r = {r}, coupling = {coupling} out of range"
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn interaction_radius(&self) -> u64 {
        match self.kind {
            SystemKind::LogisticCml { coupling, .. } if coupling == 0.0 => 0,
            SystemKind::LogisticCml { .. } | SystemKind::ElementaryCa { .. } => 1,
            _ => 0,
        }
    }

    pub fn site_kind(&self) -> SiteKind {
        match self.kind {
            SystemKind::BitTapeShift { .. } => SiteKind::Tape,
            SystemKind::ElementaryCa { .. } => SiteKind::Cell { alphabet: 2 },
            _ => SiteKind::Value,
        }
    }

    pub fn metric(&self) -> SupMetric {
        match self.kind {
            SystemKind::BitTapeShift { precision } => SupMetric {
                tape_bits: precision,
            },
            _ => SupMetric::default(),
        }
    }

    pub fn id(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for SystemDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            SystemKind::Identity => write!(f, "identity")?,
            SystemKind::BitTapeShift { precision } => write!(f, "bit_tape_shift(k={precision})")?,
            SystemKind::TentLattice { slope } => write!(f, "tent_lattice(slope={slope})")?,
            SystemKind::LogisticCml { r, coupling } => {
                write!(f, "logistic_cml(r={r},c={coupling})")?
            }
            SystemKind::ElementaryCa { rule } => write!(f, "elementary_ca(rule={rule})")?,
        }
        write!(f, "[tau={}]", self.tau)
    }
}

fn logistic(r: f64, x: f64) -> f64 {
    r * x * (1.0 - x)
}

fn apply_local(
    kind: SystemKind,
    left: &SiteState,
    centre: &SiteState,
    right: &SiteState,
) -> Result<SiteState> {
    Ok(match kind {
        SystemKind::Identity => centre.clone(),
        SystemKind::BitTapeShift { .. } => match centre {
            SiteState::Tape(t) => SiteState::Tape(t.advanced(1)),
            _ => return Err(Error::domain("bit tape shift needs tape sites")),
        },
        SystemKind::TentLattice { slope } => {
            let x = centre.real(VALUE_BITS);
            SiteState::Value((slope * x.min(1.0 - x)).clamp(0.0, 1.0))
        }
        SystemKind::LogisticCml { r, coupling } => {
            let g = logistic(r, centre.real(VALUE_BITS));
            let v = if coupling == 0.0 {
                g
            } else {
                let gl = logistic(r, left.real(VALUE_BITS));
                let gr = logistic(r, right.real(VALUE_BITS));
                (1.0 - coupling) * g + 0.5 * coupling * (gl + gr)
            };
            SiteState::Value(v.clamp(0.0, 1.0))
        }
        SystemKind::ElementaryCa { rule } => {
            let bit = |s: &SiteState| match s {
                SiteState::Cell {
                    symbol,
                    alphabet: 2,
                } => Ok(*symbol),
                _ => Err(Error::domain("elementary CA needs binary cells")),
            };
            let idx = (bit(left)? << 2) | (bit(centre)? << 1) | bit(right)?;
            SiteState::Cell {
                symbol: (rule >> idx) & 1,
                alphabet: 2,
            }
        }
    })
}

fn step(config: &LatticeConfiguration, system: &SystemDefinition) -> Result<LatticeConfiguration> {
    let w = config.window();
    let sites = config.sites();
    let len = sites.len();
    let t = config.time();
    let halo = config.halo();
    let radius = system.interaction_radius();

    if radius == 0 {
        let next = sites
            .iter()
            .map(|s| apply_local(system.kind, s, s, s))
            .collect::<Result<Vec<_>>>()?;
        return Ok(LatticeConfiguration::from_parts(w, next, halo, t + 1));
    }

    match halo {
        HaloPolicy::Periodic => {
            let next = (0..len)
                .map(|i| {
                    let l = &sites[(i + len - 1) % len];
                    let r = &sites[(i + 1) % len];
                    apply_local(system.kind, l, &sites[i], r)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(LatticeConfiguration::from_parts(w, next, halo, t + 1))
        }
        HaloPolicy::IidRefresh { .. } => {
            let left = halo.halo_site(w.lo() - 1, t, &sites[0]);
            let right = halo.halo_site(w.hi(), t, &sites[len - 1]);
            let at = |i: isize| -> &SiteState {
                if i < 0 {
                    &left
                } else if i as usize >= len {
                    &right
                } else {
                    &sites[i as usize]
                }
            };
            let next = (0..len as isize)
                .map(|i| apply_local(system.kind, at(i - 1), at(i), at(i + 1)))
                .collect::<Result<Vec<_>>>()?;
            Ok(LatticeConfiguration::from_parts(w, next, halo, t + 1))
        }
        HaloPolicy::FixedHalo { width } => {
            if width < radius {
                return Err(Error::InsufficientHalo {
                    required: radius,
                    available: width,
                });
            }
            let next = (1..len - 1)
                .map(|i| apply_local(system.kind, &sites[i - 1], &sites[i], &sites[i + 1]))
                .collect::<Result<Vec<_>>>()?;
            let inner = w.shrunk(1).expect("interior is non-empty");
            Ok(LatticeConfiguration::from_parts(
                inner,
                next,
                HaloPolicy::FixedHalo { width: width - 1 },
                t + 1,
            ))
        }
    }
}

/// Applies `steps` elementary updates of `system`.
///
/// Under a fixed halo the stored window loses `radius` sites on each side per
/// step while the valid window stays put; the returned configuration carries
/// the shrunken window and the remaining halo width.
pub fn evolve(
    config: &LatticeConfiguration,
    system: &SystemDefinition,
    steps: u64,
) -> Result<LatticeConfiguration> {
    system.validate()?;
    if let HaloPolicy::FixedHalo { width } = config.halo() {
        let required = steps * system.interaction_radius();
        if width < required {
            return Err(Error::InsufficientHalo {
                required,
                available: width,
            });
        }
    }
    let mut c = config.clone();
    for _ in 0..steps {
        c = step(&c, system)?;
    }
    Ok(c)
}

/// Space translation `(ζ_y f)(x) = f(x + y)`.
///
/// Periodic configurations are rotated in place. Other configurations keep
/// their content and are relabelled onto `[lo - y, hi - y)`.
pub fn translate(config: &LatticeConfiguration, y: i64) -> LatticeConfiguration {
    let w = config.window();
    match config.halo() {
        HaloPolicy::Periodic => {
            let len = w.len();
            let k = y.rem_euclid(len as i64) as usize;
            let mut sites = config.sites().to_vec();
            sites.rotate_left(k);
            LatticeConfiguration::from_parts(w, sites, HaloPolicy::Periodic, config.time())
        }
        HaloPolicy::IidRefresh { seed, shift } => LatticeConfiguration::from_parts(
            w.shifted(-y),
            config.sites().to_vec(),
            HaloPolicy::IidRefresh {
                seed,
                shift: shift + y,
            },
            config.time(),
        ),
        halo @ HaloPolicy::FixedHalo { .. } => LatticeConfiguration::from_parts(
            w.shifted(-y),
            config.sites().to_vec(),
            halo,
            config.time(),
        ),
    }
}

/// `ζ_y f` restricted to `window`.
pub fn translate_onto(
    config: &LatticeConfiguration,
    y: i64,
    window: &Window,
) -> Result<LatticeConfiguration> {
    translate(config, y).restrict(window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::tape::Tape;
    use proptest::prelude::*;

    /// Elementary CA step written directly from the rule table.
    fn ca_oracle(rule: u8, cells: &[u8]) -> Vec<u8> {
        let n = cells.len();
        (0..n)
            .map(|i| {
                let l = cells[(i + n - 1) % n];
                let c = cells[i];
                let r = cells[(i + 1) % n];
                let table: [u8; 8] = std::array::from_fn(|k| (rule >> k) & 1);
                table[(4 * l + 2 * c + r) as usize]
            })
            .collect()
    }

    fn cells_of(c: &LatticeConfiguration) -> Vec<u8> {
        c.sites().iter().map(|s| s.as_cell().unwrap()).collect()
    }

    #[test]
    fn rule_90_on_a_four_cycle() {
        // rule 90 is left XOR right: (0,1,0,0) -> (1,0,1,0)
        let c =
            LatticeConfiguration::from_cells(0, &[0, 1, 0, 0], 2, HaloPolicy::Periodic).unwrap();
        let next = evolve(&c, &SystemDefinition::elementary_ca(90), 1).unwrap();
        assert_eq!(cells_of(&next), vec![1, 0, 1, 0]);
        assert_eq!(ca_oracle(90, &[0, 1, 0, 0]), vec![1, 0, 1, 0]);
    }

    #[test]
    fn zero_steps_is_identity() {
        let c = LatticeConfiguration::from_values(0, &[0.3, 0.7], HaloPolicy::iid(3)).unwrap();
        for sys in [
            SystemDefinition::logistic_cml(4.0, 0.3),
            SystemDefinition::identity(),
        ] {
            assert_eq!(evolve(&c, &sys, 0).unwrap(), c);
        }
    }

    #[test]
    fn bit_tape_advances_offset() {
        let tape = Tape::explicit(vec![false, true, true, false]);
        let c = LatticeConfiguration::from_tapes(0, vec![tape], HaloPolicy::Periodic).unwrap();
        let next = evolve(&c, &SystemDefinition::bit_tape(1), 2).unwrap();
        match &next.sites()[0] {
            SiteState::Tape(t) => assert_eq!(t.offset(), 2),
            other => panic!("unexpected site {other:?}"),
        }
    }

    #[test]
    fn fixed_halo_shrinks_and_guards() {
        let c =
            LatticeConfiguration::from_values(0, &[0.2; 10], HaloPolicy::FixedHalo { width: 3 })
                .unwrap();
        let sys = SystemDefinition::logistic_cml(3.9, 0.2);
        let next = evolve(&c, &sys, 3).unwrap();
        assert_eq!(next.window(), Window::new(3, 7).unwrap());
        assert_eq!(next.valid_window(), c.valid_window());
        match evolve(&c, &sys, 4) {
            Err(Error::InsufficientHalo {
                required,
                available,
            }) => {
                assert_eq!((required, available), (4, 3));
            }
            other => panic!("expected halo error, got {other:?}"),
        }
    }

    #[test]
    fn periodic_translation_examples() {
        let c = LatticeConfiguration::from_values(0, &[0.1, 0.2, 0.3, 0.4], HaloPolicy::Periodic)
            .unwrap();
        assert_eq!(translate(&c, 0), c);
        assert_eq!(translate(&c, 4), c);
        let one = translate(&c, 1);
        let vals: Vec<f64> = one.sites().iter().map(|s| s.as_value().unwrap()).collect();
        assert_eq!(vals, vec![0.2, 0.3, 0.4, 0.1]);
    }

    #[test]
    fn translate_onto_reports_missing_content() {
        let c = LatticeConfiguration::from_values(0, &[0.5; 6], HaloPolicy::FixedHalo { width: 1 })
            .unwrap();
        assert!(translate_onto(&c, 2, &Window::new(-2, 4).unwrap()).is_ok());
        assert!(matches!(
            translate_onto(&c, 2, &Window::new(0, 6).unwrap()),
            Err(Error::InsufficientHalo { .. })
        ));
    }

    fn arb_system() -> impl Strategy<Value = SystemDefinition> {
        prop_oneof![
            Just(SystemDefinition::identity()),
            (0.1f64..=2.0).prop_map(|slope| SystemDefinition {
                kind: SystemKind::TentLattice { slope },
                tau: 1
            }),
            (3.5f64..=4.0, 0.0f64..=1.0).prop_map(|(r, c)| SystemDefinition::logistic_cml(r, c)),
        ]
    }

    proptest! {
        #[test]
        fn periodic_commutation(values in prop::collection::vec(0.0f64..=1.0, 1..12),
                                y in -20i64..20, steps in 0u64..12, sys in arb_system()) {
            let c = LatticeConfiguration::from_values(0, &values, HaloPolicy::Periodic).unwrap();
            let a = evolve(&translate(&c, y), &sys, steps).unwrap();
            let b = translate(&evolve(&c, &sys, steps).unwrap(), y);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn periodic_ca_commutation(cells in prop::collection::vec(0u8..2, 1..16),
                                   rule in any::<u8>(), y in -20i64..20, steps in 0u64..10) {
            let c = LatticeConfiguration::from_cells(0, &cells, 2, HaloPolicy::Periodic).unwrap();
            let sys = SystemDefinition::elementary_ca(rule);
            let a = evolve(&translate(&c, y), &sys, steps).unwrap();
            let b = translate(&evolve(&c, &sys, steps).unwrap(), y);
            prop_assert_eq!(&a, &b);
            let mut oracle = cells.clone();
            for _ in 0..steps {
                oracle = ca_oracle(rule, &oracle);
            }
            prop_assert_eq!(cells_of(&evolve(&c, &sys, steps).unwrap()), oracle);
        }

        #[test]
        fn iid_refresh_commutation(values in prop::collection::vec(0.0f64..=1.0, 1..8),
                                   y in -20i64..20, steps in 0u64..8, seed in any::<u64>()) {
            let c = LatticeConfiguration::from_values(0, &values, HaloPolicy::iid(seed)).unwrap();
            let sys = SystemDefinition::logistic_cml(4.0, 0.4);
            let a = evolve(&translate(&c, y), &sys, steps).unwrap();
            let b = translate(&evolve(&c, &sys, steps).unwrap(), y);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn flow_property(values in prop::collection::vec(0.0f64..=1.0, 1..10),
                         s1 in 0u64..10, s2 in 0u64..10, sys in arb_system()) {
            let c = LatticeConfiguration::from_values(0, &values, HaloPolicy::Periodic).unwrap();
            let a = evolve(&evolve(&c, &sys, s1).unwrap(), &sys, s2).unwrap();
            prop_assert_eq!(a, evolve(&c, &sys, s1 + s2).unwrap());
        }

        #[test]
        fn translation_composes(values in prop::collection::vec(0.0f64..=1.0, 1..10),
                                a in -30i64..30, b in -30i64..30, periodic in any::<bool>()) {
            let halo = if periodic { HaloPolicy::Periodic } else { HaloPolicy::iid(9) };
            let c = LatticeConfiguration::from_values(0, &values, halo).unwrap();
            prop_assert_eq!(translate(&translate(&c, a), b), translate(&c, a + b));
        }

        #[test]
        fn metric_is_translation_invariant(v1 in prop::collection::vec(0.0f64..=1.0, 6),
                                           v2 in prop::collection::vec(0.0f64..=1.0, 6),
                                           y in -10i64..10, lo in 0i64..3, len in 1usize..4) {
            let halo = HaloPolicy::FixedHalo { width: 0 };
            let c1 = LatticeConfiguration::from_values(0, &v1, halo).unwrap();
            let c2 = LatticeConfiguration::from_values(0, &v2, halo).unwrap();
            let w = Window::with_len(lo, len).unwrap();
            let d = super::super::config::sup_distance(&c1, &c2, &w).unwrap();
            let dt = super::super::config::sup_distance(
                &translate(&c1, y), &translate(&c2, y), &w.shifted(-y)).unwrap();
            prop_assert_eq!(d, dt);
            let sym = super::super::config::sup_distance(&c2, &c1, &w).unwrap();
            prop_assert_eq!(d, sym);
        }
    }
}
