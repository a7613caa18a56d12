use serde::{Deserialize, Serialize};

use super::tape::{unit_f64, Tape, VALUE_BITS};
use crate::error::{Error, Result};
use crate::window::Window;

#[derive(Clone, Debug, PartialEq)]
pub enum SiteState {
    /// Map-lattice value in `[0, 1]`.
    Value(f64),
    Tape(Tape),
    Cell {
        symbol: u8,
        alphabet: u8,
    },
}

impl SiteState {
    pub fn cell(symbol: u8, alphabet: u8) -> Result<Self> {
        if alphabet == 0 || symbol >= alphabet {
            return Err(Error::domain(format!(
                "cell symbol {symbol} outside alphabet of size {alphabet}"
            )));
        }
        Ok(SiteState::Cell { symbol, alphabet })
    }

    pub fn value(v: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::domain(format!("site value {v} outside [0, 1]")));
        }
        Ok(SiteState::Value(v))
    }

    /// Real value of the site; tapes are truncated to `tape_bits` bits.
    pub fn real(&self, tape_bits: u32) -> f64 {
        match self {
            SiteState::Value(v) => *v,
            SiteState::Tape(t) => t.value(tape_bits),
            SiteState::Cell { symbol, alphabet } => {
                if *alphabet < 2 {
                    0.0
                } else {
                    *symbol as f64 / (*alphabet - 1) as f64
                }
            }
        }
    }

    pub fn as_cell(&self) -> Option<u8> {
        match self {
            SiteState::Cell { symbol, .. } => Some(*symbol),
            _ => None,
        }
    }

    pub fn as_value(&self) -> Option<f64> {
        match self {
            SiteState::Value(v) => Some(*v),
            _ => None,
        }
    }
}

/// How content outside the stored window is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HaloPolicy {
    /// The window is a ring.
    Periodic,
    /// Neighbours outside the window are fresh i.i.d. draws keyed by
    /// absolute site and time. `shift` tracks accumulated translations so
    /// that keys stay attached to the same physical site.
    IidRefresh {
        seed: u64,
        #[serde(default)]
        shift: i64,
    },
    /// The outer `width` sites on each side are a finite halo; the valid
    /// window shrinks by the interaction radius per step.
    FixedHalo { width: u64 },
}

impl HaloPolicy {
    pub fn iid(seed: u64) -> Self {
        HaloPolicy::IidRefresh { seed, shift: 0 }
    }

    /// Value drawn for the halo site `x` at time `t`, shaped like `like`.
    pub(crate) fn halo_site(&self, x: i64, t: u64, like: &SiteState) -> SiteState {
        let HaloPolicy::IidRefresh { seed, shift } = *self else {
            unreachable!("halo draws are only made under iid refresh")
        };
        let mut rng = super::tape::stream_rng(seed ^ 0x9e37_79b9_7f4a_7c15, x + shift);
        rng.set_word_pos(2 * t as u128);
        let u = unit_f64(rand::RngCore::next_u64(&mut rng));
        match like {
            SiteState::Value(_) | SiteState::Tape(_) => SiteState::Value(u),
            SiteState::Cell { alphabet, .. } => SiteState::Cell {
                symbol: ((u * *alphabet as f64) as u8).min(alphabet - 1),
                alphabet: *alphabet,
            },
        }
    }
}

/// A finite restriction `f|_Λ` of an extended state.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeConfiguration {
    window: Window,
    sites: Vec<SiteState>,
    halo: HaloPolicy,
    time: u64,
}

impl LatticeConfiguration {
    pub fn new(window: Window, sites: Vec<SiteState>, halo: HaloPolicy) -> Result<Self> {
        if sites.len() != window.len() {
            return Err(Error::domain(format!(
                "{} sites given for window {window}",
                sites.len()
            )));
        }
        if let HaloPolicy::FixedHalo { width } = halo {
            if 2 * width >= window.len() as u64 {
                return Err(Error::domain(format!(
                    "fixed halo of width {width} leaves no interior in {window}"
                )));
            }
        }
        Ok(LatticeConfiguration {
            window,
            sites,
            halo,
            time: 0,
        })
    }

    pub fn from_values(lo: i64, values: &[f64], halo: HaloPolicy) -> Result<Self> {
        let sites = values
            .iter()
            .map(|v| SiteState::value(*v))
            .collect::<Result<Vec<_>>>()?;
        Self::new(Window::with_len(lo, values.len())?, sites, halo)
    }

    pub fn from_cells(lo: i64, cells: &[u8], alphabet: u8, halo: HaloPolicy) -> Result<Self> {
        let sites = cells
            .iter()
            .map(|c| SiteState::cell(*c, alphabet))
            .collect::<Result<Vec<_>>>()?;
        Self::new(Window::with_len(lo, cells.len())?, sites, halo)
    }

    pub fn from_tapes(lo: i64, tapes: Vec<Tape>, halo: HaloPolicy) -> Result<Self> {
        let w = Window::with_len(lo, tapes.len())?;
        Self::new(w, tapes.into_iter().map(SiteState::Tape).collect(), halo)
    }

    pub(crate) fn from_parts(
        window: Window,
        sites: Vec<SiteState>,
        halo: HaloPolicy,
        time: u64,
    ) -> Self {
        debug_assert_eq!(sites.len(), window.len());
        LatticeConfiguration {
            window,
            sites,
            halo,
            time,
        }
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn sites(&self) -> &[SiteState] {
        &self.sites
    }

    pub fn halo(&self) -> HaloPolicy {
        self.halo
    }

    /// Elementary steps applied since sampling.
    pub fn time(&self) -> u64 {
        self.time
    }

    /// Window on which the content is valid: the stored window minus a fixed halo.
    pub fn valid_window(&self) -> Window {
        match self.halo {
            HaloPolicy::FixedHalo { width } => self
                .window
                .shrunk(width)
                .expect("constructor guarantees an interior"),
            _ => self.window,
        }
    }

    /// Site at absolute position `x`; periodic configurations wrap.
    pub fn site(&self, x: i64) -> Option<&SiteState> {
        let len = self.window.len() as i64;
        let i = x - self.window.lo();
        match self.halo {
            HaloPolicy::Periodic => Some(&self.sites[i.rem_euclid(len) as usize]),
            _ if (0..len).contains(&i) => Some(&self.sites[i as usize]),
            _ => None,
        }
    }

    /// Checks that `window` can be read from this configuration.
    pub fn check_covers(&self, window: &Window) -> Result<()> {
        match self.halo {
            HaloPolicy::Periodic => Ok(()),
            _ if self.window.contains(window) => Ok(()),
            HaloPolicy::FixedHalo { width } if self.window.intersect(window).is_some() => {
                Err(Error::InsufficientHalo {
                    required: width
                        + (self.window.lo() - window.lo())
                            .max(window.hi() - self.window.hi())
                            .max(0) as u64,
                    available: width,
                })
            }
            _ => Err(Error::WindowMismatch {
                requested: *window,
                available: self.window,
            }),
        }
    }

    /// Real site values over `window`, tapes truncated to `tape_bits`.
    pub fn values_on(&self, window: &Window, tape_bits: u32) -> Result<Vec<f64>> {
        self.check_covers(window)?;
        Ok(window
            .sites()
            .map(|x| self.site(x).expect("covered").real(tape_bits))
            .collect())
    }

    /// Copy of the content on `window` as a standalone configuration with a
    /// zero-width fixed halo.
    pub fn restrict(&self, window: &Window) -> Result<Self> {
        self.check_covers(window)?;
        let sites = window
            .sites()
            .map(|x| self.site(x).expect("covered").clone())
            .collect();
        Ok(LatticeConfiguration::from_parts(
            *window,
            sites,
            HaloPolicy::FixedHalo { width: 0 },
            self.time,
        ))
    }
}

/// Windowed sup metric; tapes are compared after truncation to `tape_bits`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupMetric {
    pub tape_bits: u32,
}

impl Default for SupMetric {
    fn default() -> Self {
        SupMetric {
            tape_bits: VALUE_BITS,
        }
    }
}

impl SupMetric {
    pub fn distance(
        &self,
        c1: &LatticeConfiguration,
        c2: &LatticeConfiguration,
        window: &Window,
    ) -> Result<f64> {
        c1.check_covers(window)?;
        c2.check_covers(window)?;
        let mut d: f64 = 0.0;
        for x in window.sites() {
            let a = c1.site(x).expect("covered");
            let b = c2.site(x).expect("covered");
            d = d.max(site_distance(a, b, self.tape_bits));
        }
        Ok(d)
    }
}

fn site_distance(a: &SiteState, b: &SiteState, tape_bits: u32) -> f64 {
    match (a, b) {
        (SiteState::Tape(s), SiteState::Tape(t)) => {
            let bits = tape_bits.min(64);
            let (x, y) = (s.prefix_int(bits), t.prefix_int(bits));
            x.abs_diff(y) as f64 / 2f64.powi(bits as i32)
        }
        _ => (a.real(tape_bits) - b.real(tape_bits)).abs(),
    }
}

/// `d|_window(c1, c2)` under the default 53-bit tape precision.
pub fn sup_distance(
    c1: &LatticeConfiguration,
    c2: &LatticeConfiguration,
    window: &Window,
) -> Result<f64> {
    SupMetric::default().distance(c1, c2, window)
}
