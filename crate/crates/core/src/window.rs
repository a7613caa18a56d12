use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-open integer interval `[lo, hi)` of lattice sites.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "(i64, i64)", into = "(i64, i64)")]
pub struct Window {
    lo: i64,
    hi: i64,
}

impl Window {
    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if lo >= hi {
            return Err(Error::domain(format!("empty window [{lo}, {hi})")));
        }
        Ok(Window { lo, hi })
    }

    /// Window of `len` sites starting at `lo`.
    pub fn with_len(lo: i64, len: usize) -> Result<Self> {
        Window::new(lo, lo + len as i64)
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.hi
    }

    /// Number of sites, `|Λ|`.
    pub fn len(&self) -> usize {
        (self.hi - self.lo) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains_site(&self, x: i64) -> bool {
        self.lo <= x && x < self.hi
    }

    pub fn contains(&self, other: &Window) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn sites(&self) -> std::ops::Range<i64> {
        self.lo..self.hi
    }

    /// The window `[lo + d, hi + d)`.
    pub fn shifted(&self, d: i64) -> Window {
        Window {
            lo: self.lo + d,
            hi: self.hi + d,
        }
    }

    /// Grow by `margin` sites on both sides.
    pub fn padded(&self, margin: u64) -> Window {
        Window {
            lo: self.lo - margin as i64,
            hi: self.hi + margin as i64,
        }
    }

    /// Shrink by `margin` sites on both sides, if anything is left.
    pub fn shrunk(&self, margin: u64) -> Option<Window> {
        Window::new(self.lo + margin as i64, self.hi - margin as i64).ok()
    }

    pub fn intersect(&self, other: &Window) -> Option<Window> {
        Window::new(self.lo.max(other.lo), self.hi.min(other.hi)).ok()
    }

    /// Adjacent windows share an endpoint and do not overlap.
    pub fn is_adjacent_to(&self, other: &Window) -> bool {
        self.hi == other.lo || other.hi == self.lo
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.lo, self.hi)
    }
}

impl TryFrom<(i64, i64)> for Window {
    type Error = Error;

    fn try_from((lo, hi): (i64, i64)) -> Result<Self> {
        Window::new(lo, hi)
    }
}

impl From<Window> for (i64, i64) {
    fn from(w: Window) -> Self {
        (w.lo, w.hi)
    }
}
