//! Finite quantizer coverings of windowed state spaces and orbit coding.
//!
//! A covering at precision `eps` splits `[0, 1]` into `floor(1/eps)` equal
//! half-open bins per site (the last bin closed), refined dyadically by
//! `level`. A cell is a product of per-site bins, so its per-site diameter is
//! below `2 eps` and it sits inside an open sup-metric ball of radius `eps`.
//! Cells are numbered in mixed radix with the leftmost site most significant.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::tape::VALUE_BITS;
use crate::lattice::{evolve, HaloPolicy, LatticeConfiguration, SiteState, SystemDefinition};
use crate::window::Window;

/// Largest per-site bin count; keeps `floor(v * bins)` exact in `f64`.
pub const MAX_BINS: u64 = 1 << 52;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantizerCovering {
    window: Window,
    eps: f64,
    base_bins: u64,
    level: u32,
    /// Tape bits visible to the coding; deeper bins repeat the last visible one.
    #[serde(default = "default_tape_bits")]
    tape_bits: u32,
}

fn default_tape_bits() -> u32 {
    VALUE_BITS
}

/// Number of level-0 bins for precision `eps`.
pub fn base_bins(eps: f64) -> u64 {
    ((1.0 / eps + 1e-9).floor() as u64).max(1)
}

pub fn build_covering(window: Window, eps: f64, level: u32) -> Result<QuantizerCovering> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::domain(format!("eps must lie in (0, 1], got {eps}")));
    }
    let base = base_bins(eps);
    let cov = QuantizerCovering {
        window,
        eps,
        base_bins: base,
        level,
        tape_bits: VALUE_BITS,
    };
    if level >= 64
        || base
            .checked_shl(level)
            .is_none_or(|b| b > MAX_BINS || b >> level != base)
    {
        return Err(Error::AlphabetOverflow(format!(
            "{base} bins refined {level} times exceeds {MAX_BINS}"
        )));
    }
    Ok(cov)
}

impl QuantizerCovering {
    pub fn window(&self) -> Window {
        self.window
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn tape_bits(&self) -> u32 {
        self.tape_bits
    }

    /// The same covering reading tapes at most `bits` deep.
    pub fn with_tape_bits(self, bits: u32) -> Self {
        QuantizerCovering {
            tape_bits: bits.clamp(1, VALUE_BITS),
            ..self
        }
    }

    pub fn bins_per_site(&self) -> u64 {
        self.base_bins << self.level
    }

    pub fn bin_width(&self) -> f64 {
        1.0 / self.bins_per_site() as f64
    }

    /// `bins_per_site^|Λ|`, or an overflow error past `u128`.
    pub fn cardinality(&self) -> Result<u128> {
        let bins = self.bins_per_site() as u128;
        let mut card: u128 = 1;
        for _ in 0..self.window.len() {
            card = card.checked_mul(bins).ok_or_else(|| {
                Error::AlphabetOverflow(format!(
                    "{bins}^{} cells do not fit in 128 bits",
                    self.window.len()
                ))
            })?;
        }
        Ok(card)
    }

    fn dyadic_bits(&self) -> Option<u32> {
        let b = self.bins_per_site();
        b.is_power_of_two().then(|| b.trailing_zeros())
    }

    /// Bin index of a value in `[0, 1]`.
    pub fn bin_of(&self, v: f64) -> Result<u64> {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::domain(format!("value {v} outside [0, 1]")));
        }
        let bins = self.bins_per_site();
        Ok(((v * bins as f64).floor() as u64).min(bins - 1))
    }

    fn bin_of_site(&self, site: &SiteState) -> Result<u64> {
        match (site, self.dyadic_bits()) {
            (SiteState::Tape(t), Some(bits)) if bits <= self.tape_bits => Ok(t.prefix_int(bits)),
            (SiteState::Tape(t), Some(bits)) => {
                Ok(t.prefix_int(self.tape_bits) << (bits - self.tape_bits))
            }
            (s, _) => self.bin_of(s.real(self.tape_bits)),
        }
    }

    /// Per-site bins of `config` over the covering window.
    pub fn site_bins(&self, config: &LatticeConfiguration) -> Result<Vec<u64>> {
        config.check_covers(&self.window)?;
        self.window
            .sites()
            .map(|x| self.bin_of_site(config.site(x).expect("covered")))
            .collect()
    }

    pub fn compose(&self, bins: &[u64]) -> u128 {
        let base = self.bins_per_site() as u128;
        bins.iter().fold(0u128, |acc, b| acc * base + *b as u128)
    }

    pub fn decompose(&self, mut symbol: u128) -> Vec<u64> {
        let base = self.bins_per_site() as u128;
        let mut out = vec![0u64; self.window.len()];
        for slot in out.iter_mut().rev() {
            *slot = (symbol % base) as u64;
            symbol /= base;
        }
        out
    }

    /// The same covering with `extra_levels` more dyadic refinements.
    pub fn refine(&self, extra_levels: u32) -> Result<QuantizerCovering> {
        Ok(
            build_covering(self.window, self.eps, self.level + extra_levels)?
                .with_tape_bits(self.tape_bits),
        )
    }
}

/// The unique cell containing `config` restricted to the covering window.
pub fn encode_state(config: &LatticeConfiguration, covering: &QuantizerCovering) -> Result<u128> {
    covering.cardinality()?;
    Ok(covering.compose(&covering.site_bins(config)?))
}

/// Where a coded word came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub system: String,
    pub window: Window,
    pub eps: f64,
    pub level: u32,
    pub tau: u64,
    pub start: u64,
    pub len: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymbolWord {
    pub symbols: Vec<u128>,
    pub alphabet: u128,
    pub provenance: Option<Provenance>,
}

impl SymbolWord {
    pub fn new(symbols: Vec<u128>, alphabet: u128) -> Result<Self> {
        if alphabet == 0 {
            return Err(Error::domain("alphabet must be non-empty"));
        }
        if let Some(s) = symbols.iter().find(|s| **s >= alphabet) {
            return Err(Error::domain(format!(
                "symbol {s} outside alphabet of size {alphabet}"
            )));
        }
        Ok(SymbolWord {
            symbols,
            alphabet,
            provenance: None,
        })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Sub-word `[start, end)` over the same alphabet.
    pub fn slice(&self, start: usize, end: usize) -> SymbolWord {
        SymbolWord {
            symbols: self.symbols[start..end].to_vec(),
            alphabet: self.alphabet,
            provenance: None,
        }
    }

    pub fn concat(&self, other: &SymbolWord) -> Result<SymbolWord> {
        if self.alphabet != other.alphabet {
            return Err(Error::domain(
                "cannot concatenate words over different alphabets",
            ));
        }
        let mut symbols = self.symbols.clone();
        symbols.extend_from_slice(&other.symbols);
        Ok(SymbolWord {
            symbols,
            alphabet: self.alphabet,
            provenance: None,
        })
    }
}

/// Codes the orbit segment `φ_{jτ} f`, `j = m..n`, through `covering`.
pub fn encode_segment(
    config: &LatticeConfiguration,
    system: &SystemDefinition,
    covering: &QuantizerCovering,
    m: u64,
    n: u64,
) -> Result<SymbolWord> {
    if m >= n {
        return Err(Error::domain(format!("empty orbit segment [{m}, {n})")));
    }
    let alphabet = covering.cardinality()?;
    if let HaloPolicy::FixedHalo { width } = config.halo() {
        let required = (n - 1) * system.tau * system.interaction_radius();
        if width < required {
            return Err(Error::InsufficientHalo {
                required,
                available: width,
            });
        }
    }
    let mut state = evolve(config, system, m * system.tau)?;
    let mut symbols = Vec::with_capacity((n - m) as usize);
    for j in m..n {
        if j > m {
            state = evolve(&state, system, system.tau)?;
        }
        symbols.push(encode_state(&state, covering)?);
    }
    Ok(SymbolWord {
        symbols,
        alphabet,
        provenance: Some(Provenance {
            system: system.id(),
            window: covering.window(),
            eps: covering.eps(),
            level: covering.level(),
            tau: system.tau,
            start: m,
            len: n - m,
        }),
    })
}

/// `ψ(f, n, U)`: the word of cells visited at times `0, τ, …, (n-1)τ`.
pub fn encode_orbit(
    config: &LatticeConfiguration,
    system: &SystemDefinition,
    covering: &QuantizerCovering,
    n: u64,
) -> Result<SymbolWord> {
    encode_segment(config, system, covering, 0, n)
}

/// Maps a word coded at `fine` onto the covering `extra_levels` coarser.
pub fn coarsen_word(
    word: &SymbolWord,
    fine: &QuantizerCovering,
    extra_levels: u32,
) -> Result<SymbolWord> {
    if extra_levels > fine.level() {
        return Err(Error::domain(format!(
            "cannot coarsen level {} by {extra_levels}",
            fine.level()
        )));
    }
    let coarse = build_covering(fine.window(), fine.eps(), fine.level() - extra_levels)?
        .with_tape_bits(fine.tape_bits());
    let symbols = word
        .symbols
        .iter()
        .map(|s| {
            let bins: Vec<u64> = fine
                .decompose(*s)
                .iter()
                .map(|b| b >> extra_levels)
                .collect();
            coarse.compose(&bins)
        })
        .collect();
    Ok(SymbolWord {
        symbols,
        alphabet: coarse.cardinality()?,
        provenance: word.provenance.clone().map(|p| Provenance {
            level: coarse.level(),
            ..p
        }),
    })
}

/// Product of two coverings on adjacent windows.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductCovering {
    pub joint: QuantizerCovering,
    pub first: QuantizerCovering,
    pub second: QuantizerCovering,
    /// Number of joint cells meeting each factor cell pair.
    pub q: u64,
}

pub fn product_covering(
    first: &QuantizerCovering,
    second: &QuantizerCovering,
) -> Result<ProductCovering> {
    let (w1, w2) = (first.window(), second.window());
    if w1.intersect(&w2).is_some() || !w1.is_adjacent_to(&w2) {
        return Err(Error::domain(format!(
            "product needs adjacent disjoint windows, got {w1} and {w2}"
        )));
    }
    if first.bins_per_site() != second.bins_per_site() || first.level() != second.level() {
        return Err(Error::domain("product factors must share eps and level"));
    }
    let joint_window = Window::new(w1.lo().min(w2.lo()), w1.hi().max(w2.hi()))?;
    let joint =
        build_covering(joint_window, first.eps(), first.level())?.with_tape_bits(first.tape_bits());
    joint.cardinality()?;
    Ok(ProductCovering {
        joint,
        first: *first,
        second: *second,
        q: 1,
    })
}

impl ProductCovering {
    fn first_is_left(&self) -> bool {
        self.first.window().lo() < self.second.window().lo()
    }

    /// `π = (π₁, π₂)` on joint cell ids.
    pub fn project(&self, symbol: u128) -> (u128, u128) {
        let right = if self.first_is_left() {
            &self.second
        } else {
            &self.first
        };
        let right_card = (right.bins_per_site() as u128).pow(right.window().len() as u32);
        let (l, r) = (symbol / right_card, symbol % right_card);
        if self.first_is_left() {
            (l, r)
        } else {
            (r, l)
        }
    }

    pub fn project_word(&self, word: &SymbolWord) -> Result<(SymbolWord, SymbolWord)> {
        let (a, b): (Vec<u128>, Vec<u128>) = word.symbols.iter().map(|s| self.project(*s)).unzip();
        Ok((
            SymbolWord::new(a, self.first.cardinality()?)?,
            SymbolWord::new(b, self.second.cardinality()?)?,
        ))
    }
}

fn bit_width(card: u64) -> u32 {
    if card <= 1 {
        0
    } else {
        64 - (card - 1).leading_zeros()
    }
}

/// Writes the flat binary form: cardinality and length as little-endian
/// u64, then symbols packed MSB first in `ceil(log2 card)` bits each.
pub fn write_word<W: Write>(word: &SymbolWord, mut out: W) -> Result<()> {
    let card = u64::try_from(word.alphabet).map_err(|_| {
        Error::AlphabetOverflow(format!(
            "alphabet of {} symbols does not fit the 64-bit header",
            word.alphabet
        ))
    })?;
    out.write_all(&card.to_le_bytes())?;
    out.write_all(&(word.len() as u64).to_le_bytes())?;
    let width = bit_width(card);
    let mut buf = Vec::with_capacity((word.len() * width as usize).div_ceil(8));
    let (mut acc, mut filled) = (0u8, 0u32);
    for s in &word.symbols {
        for i in (0..width).rev() {
            acc = (acc << 1) | ((s >> i) & 1) as u8;
            filled += 1;
            if filled == 8 {
                buf.push(acc);
                acc = 0;
                filled = 0;
            }
        }
    }
    if filled > 0 {
        buf.push(acc << (8 - filled));
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn word_to_bytes(word: &SymbolWord) -> Result<Vec<u8>> {
    let mut v = Vec::new();
    write_word(word, &mut v)?;
    Ok(v)
}

pub fn read_word<R: Read>(mut input: R) -> Result<SymbolWord> {
    let mut head = [0u8; 8];
    input.read_exact(&mut head)?;
    let card = u64::from_le_bytes(head);
    input.read_exact(&mut head)?;
    let len = u64::from_le_bytes(head) as usize;
    let width = bit_width(card) as usize;
    let mut body = vec![0u8; (len * width).div_ceil(8)];
    input.read_exact(&mut body)?;
    let bit = |i: usize| (body[i / 8] >> (7 - i % 8)) & 1;
    let symbols = (0..len)
        .map(|j| (0..width).fold(0u128, |acc, i| (acc << 1) | bit(j * width + i) as u128))
        .collect();
    SymbolWord::new(symbols, card as u128)
}
