use serde::{Deserialize, Serialize};

use super::{complexity, prefix_complexities, two_part_code_complexity, Backend};
use crate::covering::SymbolWord;
use crate::error::{Error, Result};

/// Largest corpus `check_h4` will enumerate.
pub const ENUMERATION_LIMIT: u128 = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hypothesis {
    H1a,
    H1b,
    H2a,
    H2b,
    H3,
    H4,
}

/// `h(n) = alpha * log2(n + 1) + beta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlackFunction {
    pub alpha: f64,
    pub beta: f64,
}

impl SlackFunction {
    pub fn eval(&self, n: usize) -> f64 {
        self.alpha * ((n + 1) as f64).log2() + self.beta
    }
}

/// Configured bounds on the measured slack constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AxiomBounds {
    pub h1a_const: f64,
    pub alpha_max: f64,
    pub beta_max: f64,
    pub h2_const: f64,
    pub c0: f64,
    /// Spacing of the `alpha` search grid.
    pub alpha_step: f64,
    /// Largest `alpha` searched.
    pub alpha_grid_max: f64,
}

impl Default for AxiomBounds {
    fn default() -> Self {
        AxiomBounds {
            h1a_const: 64.0,
            alpha_max: 8.0,
            beta_max: 64.0,
            h2_const: 64.0,
            c0: super::TWO_PART_C0,
            alpha_step: 0.25,
            alpha_grid_max: 32.0,
        }
    }
}

impl AxiomBounds {
    /// The largest `h` the bounds allow.
    pub fn slack_function(&self) -> SlackFunction {
        SlackFunction {
            alpha: self.alpha_max,
            beta: self.beta_max,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub hypothesis: Hypothesis,
    /// Measured constants, each compared with the bound of the same name.
    pub slacks: Vec<(String, f64)>,
    pub bounds: Vec<(String, f64)>,
    /// Worst case per word-length bucket (bucket upper edge, value).
    pub per_length_worst: Vec<(usize, f64)>,
    pub pass: bool,
    pub corpus: String,
    /// Set for backends whose reports are not used for acceptance.
    pub informational: bool,
}

impl HypothesisReport {
    fn new(
        hypothesis: Hypothesis,
        slacks: Vec<(&str, f64)>,
        bounds: Vec<(&str, f64)>,
        per_length_worst: Vec<(usize, f64)>,
        corpus: String,
        backend: &Backend,
    ) -> Self {
        let pass = slacks.iter().all(|(name, v)| {
            bounds
                .iter()
                .find(|(b, _)| b == name)
                .is_none_or(|(_, bound)| v <= bound)
        });
        let own = |v: Vec<(&str, f64)>| v.into_iter().map(|(k, x)| (k.to_string(), x)).collect();
        HypothesisReport {
            hypothesis,
            slacks: own(slacks),
            bounds: own(bounds),
            per_length_worst,
            pass,
            corpus,
            informational: backend.is_informational(),
        }
    }

    pub fn slack(&self, name: &str) -> Option<f64> {
        self.slacks.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }
}

/// Two slack constants agree within a factor 2; magnitudes below 1 count as 1.
pub fn slack_stable(a: f64, b: f64) -> bool {
    let (a, b) = (a.abs().max(1.0), b.abs().max(1.0));
    a.max(b) / a.min(b) <= 2.0
}

/// `s = uv` with `u = word[..split]`.
#[derive(Clone, Debug, PartialEq)]
pub struct WordPair {
    pub word: SymbolWord,
    pub split: usize,
}

impl WordPair {
    pub fn u(&self) -> SymbolWord {
        self.word.slice(0, self.split)
    }

    pub fn v(&self) -> SymbolWord {
        self.word.slice(self.split, self.word.len())
    }
}

/// A word over a product alphabet together with its two projections.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductSample {
    pub joint: SymbolWord,
    pub first: SymbolWord,
    pub second: SymbolWord,
    pub q: u64,
}

fn bucket(len: usize) -> usize {
    len.max(1).next_power_of_two()
}

fn worst_by_bucket(items: impl IntoIterator<Item = (usize, f64)>) -> Vec<(usize, f64)> {
    let mut map = std::collections::BTreeMap::new();
    for (len, v) in items {
        let e = map.entry(bucket(len)).or_insert(f64::NEG_INFINITY);
        *e = f64::max(*e, v);
    }
    map.into_iter().collect()
}

fn require_nonempty<T>(corpus: &[T]) -> Result<()> {
    if corpus.is_empty() {
        Err(Error::domain("axiom corpus is empty"))
    } else {
        Ok(())
    }
}

/// `K(u) <= K(s) + log2 |u| + c`: reports the largest `c` over the corpus.
pub fn check_h1a(
    backend: &Backend,
    corpus: &[WordPair],
    bounds: &AxiomBounds,
) -> Result<HypothesisReport> {
    require_nonempty(corpus)?;
    let mut rows = Vec::with_capacity(corpus.len());
    for pair in corpus {
        let k = prefix_complexities(&pair.word, backend, &[pair.split, pair.word.len()])?;
        let log_u = (pair.split.max(1) as f64).log2();
        rows.push((pair.word.len(), k[0] - k[1] - log_u));
    }
    let c = rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(HypothesisReport::new(
        Hypothesis::H1a,
        vec![("c", c)],
        vec![("c", bounds.h1a_const)],
        worst_by_bucket(rows),
        format!("{} prefix pairs", corpus.len()),
        backend,
    ))
}

/// `K(uv) <= K(u) + K(v) + h(|u|) + h(|v|)`: reports the smallest `(alpha, beta)`
/// on the search grid, ordered by `alpha` first.
pub fn check_h1b(
    backend: &Backend,
    corpus: &[WordPair],
    bounds: &AxiomBounds,
) -> Result<HypothesisReport> {
    require_nonempty(corpus)?;
    let mut excess = Vec::with_capacity(corpus.len());
    for pair in corpus {
        let ks = complexity(&pair.word, backend)?;
        let ku = complexity(&pair.u(), backend)?;
        let kv = complexity(&pair.v(), backend)?;
        let logs =
            ((pair.split + 1) as f64).log2() + ((pair.word.len() - pair.split + 1) as f64).log2();
        excess.push((pair.word.len(), ks - ku - kv, logs));
    }
    let beta_for = |alpha: f64| {
        let need = excess
            .iter()
            .map(|(_, e, l)| (e - alpha * l) / 2.0)
            .fold(0.0f64, f64::max);
        need.ceil()
    };
    let steps = (bounds.alpha_grid_max / bounds.alpha_step).round() as usize;
    let grid = (0..=steps).map(|i| i as f64 * bounds.alpha_step);
    let mut best = None;
    for alpha in grid {
        let beta = beta_for(alpha);
        best = Some((alpha, beta));
        if beta <= bounds.beta_max {
            break;
        }
    }
    let (alpha, beta) = best.expect("grid is non-empty");
    Ok(HypothesisReport::new(
        Hypothesis::H1b,
        vec![("alpha", alpha), ("beta", beta)],
        vec![("alpha", bounds.alpha_max), ("beta", bounds.beta_max)],
        worst_by_bucket(excess.iter().map(|(n, e, _)| (*n, *e))),
        format!("{} concatenations", corpus.len()),
        backend,
    ))
}

/// Product-alphabet projection bounds; returns the `(H2a, H2b)` reports.
pub fn check_h2(
    backend: &Backend,
    corpus: &[ProductSample],
    bounds: &AxiomBounds,
) -> Result<(HypothesisReport, HypothesisReport)> {
    require_nonempty(corpus)?;
    let mut a_rows = Vec::with_capacity(corpus.len());
    let mut b_rows = Vec::with_capacity(corpus.len());
    for s in corpus {
        if s.first.len() != s.joint.len() || s.second.len() != s.joint.len() {
            return Err(Error::domain(
                "projections must have the joint word's length",
            ));
        }
        let k = complexity(&s.joint, backend)?;
        let k1 = complexity(&s.first, backend)?;
        let k2 = complexity(&s.second, backend)?;
        a_rows.push((s.joint.len(), k1.max(k2) - k));
        let q_bits = s.joint.len() as f64 * (s.q.max(1) as f64).log2();
        b_rows.push((s.joint.len(), k - k1 - k2 - q_bits));
    }
    let worst = |rows: &[(usize, f64)]| rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let desc = format!("{} product words", corpus.len());
    Ok((
        HypothesisReport::new(
            Hypothesis::H2a,
            vec![("c", worst(&a_rows))],
            vec![("c", bounds.h2_const)],
            worst_by_bucket(a_rows),
            desc.clone(),
            backend,
        ),
        HypothesisReport::new(
            Hypothesis::H2b,
            vec![("c", worst(&b_rows))],
            vec![("c", bounds.h2_const)],
            worst_by_bucket(b_rows),
            desc,
            backend,
        ),
    ))
}

/// Two-part code against `log2 card(L_n) + log2 n + c₀`, over enumerated lists.
///
/// The bound allows the two rounding bits of the integer code.
pub fn check_h3(
    lists: &[(u64, Vec<SymbolWord>)],
    bounds: &AxiomBounds,
) -> Result<HypothesisReport> {
    require_nonempty(lists)?;
    let mut rows = Vec::new();
    for (n, list) in lists {
        let base = (list.len() as f64).log2() + (*n as f64).log2();
        for w in list {
            rows.push((w.len(), two_part_code_complexity(w, list, *n)? - base));
        }
    }
    let c = rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(HypothesisReport::new(
        Hypothesis::H3,
        vec![("c", c)],
        vec![("c", bounds.c0 + 2.0)],
        worst_by_bucket(rows),
        format!("{} enumerated lists", lists.len()),
        &Backend::Lz78CodeLength,
    ))
}

/// `(length, K)` for every word of length `1..=max_len`, refusing corpora
/// past [`ENUMERATION_LIMIT`].
fn enumerate_complexities(
    backend: &Backend,
    alphabet: u128,
    max_len: usize,
) -> Result<Vec<(usize, f64)>> {
    if alphabet == 0 || max_len == 0 {
        return Err(Error::domain(
            "H4 needs a non-empty alphabet and max_len >= 1",
        ));
    }
    let mut total: u128 = 0;
    let mut layer: u128 = 1;
    for _ in 0..max_len {
        layer = layer.saturating_mul(alphabet);
        total = total.saturating_add(layer);
    }
    if total > ENUMERATION_LIMIT {
        return Err(Error::EnumerationGuard {
            words: total,
            limit: ENUMERATION_LIMIT,
        });
    }
    let mut out = Vec::with_capacity(total as usize);
    for len in 1..=max_len {
        let mut digits = vec![0u128; len];
        loop {
            let w = SymbolWord {
                symbols: digits.clone(),
                alphabet,
                provenance: None,
            };
            out.push((len, complexity(&w, backend)?));
            let mut i = len;
            while i > 0 {
                i -= 1;
                digits[i] += 1;
                if digits[i] < alphabet {
                    break;
                }
                digits[i] = 0;
            }
            if digits.iter().all(|d| *d == 0) {
                break;
            }
        }
    }
    Ok(out)
}

/// Counts words of length `1..=max_len` with `K(s) < c` and compares with `2^c`.
pub fn check_h4(
    backend: &Backend,
    alphabet: u128,
    max_len: usize,
    c: f64,
) -> Result<HypothesisReport> {
    let all = enumerate_complexities(backend, alphabet, max_len)?;
    let mut per_len = vec![0u64; max_len];
    for (len, k) in &all {
        if *k < c {
            per_len[len - 1] += 1;
        }
    }
    let count: u64 = per_len.iter().sum();
    Ok(HypothesisReport::new(
        Hypothesis::H4,
        vec![("count", count as f64)],
        vec![("count", 2f64.powf(c))],
        per_len
            .into_iter()
            .enumerate()
            .map(|(i, n)| (i + 1, n as f64))
            .collect(),
        format!(
            "all {} words over {alphabet} symbols, length <= {max_len}, c = {c}",
            all.len()
        ),
        backend,
    ))
}

/// [`check_h4`] at every integer threshold up to one past the largest
/// complexity. The slack is the worst `card{K < c} / 2^c`, bounded by 1.
pub fn check_h4_all(backend: &Backend, alphabet: u128, max_len: usize) -> Result<HypothesisReport> {
    let all = enumerate_complexities(backend, alphabet, max_len)?;
    let mut ks: Vec<f64> = all.iter().map(|(_, k)| *k).collect();
    ks.sort_by(f64::total_cmp);
    let top = ks.last().copied().unwrap_or(0.0).ceil() as u32 + 1;
    let mut rows = Vec::with_capacity(top as usize + 1);
    let mut worst: f64 = 0.0;
    for c in 0..=top {
        let count = ks.partition_point(|k| *k < c as f64);
        let ratio = count as f64 / 2f64.powi(c as i32);
        worst = worst.max(ratio);
        rows.push((c as usize, ratio));
    }
    Ok(HypothesisReport::new(
        Hypothesis::H4,
        vec![("ratio", worst)],
        vec![("ratio", 1.0)],
        rows,
        format!(
            "all {} words over {alphabet} symbols, length <= {max_len}, c = 0..={top}",
            all.len()
        ),
        backend,
    ))
}
