//! Lempel-Ziv code lengths over symbol-id alphabets.

use std::collections::HashMap;

/// `ceil(log2 x)`, with `ceil(log2 1) = ceil(log2 0) = 0`.
pub fn ceil_log2(x: u128) -> u64 {
    if x <= 1 {
        0
    } else {
        (128 - (x - 1).leading_zeros()) as u64
    }
}

/// Incremental LZ78 parser that reports the code length of every prefix.
struct Lz78 {
    trie: HashMap<(u32, u128), u32>,
    node: u32,
    next_id: u32,
    complete: u64,
    closed_bits: u64,
    symbol_bits: u64,
}

impl Lz78 {
    fn new(alphabet: u128, capacity: usize) -> Self {
        Lz78 {
            trie: HashMap::with_capacity(capacity),
            node: 0,
            next_id: 1,
            complete: 0,
            closed_bits: 0,
            symbol_bits: ceil_log2(alphabet),
        }
    }

    /// Feeds one symbol and returns the code length of the prefix read so far.
    fn push(&mut self, s: u128) -> u64 {
        match self.trie.get(&(self.node, s)) {
            Some(&child) => {
                self.node = child;
                // open phrase: index of its longest dictionary match
                self.closed_bits + ceil_log2(self.complete as u128 + 1)
            }
            None => {
                self.trie.insert((self.node, s), self.next_id);
                self.next_id += 1;
                self.complete += 1;
                self.closed_bits += ceil_log2(self.complete as u128) + self.symbol_bits;
                self.node = 0;
                self.closed_bits
            }
        }
    }
}

/// LZ78 code length in bits. Phrase `j` costs `ceil(log2 j) + ceil(log2 |A|)`;
/// a trailing incomplete phrase costs only its dictionary index `ceil(log2 j)`.
pub fn lz78_code_length(symbols: &[u128], alphabet: u128) -> u64 {
    let mut p = Lz78::new(alphabet, symbols.len());
    symbols.iter().fold(0, |_, s| p.push(*s))
}

/// Code lengths of every non-empty prefix, in one pass.
pub fn lz78_prefix_lengths(symbols: &[u128], alphabet: u128) -> Vec<u64> {
    let mut p = Lz78::new(alphabet, symbols.len());
    symbols.iter().map(|s| p.push(*s)).collect()
}

/// Number of complete LZ78 phrases plus one for a trailing open phrase.
pub fn lz78_phrase_count(symbols: &[u128]) -> usize {
    let mut p = Lz78::new(2, symbols.len());
    let mut open = false;
    for s in symbols {
        let before = p.complete;
        p.push(*s);
        open = p.complete == before;
    }
    p.complete as usize + open as usize
}

/// Exhaustive-history phrase count of Lempel and Ziv (1976), computed with
/// the Kaspar-Schuster scan.
pub fn lz76_phrase_count(s: &[u128]) -> usize {
    let n = s.len();
    if n <= 1 {
        return n;
    }
    let (mut c, mut l, mut i, mut k, mut k_max) = (1usize, 1usize, 0usize, 1usize, 1usize);
    loop {
        if s[i + k - 1] == s[l + k - 1] {
            k += 1;
            if l + k > n {
                c += 1;
                break;
            }
        } else {
            k_max = k_max.max(k);
            i += 1;
            if i == l {
                c += 1;
                l += k_max;
                if l + 1 > n {
                    break;
                }
                i = 0;
                k = 1;
                k_max = 1;
            } else {
                k = 1;
            }
        }
    }
    c
}

/// `C76(s) * (ceil(log2 |s|) + ceil(log2 |A|) + 1)`.
pub fn lz76_code_length(symbols: &[u128], alphabet: u128) -> u64 {
    if symbols.is_empty() {
        return 0;
    }
    let per_phrase = ceil_log2(symbols.len() as u128) + ceil_log2(alphabet) + 1;
    lz76_phrase_count(symbols) as u64 * per_phrase
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Literal LZ78 parse with explicit phrase strings.
    fn lz78_oracle(s: &[u128], alphabet: u128) -> (Vec<Vec<u128>>, u64) {
        let mut dict: Vec<Vec<u128>> = Vec::new();
        let mut phrases = Vec::new();
        let mut cur: Vec<u128> = Vec::new();
        for &x in s {
            cur.push(x);
            if !dict.contains(&cur) {
                dict.push(cur.clone());
                phrases.push(std::mem::take(&mut cur));
            }
        }
        let clog = |x: u64| (0..).find(|b| (1u128 << b) >= x as u128).unwrap();
        let mut bits = 0;
        for j in 1..=phrases.len() as u64 {
            bits += clog(j) + clog(alphabet as u64);
        }
        if !cur.is_empty() {
            bits += clog(phrases.len() as u64 + 1);
            phrases.push(cur);
        }
        (phrases, bits)
    }

    /// Quadratic LZ76 count: a phrase is extended while it occurs in the
    /// history ending one symbol before its last symbol.
    fn lz76_oracle(s: &[u128]) -> usize {
        let n = s.len();
        let (mut c, mut start) = (0, 0);
        while start < n {
            let mut len = 1;
            while start + len <= n {
                let cand = &s[start..start + len];
                let hist = &s[..start + len - 1];
                let seen = hist.windows(len).any(|w| w == cand);
                if seen && start + len < n {
                    len += 1;
                } else {
                    break;
                }
            }
            c += 1;
            start += len;
        }
        c
    }

    #[test]
    fn spec_parses() {
        assert_eq!(lz78_code_length(&[], 2), 0);
        assert_eq!(lz78_code_length(&[0; 6], 2), 6);
        assert_eq!(lz78_code_length(&[0, 1, 0, 1], 2), 6);
        assert_eq!(lz78_oracle(&[0; 6], 2).1, 6);
        assert_eq!(
            lz78_oracle(&[0, 1, 0, 1], 2).0,
            vec![vec![0], vec![1], vec![0, 1]]
        );
    }

    #[test]
    fn trailing_phrase_costs_its_index() {
        // a | aa | a. : phrases 1, 2 complete (1 + 2 bits), open phrase j = 3 costs 2
        assert_eq!(lz78_code_length(&[0, 0, 0, 0], 2), 5);
        assert_eq!(lz78_phrase_count(&[0, 0, 0, 0]), 3);
    }

    #[test]
    fn lz76_known_counts() {
        // Kaspar and Schuster's worked example: 0 | 001 | 10 | 100 | 1000 | 101
        let s: Vec<u128> = "0001101001000101"
            .bytes()
            .map(|b| (b - b'0') as u128)
            .collect();
        assert_eq!(lz76_phrase_count(&s), 6);
        assert_eq!(lz76_oracle(&s), 6);
        assert_eq!(lz76_code_length(&[], 2), 0);
        assert_eq!(lz76_phrase_count(&[1]), 1);
        assert_eq!(lz76_code_length(&[0; 8], 2), 2 * (3 + 1 + 1));
    }

    #[test]
    fn ceil_log2_values() {
        let want = [
            (0u128, 0u64),
            (1, 0),
            (2, 1),
            (3, 2),
            (4, 2),
            (5, 3),
            (256, 8),
            (257, 9),
        ];
        for (x, b) in want {
            assert_eq!(ceil_log2(x), b, "x = {x}");
        }
        assert_eq!(ceil_log2(u128::MAX), 128);
    }

    proptest! {
        #[test]
        fn lz78_matches_oracle(s in prop::collection::vec(0u128..3, 0..200)) {
            prop_assert_eq!(lz78_code_length(&s, 3), lz78_oracle(&s, 3).1);
            prop_assert_eq!(lz78_phrase_count(&s), lz78_oracle(&s, 3).0.len());
        }

        #[test]
        fn prefix_lengths_match_full_parses(s in prop::collection::vec(0u128..4, 1..120)) {
            let pre = lz78_prefix_lengths(&s, 4);
            for (i, k) in pre.iter().enumerate() {
                prop_assert_eq!(*k, lz78_code_length(&s[..=i], 4));
            }
            prop_assert!(pre.windows(2).all(|w| w[0] <= w[1]));
        }

        #[test]
        fn lz76_matches_oracle(s in prop::collection::vec(0u128..3, 0..150)) {
            prop_assert_eq!(lz76_phrase_count(&s), lz76_oracle(&s));
        }

        #[test]
        fn relabelling_into_larger_alphabet(s in prop::collection::vec(0u128..2, 0..300),
                                            big in 3u128..1_000_000) {
            let relabelled: Vec<u128> = s.iter().map(|x| big - 1 - x).collect();
            let a = lz78_code_length(&s, 2) as i64;
            let b = lz78_code_length(&relabelled, big) as i64;
            let phrases = lz78_phrase_count(&s) as i64;
            let dk = (ceil_log2(big) - ceil_log2(2)) as i64;
            prop_assert!((b - a).abs() <= phrases * dk);
        }
    }
}
