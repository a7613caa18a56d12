//! Computable complexity functions on symbol words and the axiom harness.

mod axioms;
pub mod corpus;
mod lz;

use std::io::Write;
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};

pub use axioms::{
    check_h1a, check_h1b, check_h2, check_h3, check_h4, check_h4_all, slack_stable, AxiomBounds,
    Hypothesis, HypothesisReport, ProductSample, SlackFunction, WordPair,
};
pub use lz::{
    ceil_log2, lz76_code_length, lz76_phrase_count, lz78_code_length, lz78_phrase_count,
    lz78_prefix_lengths,
};

use crate::covering::{word_to_bytes, SymbolWord};
use crate::error::{Error, Result};

/// Constant of the two-part code.
pub const TWO_PART_C0: f64 = 16.0;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Backend {
    #[default]
    Lz78CodeLength,
    Lz76PhraseEncoding,
    /// Reads the binary word on stdin and writes compressed bytes to stdout.
    ExternalCompressor {
        program: String,
        #[serde(default)]
        args: Vec<String>,
    },
}

impl Backend {
    pub fn name(&self) -> String {
        match self {
            Backend::Lz78CodeLength => "lz78_code_length".into(),
            Backend::Lz76PhraseEncoding => "lz76_phrase_encoding".into(),
            Backend::ExternalCompressor { program, .. } => {
                format!("external_compressor({program})")
            }
        }
    }

    /// Axiom reports for this backend carry no weight.
    pub fn is_informational(&self) -> bool {
        matches!(self, Backend::ExternalCompressor { .. })
    }
}

fn run_external(word: &SymbolWord, program: &str, args: &[String]) -> Result<f64> {
    let input = word_to_bytes(word)?;
    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| Error::External(format!("cannot start {program}: {e}")))?;
    let mut stdin = child.stdin.take().expect("piped stdin");
    let writer = std::thread::spawn(move || stdin.write_all(&input));
    let out = child
        .wait_with_output()
        .map_err(|e| Error::External(format!("{program}: {e}")))?;
    writer
        .join()
        .map_err(|_| Error::External(format!("{program}: writer thread panicked")))?
        .map_err(|e| Error::External(format!("{program}: {e}")))?;
    if !out.status.success() {
        return Err(Error::External(format!(
            "{program} exited with {}",
            out.status
        )));
    }
    Ok(8.0 * out.stdout.len() as f64)
}

/// Code length of `word` in bits.
pub fn complexity(word: &SymbolWord, backend: &Backend) -> Result<f64> {
    match backend {
        Backend::Lz78CodeLength => Ok(lz78_code_length(&word.symbols, word.alphabet) as f64),
        Backend::Lz76PhraseEncoding => Ok(lz76_code_length(&word.symbols, word.alphabet) as f64),
        Backend::ExternalCompressor { program, args } => run_external(word, program, args),
    }
}

/// Complexities of the prefixes of `word` with the given lengths.
pub fn prefix_complexities(
    word: &SymbolWord,
    backend: &Backend,
    lengths: &[usize],
) -> Result<Vec<f64>> {
    if let Some(l) = lengths.iter().find(|l| **l > word.len()) {
        return Err(Error::domain(format!(
            "prefix length {l} exceeds word length {}",
            word.len()
        )));
    }
    match backend {
        Backend::Lz78CodeLength => {
            let all = lz78_prefix_lengths(&word.symbols, word.alphabet);
            Ok(lengths
                .iter()
                .map(|l| if *l == 0 { 0.0 } else { all[l - 1] as f64 })
                .collect())
        }
        _ => lengths
            .iter()
            .map(|l| complexity(&word.slice(0, *l), backend))
            .collect(),
    }
}

/// `ceil(log2 card L_n) + ceil(log2 n) + c₀` for a member of the finite list `L_n`.
pub fn two_part_code_complexity(word: &SymbolWord, list: &[SymbolWord], n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("list index n must be positive"));
    }
    let member = list
        .iter()
        .any(|w| w.alphabet == word.alphabet && w.symbols == word.symbols);
    if !member {
        return Err(Error::NotAMember);
    }
    Ok(ceil_log2(list.len() as u128) as f64 + ceil_log2(n as u128) as f64 + TWO_PART_C0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn word(s: &[u128], a: u128) -> SymbolWord {
        SymbolWord::new(s.to_vec(), a).unwrap()
    }

    #[test]
    fn backend_examples() {
        let b = Backend::Lz78CodeLength;
        assert_eq!(complexity(&word(&[], 2), &b).unwrap(), 0.0);
        assert_eq!(complexity(&word(&[0; 6], 2), &b).unwrap(), 6.0);
        assert_eq!(complexity(&word(&[0, 1, 0, 1], 2), &b).unwrap(), 6.0);
        assert_eq!(
            complexity(&word(&[], 2), &Backend::Lz76PhraseEncoding).unwrap(),
            0.0
        );
    }

    #[test]
    fn single_symbol_is_cheap() {
        for a in [2u128, 16, 1 << 40] {
            let k = complexity(&word(&[a - 1], a), &Backend::Lz78CodeLength).unwrap();
            assert_eq!(k, ceil_log2(a) as f64);
        }
    }

    #[test]
    fn two_part_examples() {
        let list: Vec<SymbolWord> = (0..256u128).map(|i| word(&[i], 256)).collect();
        assert_eq!(
            two_part_code_complexity(&list[0], &list[..1], 1).unwrap(),
            TWO_PART_C0
        );
        for w in &list {
            assert_eq!(
                two_part_code_complexity(w, &list, 8).unwrap(),
                8.0 + 3.0 + TWO_PART_C0
            );
        }
        assert!(matches!(
            two_part_code_complexity(&word(&[3], 4), &list, 8),
            Err(Error::NotAMember)
        ));
    }

    #[test]
    fn backend_config_round_trip() {
        let b: Backend = serde_json::from_str(r#"{"kind":"lz78_code_length"}"#).unwrap();
        assert_eq!(b, Backend::Lz78CodeLength);
        let e: Backend = serde_json::from_str(
            r#"{"kind":"external_compressor","program":"gzip","args":["-c"]}"#,
        )
        .unwrap();
        assert!(e.is_informational());
    }

    #[cfg(unix)]
    #[test]
    fn external_counts_output_bytes() {
        // `cat` echoes the 16-byte header plus one payload byte
        let b = Backend::ExternalCompressor {
            program: "cat".into(),
            args: vec![],
        };
        assert_eq!(complexity(&word(&[1, 0, 1], 2), &b).unwrap(), 8.0 * 17.0);
        let missing = Backend::ExternalCompressor {
            program: "/nonexistent/compressor".into(),
            args: vec![],
        };
        assert!(matches!(
            complexity(&word(&[1], 2), &missing),
            Err(Error::External(_))
        ));
    }
}
