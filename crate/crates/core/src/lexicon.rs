//! Opinion lexicon: positive and negative word lists.
//!
//! File format: one word per line, `;` starts a comment line, blank lines
//! are skipped. Legacy copies of the lists contain Latin-1 bytes; lines that
//! are not valid UTF-8 are decoded as Latin-1 and folded to ASCII, as are
//! accented letters in UTF-8 input.

use std::collections::{BTreeSet, HashSet};
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BUNDLED_POSITIVE: &[u8] = include_bytes!("../data/lexicon/positive-words.txt");
const BUNDLED_NEGATIVE: &[u8] = include_bytes!("../data/lexicon/negative-words.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SentimentLexicon {
    positive: HashSet<String>,
    negative: HashSet<String>,
}

impl SentimentLexicon {
    /// Builds a lexicon from word lists; words are lowercased. Fails if any
    /// word appears in both lists, naming every offender.
    pub fn from_words<P, N>(positive: P, negative: N) -> Result<SentimentLexicon>
    where
        P: IntoIterator,
        P::Item: AsRef<str>,
        N: IntoIterator,
        N::Item: AsRef<str>,
    {
        let positive: HashSet<String> = positive
            .into_iter()
            .map(|w| w.as_ref().to_lowercase())
            .collect();
        let negative: HashSet<String> = negative
            .into_iter()
            .map(|w| w.as_ref().to_lowercase())
            .collect();
        let conflicts: BTreeSet<&String> = positive.intersection(&negative).collect();
        if !conflicts.is_empty() {
            return Err(Error::LexiconConflict(
                conflicts.into_iter().cloned().collect(),
            ));
        }
        Ok(SentimentLexicon { positive, negative })
    }

    pub fn from_bytes(positive: &[u8], negative: &[u8]) -> Result<SentimentLexicon> {
        SentimentLexicon::from_words(parse_word_list(positive), parse_word_list(negative))
    }

    pub fn load(pos_path: &Path, neg_path: &Path) -> Result<SentimentLexicon> {
        let pos = std::fs::read(pos_path).map_err(|e| Error::io(pos_path, e))?;
        let neg = std::fs::read(neg_path).map_err(|e| Error::io(neg_path, e))?;
        SentimentLexicon::from_bytes(&pos, &neg)
    }

    /// The Hu & Liu opinion lexicon shipped with the crate.
    /// The bundled lists, parsed once per process.
    pub fn shared() -> &'static SentimentLexicon {
        static LEXICON: OnceLock<SentimentLexicon> = OnceLock::new();
        LEXICON.get_or_init(|| {
            SentimentLexicon::from_bytes(BUNDLED_POSITIVE, BUNDLED_NEGATIVE)
                .expect("bundled lexicon lists are disjoint")
        })
    }

    pub fn bundled() -> SentimentLexicon {
        SentimentLexicon::shared().clone()
    }

    pub fn polarity(&self, word: &str) -> Option<Polarity> {
        if self.positive.contains(word) {
            Some(Polarity::Positive)
        } else if self.negative.contains(word) {
            Some(Polarity::Negative)
        } else {
            None
        }
    }

    pub fn is_sentiment(&self, word: &str) -> bool {
        self.polarity(word).is_some()
    }

    pub fn positive_len(&self) -> usize {
        self.positive.len()
    }

    pub fn negative_len(&self) -> usize {
        self.negative.len()
    }

    pub fn len(&self) -> usize {
        self.positive.len() + self.negative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sorted word lists, for deterministic iteration.
    pub fn positive_words(&self) -> Vec<&str> {
        sorted(&self.positive)
    }

    pub fn negative_words(&self) -> Vec<&str> {
        sorted(&self.negative)
    }
}

fn sorted(set: &HashSet<String>) -> Vec<&str> {
    let mut v: Vec<&str> = set.iter().map(String::as_str).collect();
    v.sort_unstable();
    v
}

/// Splits a published word-list file into lowercase words.
pub fn parse_word_list(bytes: &[u8]) -> Vec<String> {
    bytes
        .split(|&b| b == b'\n')
        .filter_map(|raw| {
            let line = match std::str::from_utf8(raw) {
                Ok(s) => fold_ascii(s),
                Err(_) => fold_ascii(&raw.iter().map(|&b| b as char).collect::<String>()),
            };
            let line = line.trim();
            if line.is_empty() || line.starts_with(';') {
                None
            } else {
                Some(line.to_lowercase())
            }
        })
        .collect()
}

fn fold_ascii(s: &str) -> String {
    s.chars()
        .map(|c| match c {
            'à' | 'á' | 'â' | 'ã' | 'ä' | 'å' => 'a',
            'ç' => 'c',
            'è' | 'é' | 'ê' | 'ë' => 'e',
            'ì' | 'í' | 'î' | 'ï' => 'i',
            'ñ' => 'n',
            'ò' | 'ó' | 'ô' | 'õ' | 'ö' => 'o',
            'ù' | 'ú' | 'û' | 'ü' => 'u',
            'ý' | 'ÿ' => 'y',
            _ => c,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_lists_have_published_size() {
        let lex = SentimentLexicon::bundled();
        assert_eq!(lex.positive_len(), 2003);
        assert_eq!(lex.negative_len(), 4782);
        // "over 6,800" in the literature; the distributed lists hold 6,789
        // entries before the three cross-listed words are resolved.
        assert!((lex.len() as f64 - 6800.0).abs() / 6800.0 < 0.01);
    }

    #[test]
    fn bundled_lookups() {
        let lex = SentimentLexicon::bundled();
        assert_eq!(lex.polarity("excellent"), Some(Polarity::Positive));
        assert_eq!(lex.polarity("awful"), Some(Polarity::Negative));
        assert_eq!(lex.polarity("table"), None);
        assert_eq!(lex.polarity("well-written"), None);
        assert_eq!(lex.polarity("naive"), Some(Polarity::Negative));
        assert_eq!(lex.polarity("envious"), Some(Polarity::Negative));
    }

    #[test]
    fn comment_and_blank_lines_skipped() {
        let lex = SentimentLexicon::from_bytes(b";\n\n; another comment\n", b"bad\n").unwrap();
        assert_eq!(lex.positive_len(), 0);
        assert_eq!(lex.negative_len(), 1);
    }

    #[test]
    fn conflicting_entry_is_named() {
        let err = SentimentLexicon::from_bytes(b"good\nfine\n", b"Good\nbad\n").unwrap_err();
        match err {
            Error::LexiconConflict(words) => assert_eq!(words, ["good"]),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn latin1_bytes_transliterated() {
        let words = parse_word_list(b"na\xefve\ncaf\xe9\n");
        assert_eq!(words, ["naive", "cafe"]);
    }

    #[test]
    fn unreadable_file_is_io_error() {
        let err = SentimentLexicon::load(Path::new("/nonexistent/p"), Path::new("/nonexistent/n"))
            .unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn polarity_is_exclusive() {
        let lex = SentimentLexicon::bundled();
        for w in lex.positive_words() {
            assert_ne!(lex.polarity(w), Some(Polarity::Negative));
        }
    }
}
