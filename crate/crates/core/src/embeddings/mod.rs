//! Word embeddings and the embedding-based review representations.

mod features;
mod word2vec;

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

pub use features::{
    ape_vector, featurize, featurize_tokens, pape_vector, review_text_embedding,
    text_embedding_from_tokens, FeatureValues, FeatureVector, Scheme,
};
pub use word2vec::{train_on_sentences, train_word2vec, training_tokens, Word2VecConfig};

use crate::error::{Error, Result};

/// Vocabulary and one `dim`-length vector per word.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    dim: usize,
    index: HashMap<String, usize>,
    words: Vec<String>,
    vectors: Vec<f32>,
    /// Present when the model was trained here rather than loaded.
    pub train_config: Option<Word2VecConfig>,
    /// Mean training loss per epoch.
    pub epoch_losses: Vec<f64>,
}

impl EmbeddingModel {
    /// Builds a model from explicit rows. Rows must all have length `dim`
    /// and finite components; words must be unique.
    pub fn from_rows(dim: usize, rows: Vec<(String, Vec<f32>)>) -> Result<EmbeddingModel> {
        if dim == 0 {
            return Err(Error::EmbeddingFormat("dimension must be at least 1".into()));
        }
        let mut index = HashMap::with_capacity(rows.len());
        let mut words = Vec::with_capacity(rows.len());
        let mut vectors = Vec::with_capacity(rows.len() * dim);
        for (word, v) in rows {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::EmbeddingFormat(format!("non-finite component for `{word}`")));
            }
            if index.insert(word.clone(), words.len()).is_some() {
                return Err(Error::EmbeddingFormat(format!("duplicate word `{word}`")));
            }
            words.push(word);
            vectors.extend(v);
        }
        Ok(EmbeddingModel {
            dim,
            index,
            words,
            vectors,
            train_config: None,
            epoch_losses: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Words in vocabulary order (descending training frequency).
    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// The row for `word` after lowercasing, or `None` when out of
    /// vocabulary.
    pub fn vector(&self, word: &str) -> Option<&[f32]> {
        let i = match self.index.get(word) {
            Some(&i) if !word.chars().any(char::is_uppercase) => i,
            _ => *self.index.get(&word.to_lowercase())?,
        };
        Some(&self.vectors[i * self.dim..(i + 1) * self.dim])
    }

    pub fn cosine(&self, a: &str, b: &str) -> Option<f64> {
        let (va, vb) = (self.vector(a)?, self.vector(b)?);
        let dot: f64 = va.iter().zip(vb).map(|(x, y)| f64::from(*x) * f64::from(*y)).sum();
        let na: f64 = va.iter().map(|x| f64::from(*x).powi(2)).sum::<f64>().sqrt();
        let nb: f64 = vb.iter().map(|x| f64::from(*x).powi(2)).sum::<f64>().sqrt();
        Some(dot / (na * nb))
    }

    /// Text format: a `<vocab_size> <dim>` header, then one line per word
    /// with `dim` space-separated floats.
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.words.len(), self.dim)?;
        for (i, w) in self.words.iter().enumerate() {
            out.write_all(w.as_bytes())?;
            for x in &self.vectors[i * self.dim..(i + 1) * self.dim] {
                write!(out, " {x}")?;
            }
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(input: R) -> Result<EmbeddingModel> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::EmbeddingFormat("empty file".into()))?
            .map_err(|e| Error::EmbeddingFormat(e.to_string()))?;
        let mut parts = header.split_whitespace();
        let parse_count = |s: Option<&str>| -> Result<usize> {
            s.and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::EmbeddingFormat(format!("bad header `{header}`")))
        };
        let count = parse_count(parts.next())?;
        let dim = parse_count(parts.next())?;
        let mut rows = Vec::with_capacity(count);
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::EmbeddingFormat(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split(' ').filter(|f| !f.is_empty());
            let word = fields.next().unwrap_or_default().to_string();
            let v: Vec<f32> = fields
                .map(|f| f.parse::<f32>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::EmbeddingFormat(format!("line {}: {e}", i + 2)))?;
            if v.len() != dim {
                return Err(Error::EmbeddingFormat(format!(
                    "line {}: expected {dim} values, found {}",
                    i + 2,
                    v.len()
                )));
            }
            rows.push((word, v));
        }
        if rows.len() != count {
            return Err(Error::EmbeddingFormat(format!(
                "header announces {count} words, found {}",
                rows.len()
            )));
        }
        EmbeddingModel::from_rows(dim, rows)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(f);
        self.write_text(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<EmbeddingModel> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        EmbeddingModel::read_text(std::io::BufReader::new(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn model() -> EmbeddingModel {
        EmbeddingModel::from_rows(
            2,
            vec![("good".into(), vec![1.0, 2.0]), ("food".into(), vec![3.0, -1.5])],
        )
        .unwrap()
    }

    #[test]
    fn lookups() {
        let m = model();
        assert_eq!(m.vector("good"), Some(&[1.0f32, 2.0][..]));
        assert_eq!(m.vector("Good"), m.vector("good"));
        assert_eq!(m.vector("GOOD"), m.vector("good"));
        assert!(m.vector("absent").is_none());
    }

    #[test]
    fn text_format_header() {
        let mut out = Vec::new();
        model().write_text(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "2 2\ngood 1 2\nfood 3 -1.5\n");
    }

    #[test]
    fn malformed_files_rejected() {
        for bad in ["", "x y\n", "1 2\ngood 1\n", "2 2\ngood 1 2\n", "1 2\ngood 1 abc\n", "1 1\ngood NaN\n"] {
            assert!(EmbeddingModel::read_text(bad.as_bytes()).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn from_rows_validates() {
        assert!(EmbeddingModel::from_rows(2, vec![("a".into(), vec![1.0])]).is_err());
        assert!(EmbeddingModel::from_rows(
            1,
            vec![("a".into(), vec![1.0]), ("a".into(), vec![2.0])]
        )
        .is_err());
        assert!(EmbeddingModel::from_rows(0, vec![]).is_err());
    }

    proptest! {
        #[test]
        fn text_round_trip_preserves_values(
            rows in prop::collection::vec(prop::collection::vec(-1e6f32..1e6, 3), 1..20)
        ) {
            let rows: Vec<(String, Vec<f32>)> = rows
                .into_iter()
                .enumerate()
                .map(|(i, v)| (format!("w{i}"), v))
                .collect();
            let m = EmbeddingModel::from_rows(3, rows).unwrap();
            let mut buf = Vec::new();
            m.write_text(&mut buf).unwrap();
            let back = EmbeddingModel::read_text(buf.as_slice()).unwrap();
            for w in m.words() {
                for (a, b) in m.vector(w).unwrap().iter().zip(back.vector(w).unwrap()) {
                    prop_assert!((a - b).abs() <= a.abs() * 1e-6);
                }
            }
        }
    }
}
