//! The keyword baseline featurizer, the softmax rater and the on-disk
//! model container.

mod bl;
mod mlr;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use bl::{
    bl_featurize, bl_featurize_tokens, select_top_k_unigrams, select_unigrams_by, unigram_counts,
    UnigramVocab, DEFAULT_TOP_K,
};
pub use mlr::{loss_and_gradient, train_mlr, Gradient, MlrConfig, MlrModel, NUM_CLASSES};

use crate::aspects::AspectPhrase;
use crate::corpus::Stars;
use crate::embeddings::{featurize_tokens, EmbeddingModel, Scheme};
use crate::error::{Error, Result};

const FORMAT: &str = "review-rating-model";
const VERSION: u32 = 1;

/// A trained rater together with what is needed to rebuild its features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedModel {
    pub format: String,
    pub version: u32,
    pub scheme: Scheme,
    pub feature_dim: usize,
    /// Star labels in class-index order.
    pub classes: Vec<u8>,
    /// Unigram vocabulary for `bl`.
    pub vocab: Option<UnigramVocab>,
    /// Path of the embedding file for the embedding schemes.
    pub embeddings: Option<String>,
    pub model: MlrModel,
}

impl SavedModel {
    pub fn new(
        scheme: Scheme,
        model: MlrModel,
        vocab: Option<UnigramVocab>,
        embeddings: Option<String>,
    ) -> Result<SavedModel> {
        match (scheme, &vocab, &embeddings) {
            (Scheme::Bl, None, _) => {
                return Err(Error::ModelFormat("bl model needs its unigram vocabulary".into()))
            }
            (Scheme::Bl, Some(v), _) if v.len() != model.feature_dim => {
                return Err(Error::DimensionMismatch {
                    expected: model.feature_dim,
                    actual: v.len(),
                })
            }
            _ => {}
        }
        Ok(SavedModel {
            format: FORMAT.into(),
            version: VERSION,
            scheme,
            feature_dim: model.feature_dim,
            classes: (1..=5).collect(),
            vocab,
            embeddings,
            model,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<SavedModel> {
        let m: SavedModel =
            serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if m.format != FORMAT {
            return Err(Error::ModelFormat(format!("unexpected format tag `{}`", m.format)));
        }
        if m.version != VERSION {
            return Err(Error::ModelFormat(format!("unsupported version {}", m.version)));
        }
        if m.classes != [1, 2, 3, 4, 5] {
            return Err(Error::ModelFormat("class order must be 1..5".into()));
        }
        let f = m.model.feature_dim;
        if m.feature_dim != f
            || m.model.weights.len() != NUM_CLASSES * f
            || !(m.model.mean.is_empty() || m.model.mean.len() == f && m.model.scale.len() == f)
        {
            return Err(Error::ModelFormat("inconsistent feature dimension".into()));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<SavedModel> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        SavedModel::from_json(&text)
    }
}

/// A saved model with the word vectors it was trained on: everything
/// needed to rate new text.
#[derive(Debug, Clone)]
pub struct Predictor {
    saved: SavedModel,
    embeddings: Option<EmbeddingModel>,
}

impl Predictor {
    /// Pairs a model with its vectors; embedding schemes need vectors whose
    /// dimension matches the model.
    pub fn new(saved: SavedModel, embeddings: Option<EmbeddingModel>) -> Result<Predictor> {
        match (saved.scheme.embedding_dim(1), &embeddings) {
            (None, _) => Ok(Predictor {
                saved,
                embeddings: None,
            }),
            (Some(_), None) => Err(Error::ModelFormat(format!(
                "{} model needs word vectors",
                saved.scheme
            ))),
            (Some(_), Some(e)) => {
                let expected = saved.scheme.embedding_dim(e.dim()).expect("embedding scheme");
                if expected != saved.feature_dim {
                    return Err(Error::DimensionMismatch {
                        expected: saved.feature_dim,
                        actual: expected,
                    });
                }
                Ok(Predictor { saved, embeddings })
            }
        }
    }

    /// Loads a model file and, for embedding schemes, the vector file it
    /// names. Relative names resolve against the model's directory first.
    pub fn load(path: &Path) -> Result<Predictor> {
        let saved = SavedModel::load(path)?;
        let embeddings = match (saved.scheme.uses_embeddings(), &saved.embeddings) {
            (false, _) => None,
            (true, None) => return Err(Error::ModelFormat("model names no embedding file".into())),
            (true, Some(r)) => Some(EmbeddingModel::load(&resolve_reference(path, r))?),
        };
        Predictor::new(saved, embeddings)
    }

    pub fn saved(&self) -> &SavedModel {
        &self.saved
    }

    pub fn embeddings(&self) -> Option<&EmbeddingModel> {
        self.embeddings.as_ref()
    }

    pub fn scheme(&self) -> Scheme {
        self.saved.scheme
    }

    pub fn feature_dim(&self) -> usize {
        self.saved.feature_dim
    }

    /// Features of a tokenized review. `phrases` is ignored by schemes
    /// that do not use it.
    pub fn features<S: AsRef<str>>(&self, tokens: &[S], phrases: &[AspectPhrase]) -> Result<Vec<f64>> {
        match (&self.saved.vocab, &self.embeddings) {
            (Some(vocab), _) if self.saved.scheme == Scheme::Bl => Ok(bl_featurize_tokens(tokens, vocab).to_dense()),
            (_, Some(e)) => Ok(featurize_tokens(e, tokens, phrases, self.saved.scheme)?.to_dense()),
            _ => Err(Error::ModelFormat("model cannot rebuild its features".into())),
        }
    }

    pub fn predict<S: AsRef<str>>(&self, tokens: &[S], phrases: &[AspectPhrase]) -> Result<Stars> {
        self.saved.model.predict(&self.features(tokens, phrases)?)
    }
}

fn resolve_reference(model_path: &Path, reference: &str) -> PathBuf {
    let r = Path::new(reference);
    if r.is_relative() {
        if let Some(beside) = model_path.parent().map(|d| d.join(r)) {
            if beside.exists() {
                return beside;
            }
        }
    }
    r.to_path_buf()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Stars;

    fn model() -> MlrModel {
        let xs = vec![vec![0.1, 2.0], vec![1.0 / 3.0, -7.25], vec![1e-17, 3.5]];
        let ys: Vec<Stars> = [1, 4, 5].iter().map(|&s| Stars::new(s).unwrap()).collect();
        train_mlr(&xs, &ys, &MlrConfig::default()).unwrap()
    }

    #[test]
    fn container_round_trip_is_exact() {
        let vocab = UnigramVocab::from_ranked(vec!["a".into(), "b".into()], 2);
        let saved = SavedModel::new(Scheme::Bl, model(), Some(vocab), None).unwrap();
        assert_eq!(SavedModel::from_json(&saved.to_json()).unwrap(), saved);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let saved = SavedModel::new(Scheme::W2vPape, model(), None, Some("emb.txt".into())).unwrap();
        saved.save(&path).unwrap();
        assert_eq!(SavedModel::load(&path).unwrap(), saved);
    }

    #[test]
    fn rejects_inconsistent_containers() {
        assert!(SavedModel::new(Scheme::Bl, model(), None, None).is_err());
        let short = UnigramVocab::from_ranked(vec!["a".into()], 1);
        assert!(SavedModel::new(Scheme::Bl, model(), Some(short), None).is_err());
        let saved = SavedModel::new(Scheme::W2v, model(), None, None).unwrap();
        let json = saved.to_json();
        assert!(SavedModel::from_json(&json.replace("\"version\": 1", "\"version\": 9")).is_err());
        assert!(SavedModel::from_json(&json.replace(FORMAT, "other")).is_err());
        assert!(SavedModel::from_json("{").is_err());
    }

    #[test]
    fn predictor_checks_vectors() {
        let rows = vec![("good".to_string(), vec![1.0, 0.0]), ("bad".to_string(), vec![0.0, 1.0])];
        let emb = EmbeddingModel::from_rows(2, rows).unwrap();
        let saved = SavedModel::new(Scheme::W2v, model(), None, Some("emb.txt".into())).unwrap();
        assert!(Predictor::new(saved.clone(), None).is_err());
        let p = Predictor::new(saved.clone(), Some(emb.clone())).unwrap();
        assert_eq!(p.features(&["good", "bad"], &[]).unwrap(), [0.5, 0.5]);
        p.predict(&["good"], &[]).unwrap();
        let ape = SavedModel::new(Scheme::W2vApe, model(), None, None).unwrap();
        assert!(matches!(
            Predictor::new(ape, Some(emb.clone())),
            Err(Error::DimensionMismatch { expected: 2, actual: 4 })
        ));

        let dir = tempfile::tempdir().unwrap();
        emb.save(&dir.path().join("emb.txt")).unwrap();
        saved.save(&dir.path().join("m.json")).unwrap();
        let loaded = Predictor::load(&dir.path().join("m.json")).unwrap();
        assert_eq!(loaded.embeddings().unwrap().len(), 2);
    }
}
