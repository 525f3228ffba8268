use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{training_tokens, EmbeddingModel};
use crate::aspects::AspectPhrase;
use crate::corpus::Review;
use crate::error::{Error, Result};
use crate::lexicon::Polarity;

/// Review representation used to train a rater.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Counts of the top-K training unigrams.
    Bl,
    /// Mean word vector of the review text.
    W2v,
    /// Text vector concatenated with the summed phrase vector.
    W2vApe,
    /// Text vector concatenated with separate positive and negative phrase
    /// sums.
    W2vPape,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Bl, Scheme::W2v, Scheme::W2vApe, Scheme::W2vPape];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Bl => "bl",
            Scheme::W2v => "w2v",
            Scheme::W2vApe => "w2v_ape",
            Scheme::W2vPape => "w2v_pape",
        }
    }

    /// Feature dimension for embedding width `d`; `None` for `bl`, whose
    /// width is the unigram vocabulary size.
    pub fn embedding_dim(self, d: usize) -> Option<usize> {
        match self {
            Scheme::Bl => None,
            Scheme::W2v => Some(d),
            Scheme::W2vApe => Some(2 * d),
            Scheme::W2vPape => Some(3 * d),
        }
    }

    pub fn uses_embeddings(self) -> bool {
        self != Scheme::Bl
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Scheme> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.as_str() == s || sc.as_str().replace('_', "-") == s)
            .ok_or_else(|| Error::config("scheme", format!("unknown scheme `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FeatureValues {
    Dense(Vec<f64>),
    /// `(index, value)` pairs with strictly increasing indices.
    Sparse(Vec<(usize, f64)>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub scheme: Scheme,
    pub dim: usize,
    pub values: FeatureValues,
}

impl FeatureVector {
    pub fn dense(scheme: Scheme, values: Vec<f64>) -> FeatureVector {
        FeatureVector {
            scheme,
            dim: values.len(),
            values: FeatureValues::Dense(values),
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        match &self.values {
            FeatureValues::Dense(v) => v.clone(),
            FeatureValues::Sparse(entries) => {
                let mut v = vec![0.0; self.dim];
                for &(i, x) in entries {
                    v[i] = x;
                }
                v
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        match &self.values {
            FeatureValues::Dense(v) => v.iter().all(|x| x.is_finite()),
            FeatureValues::Sparse(e) => e.iter().all(|(_, x)| x.is_finite()),
        }
    }
}

fn add_into(acc: &mut [f64], v: &[f32]) {
    for (a, x) in acc.iter_mut().zip(v) {
        *a += f64::from(*x);
    }
}

/// Mean of in-vocabulary token vectors; zeros when none is known.
pub fn text_embedding_from_tokens<S: AsRef<str>>(model: &EmbeddingModel, tokens: &[S]) -> Vec<f64> {
    let mut acc = vec![0.0; model.dim()];
    let mut n = 0usize;
    for t in tokens {
        if let Some(v) = model.vector(t.as_ref()) {
            add_into(&mut acc, v);
            n += 1;
        }
    }
    if n > 0 {
        acc.iter_mut().for_each(|a| *a /= n as f64);
    }
    acc
}

pub fn review_text_embedding(model: &EmbeddingModel, review: &Review) -> Vec<f64> {
    text_embedding_from_tokens(model, &training_tokens(&review.text))
}

/// Sum of the vectors of both words of every phrase, out-of-vocabulary
/// words skipped.
pub fn ape_vector<'p>(model: &EmbeddingModel, phrases: impl IntoIterator<Item = &'p AspectPhrase>) -> Vec<f64> {
    let mut acc = vec![0.0; model.dim()];
    for p in phrases {
        for w in [&p.sentiment_word, &p.target_word] {
            if let Some(v) = model.vector(w) {
                add_into(&mut acc, v);
            }
        }
    }
    acc
}

/// Positive-phrase sum followed by negative-phrase sum.
pub fn pape_vector(model: &EmbeddingModel, phrases: &[AspectPhrase]) -> Vec<f64> {
    let mut out = ape_vector(model, phrases.iter().filter(|p| p.polarity == Polarity::Positive));
    out.extend(ape_vector(
        model,
        phrases.iter().filter(|p| p.polarity == Polarity::Negative),
    ));
    out
}

/// Embedding features from pre-tokenized text.
pub fn featurize_tokens<S: AsRef<str>>(
    model: &EmbeddingModel,
    tokens: &[S],
    phrases: &[AspectPhrase],
    scheme: Scheme,
) -> Result<FeatureVector> {
    let mut values = text_embedding_from_tokens(model, tokens);
    match scheme {
        Scheme::Bl => {
            return Err(Error::InvalidInput(
                "bl features come from a unigram vocabulary, not embeddings".into(),
            ))
        }
        Scheme::W2v => {}
        Scheme::W2vApe => values.extend(ape_vector(model, phrases)),
        Scheme::W2vPape => values.extend(pape_vector(model, phrases)),
    }
    Ok(FeatureVector::dense(scheme, values))
}

pub fn featurize(
    model: &EmbeddingModel,
    review: &Review,
    phrases: &[AspectPhrase],
    scheme: Scheme,
) -> Result<FeatureVector> {
    featurize_tokens(model, &training_tokens(&review.text), phrases, scheme)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Stars;
    use proptest::prelude::*;

    fn model() -> EmbeddingModel {
        EmbeddingModel::from_rows(
            3,
            vec![
                ("good".into(), vec![1.0, 0.0, 2.0]),
                ("food".into(), vec![0.0, 1.0, -1.0]),
                ("great".into(), vec![0.5, 0.5, 0.5]),
                ("book".into(), vec![-1.0, 2.0, 0.0]),
                ("read".into(), vec![0.25, 0.0, 1.0]),
                ("awful".into(), vec![-2.0, -2.0, 1.0]),
            ],
        )
        .unwrap()
    }

    fn review(text: &str) -> Review {
        Review {
            id: "r".into(),
            text: text.into(),
            stars: Stars::new(4).unwrap(),
            domain: "d".into(),
            source: "s".into(),
        }
    }

    fn phrase(s: &str, t: &str, p: Polarity) -> AspectPhrase {
        AspectPhrase {
            sentiment_word: s.into(),
            target_word: t.into(),
            polarity: p,
            segment_index: 0,
            sentiment_position: 0,
            target_position: 1,
        }
    }

    #[test]
    fn text_embedding_is_mean() {
        let m = model();
        assert_eq!(review_text_embedding(&m, &review("good")), [1.0, 0.0, 2.0]);
        assert_eq!(review_text_embedding(&m, &review("Good food!")), [0.5, 0.5, 0.5]);
        assert_eq!(review_text_embedding(&m, &review("zzz qqq")), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn ape_sums_all_words() {
        let m = model();
        assert_eq!(ape_vector(&m, &[]), [0.0; 3]);
        let one = [phrase("great", "book", Polarity::Positive)];
        assert_eq!(ape_vector(&m, &one), [-0.5, 2.5, 0.5]);
        let two = [
            phrase("great", "book", Polarity::Positive),
            phrase("good", "read", Polarity::Positive),
        ];
        assert_eq!(ape_vector(&m, &two), [0.75, 2.5, 3.5]);
        let oov = [phrase("great", "zzz", Polarity::Positive)];
        assert_eq!(ape_vector(&m, &oov), [0.5, 0.5, 0.5]);
    }

    #[test]
    fn pape_halves() {
        let m = model();
        let pos = [phrase("good", "food", Polarity::Positive)];
        assert_eq!(pape_vector(&m, &pos), [1.0, 1.0, 1.0, 0.0, 0.0, 0.0]);
        let neg = [phrase("awful", "food", Polarity::Negative)];
        assert_eq!(pape_vector(&m, &neg), [0.0, 0.0, 0.0, -2.0, -1.0, 0.0]);
        assert_eq!(pape_vector(&m, &[]).len(), 6);
    }

    #[test]
    fn featurize_schemes() {
        let m = model();
        let r = review("good food");
        let none: [AspectPhrase; 0] = [];
        let w2v = featurize(&m, &r, &none, Scheme::W2v).unwrap();
        assert_eq!(w2v.to_dense(), review_text_embedding(&m, &r));
        let ape = featurize(&m, &r, &none, Scheme::W2vApe).unwrap();
        assert_eq!(ape.dim, 6);
        assert_eq!(ape.to_dense()[3..], [0.0; 3]);
        let pape = featurize(&m, &r, &none, Scheme::W2vPape).unwrap();
        assert_eq!(pape.dim, 9);
        assert!(featurize(&m, &r, &none, Scheme::Bl).is_err());
    }

    #[test]
    fn scheme_names() {
        for s in Scheme::ALL {
            assert_eq!(s.as_str().parse::<Scheme>().unwrap(), s);
        }
        assert_eq!("w2v-pape".parse::<Scheme>().unwrap(), Scheme::W2vPape);
        assert!("tfidf".parse::<Scheme>().is_err());
    }

    fn arb_phrases() -> impl Strategy<Value = Vec<AspectPhrase>> {
        let words = ["good", "food", "great", "book", "read", "awful", "zzz"];
        prop::collection::vec((0..7usize, 0..7usize, any::<bool>()), 0..12).prop_map(move |v| {
            v.into_iter()
                .map(|(a, b, pos)| {
                    phrase(words[a], words[b], if pos { Polarity::Positive } else { Polarity::Negative })
                })
                .collect()
        })
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-9)
    }

    proptest! {
        #[test]
        fn ape_additive_and_permutation_invariant(a in arb_phrases(), b in arb_phrases()) {
            let m = model();
            let joined: Vec<AspectPhrase> = a.iter().chain(&b).cloned().collect();
            let sum: Vec<f64> = ape_vector(&m, &a).iter().zip(ape_vector(&m, &b)).map(|(x, y)| x + y).collect();
            prop_assert!(close(&ape_vector(&m, &joined), &sum));
            let mut rev = joined.clone();
            rev.reverse();
            prop_assert!(close(&ape_vector(&m, &rev), &ape_vector(&m, &joined)));
        }

        #[test]
        fn pape_halves_sum_to_ape(ps in arb_phrases()) {
            let m = model();
            let pape = pape_vector(&m, &ps);
            let folded: Vec<f64> = (0..3).map(|i| pape[i] + pape[i + 3]).collect();
            prop_assert!(close(&folded, &ape_vector(&m, &ps)));
        }
    }
}
