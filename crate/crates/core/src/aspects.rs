//! Aspect-phrase extraction and per-domain salience ranking.
//!
//! A phrase pairs a lexicon sentiment word with a non-sentiment noun or
//! verb from the same segment. Every such pair in a segment is emitted.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{csv_err, Review, ReviewSet};
use crate::error::{Error, Result};
use crate::lexicon::{Polarity, SentimentLexicon};
use crate::textproc::{analyze, Pos, Segment, Tagger};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AspectPhrase {
    pub sentiment_word: String,
    pub target_word: String,
    pub polarity: Polarity,
    pub segment_index: usize,
    /// Token positions of the two words within their segment.
    pub sentiment_position: usize,
    pub target_position: usize,
}

/// Extraction settings bound to a lexicon and tagger.
pub struct AspectExtractor<'a> {
    lexicon: &'a SentimentLexicon,
    tagger: &'a dyn Tagger,
    /// Maximum token distance between the two words; `None` means the
    /// segment is the only limit.
    pub max_distance: Option<usize>,
}

impl<'a> AspectExtractor<'a> {
    pub fn new(lexicon: &'a SentimentLexicon, tagger: &'a dyn Tagger) -> Self {
        AspectExtractor {
            lexicon,
            tagger,
            max_distance: None,
        }
    }

    pub fn with_max_distance(mut self, max_distance: Option<usize>) -> Self {
        self.max_distance = max_distance;
        self
    }

    pub fn lexicon(&self) -> &SentimentLexicon {
        self.lexicon
    }

    pub fn extract(&self, review: &Review) -> Vec<AspectPhrase> {
        self.extract_text(&review.text)
    }

    pub fn extract_text(&self, text: &str) -> Vec<AspectPhrase> {
        analyze(text, self.tagger)
            .iter()
            .enumerate()
            .flat_map(|(i, seg)| self.extract_segment(i, seg))
            .collect()
    }

    /// Sentiment words by position, then targets by position.
    pub fn extract_segment(&self, segment_index: usize, segment: &Segment) -> Vec<AspectPhrase> {
        let mut sentiments = Vec::new();
        let mut targets = Vec::new();
        for (pos, tok) in segment.tokens.iter().enumerate() {
            match self.lexicon.polarity(&tok.norm) {
                Some(p) => sentiments.push((pos, tok.norm.as_str(), p)),
                None if matches!(tok.pos, Some(Pos::Noun | Pos::Verb)) => {
                    targets.push((pos, tok.norm.as_str()))
                }
                None => {}
            }
        }
        let mut out = Vec::with_capacity(sentiments.len() * targets.len());
        for &(sp, sw, polarity) in &sentiments {
            for &(tp, tw) in &targets {
                if self.max_distance.is_some_and(|m| sp.abs_diff(tp) > m) {
                    continue;
                }
                out.push(AspectPhrase {
                    sentiment_word: sw.to_string(),
                    target_word: tw.to_string(),
                    polarity,
                    segment_index,
                    sentiment_position: sp,
                    target_position: tp,
                });
            }
        }
        out
    }

    /// Phrases for every review, in review order.
    pub fn extract_all(&self, set: &ReviewSet) -> Vec<Vec<AspectPhrase>> {
        set.reviews().par_iter().map(|r| self.extract(r)).collect()
    }
}

/// `review_id,segment_index,sentiment_word,target_word,polarity`.
pub fn write_phrase_dump<W: Write>(
    out: W,
    rows: impl IntoIterator<Item = (impl AsRef<str>, impl AsRef<[AspectPhrase]>)>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["review_id", "segment_index", "sentiment_word", "target_word", "polarity"])
        .map_err(csv_err)?;
    for (id, phrases) in rows {
        for p in phrases.as_ref() {
            w.write_record([
                id.as_ref(),
                &p.segment_index.to_string(),
                &p.sentiment_word,
                &p.target_word,
                p.polarity.as_str(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::Internal(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedPhrase {
    pub sentiment_word: String,
    pub target_word: String,
    pub count: u64,
}

/// Top phrases per domain, ranked by count then lexicographically.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SalienceReport {
    pub domains: BTreeMap<String, Vec<RankedPhrase>>,
}

impl SalienceReport {
    /// `domain,rank,sentiment_word,target_word,count` with 1-based ranks.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["domain", "rank", "sentiment_word", "target_word", "count"])
            .map_err(csv_err)?;
        for (domain, phrases) in &self.domains {
            for (i, p) in phrases.iter().enumerate() {
                w.write_record([
                    domain.as_str(),
                    &(i + 1).to_string(),
                    &p.sentiment_word,
                    &p.target_word,
                    &p.count.to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
        w.flush().map_err(|e| Error::Internal(e.to_string()))
    }
}

/// Counts `(sentiment, target)` pairs per domain and keeps the `top_n` most
/// frequent. Counting is sharded across threads and merged; the result is
/// independent of the sharding.
pub fn salient_phrases(
    set: &ReviewSet,
    extractor: &AspectExtractor<'_>,
    top_n: usize,
) -> Result<SalienceReport> {
    if top_n == 0 {
        return Err(Error::InvalidInput("top_n must be at least 1".into()));
    }
    let phrases = extractor.extract_all(set);
    Ok(rank_phrases(set, &phrases, top_n))
}

/// Ranking over pre-extracted phrases (`phrases[i]` belongs to review `i`).
pub fn rank_phrases(set: &ReviewSet, phrases: &[Vec<AspectPhrase>], top_n: usize) -> SalienceReport {
    let counts: HashMap<String, HashMap<(String, String), u64>> = set
        .reviews()
        .par_iter()
        .zip(phrases.par_iter())
        .fold(HashMap::new, |mut acc: HashMap<String, HashMap<(String, String), u64>>, (r, ps)| {
            let dom = acc.entry(r.domain.clone()).or_default();
            for p in ps {
                *dom.entry((p.sentiment_word.clone(), p.target_word.clone()))
                    .or_insert(0) += 1;
            }
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            for (d, m) in b {
                let slot = a.entry(d).or_default();
                for (k, c) in m {
                    *slot.entry(k).or_insert(0) += c;
                }
            }
            a
        });

    let mut report = SalienceReport::default();
    for domain in set.domains() {
        let mut ranked: Vec<RankedPhrase> = counts
            .get(domain)
            .into_iter()
            .flatten()
            .map(|((s, t), &c)| RankedPhrase {
                sentiment_word: s.clone(),
                target_word: t.clone(),
                count: c,
            })
            .collect();
        ranked.sort_by(|a, b| {
            b.count
                .cmp(&a.count)
                .then_with(|| a.sentiment_word.cmp(&b.sentiment_word))
                .then_with(|| a.target_word.cmp(&b.target_word))
        });
        ranked.truncate(top_n);
        report.domains.insert(domain.clone(), ranked);
    }
    report
}
