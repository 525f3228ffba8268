use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Review, ReviewSet, Stars};
use crate::error::{Error, Result};
use crate::lexicon::SentimentLexicon;
use crate::seeds;
use crate::textproc::BUNDLED_DICTIONARY;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthDomain {
    pub name: String,
    pub reviews: usize,
}

/// Shape of a generated corpus. Each domain draws its target nouns from a
/// private pool; all domains share one pool of sentiment adjectives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub domains: Vec<SynthDomain>,
    pub targets_per_domain: usize,
    /// Sentiment words per polarity.
    pub sentiment_words: usize,
    pub min_opinions: usize,
    pub max_opinions: usize,
    /// Upper bound on opinion-free clauses per review.
    pub max_neutral: usize,
    /// Chance that an opinion clause stacks a second sentiment word of the
    /// same polarity in front of the first.
    pub stacked_rate: f64,
    /// Relative frequency of the five review moods, most negative first.
    /// A mood fixes the chance that each planted opinion is positive.
    pub mood_weights: [f64; 5],
}

const MOOD_POSITIVE_RATE: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            domains: vec![
                SynthDomain {
                    name: "domain-a".into(),
                    reviews: 500,
                },
                SynthDomain {
                    name: "domain-b".into(),
                    reviews: 500,
                },
            ],
            targets_per_domain: 60,
            sentiment_words: 120,
            min_opinions: 1,
            max_opinions: 6,
            max_neutral: 3,
            stacked_rate: 0.5,
            mood_weights: [0.12, 0.1, 0.13, 0.25, 0.4],
        }
    }
}

impl SynthSpec {
    /// Four well-populated domains and one scarce domain of 200 reviews.
    pub fn acceptance() -> SynthSpec {
        let mut domains: Vec<SynthDomain> = ["domain-a", "domain-b", "domain-c", "domain-d"]
            .iter()
            .map(|n| SynthDomain {
                name: n.to_string(),
                reviews: 1000,
            })
            .collect();
        domains.push(SynthDomain {
            name: "scarce".into(),
            reviews: 200,
        });
        SynthSpec {
            domains,
            ..SynthSpec::default()
        }
    }

    /// `n` domains of `reviews` each.
    pub fn uniform(n: usize, reviews: usize) -> SynthSpec {
        SynthSpec {
            domains: (0..n)
                .map(|i| SynthDomain {
                    name: format!("domain-{:02}", i + 1),
                    reviews,
                })
                .collect(),
            ..SynthSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.domains.len() < 2 {
            return Err(Error::config("domains", "at least 2 domains are required"));
        }
        let mut names = BTreeSet::new();
        for d in &self.domains {
            if d.name.trim().is_empty() {
                return Err(Error::config("domains.name", "must not be empty"));
            }
            if !names.insert(d.name.as_str()) {
                return Err(Error::config("domains.name", format!("duplicate domain `{}`", d.name)));
            }
            if d.reviews == 0 {
                return Err(Error::config("domains.reviews", format!("domain `{}` has no reviews", d.name)));
            }
        }
        if self.targets_per_domain == 0 {
            return Err(Error::config("targets_per_domain", "must be at least 1"));
        }
        if self.sentiment_words == 0 {
            return Err(Error::config("sentiment_words", "must be at least 1"));
        }
        if self.min_opinions == 0 || self.min_opinions > self.max_opinions {
            return Err(Error::config("min_opinions", "need 1 <= min_opinions <= max_opinions"));
        }
        if !(0.0..=1.0).contains(&self.stacked_rate) {
            return Err(Error::config("stacked_rate", "must lie in [0, 1]"));
        }
        if self.mood_weights.iter().any(|w| !(w.is_finite() && *w >= 0.0))
            || self.mood_weights.iter().sum::<f64>() <= 0.0
        {
            return Err(Error::config("mood_weights", "must be non-negative with a positive sum"));
        }
        Ok(())
    }
}

/// `clamp(3 + round(2 (pos - neg) / (pos + neg + 1)), 1, 5)`, rounding
/// halves away from zero.
pub fn default_rating_rule(pos: usize, neg: usize) -> Stars {
    let score = 2.0 * (pos as f64 - neg as f64) / (pos + neg + 1) as f64;
    let stars = (3.0 + score.round()).clamp(1.0, 5.0);
    Stars::new(stars as u8).expect("clamped into range")
}

const OPINION_TEMPLATES: [&str; 6] = [
    "the {t} was {s}",
    "{s} {t}",
    "the {t} is really {s}",
    "i thought the {t} looked {s}",
    "a {s} {t}",
    "their {t} felt {s}",
];

const NEUTRAL_TEMPLATES: [&str; 4] = [
    "we got the {t} on {d}",
    "the {t} came with a {u}",
    "i had the {t} there",
    "my friend tried the {t}",
];

const DAYS: [&str; 7] = [
    "monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday",
];

/// Clause connectors; each one is a segment boundary.
const JOINERS: [&str; 6] = [", ", " and ", ". ", " but ", "; ", " so "];

/// Frame words of the templates; never drawn as targets.
const RESERVED: [&str; 17] = [
    "the", "was", "is", "really", "thought", "looked", "their", "felt", "got", "came", "with", "had",
    "there", "friend", "tried", "found", "seemed",
];

fn is_plain(w: &str, min: usize, max: usize) -> bool {
    (min..=max).contains(&w.len()) && w.bytes().all(|b| b.is_ascii_lowercase())
}

fn dictionary_words(tag: &str) -> Vec<&'static str> {
    let mut words: Vec<&str> = BUNDLED_DICTIONARY
        .lines()
        .filter(|l| !l.starts_with('#'))
        .filter_map(|l| l.split_once(' '))
        .filter(|(_, t)| *t == tag)
        .map(|(w, _)| w)
        .collect();
    words.sort_unstable();
    words.dedup();
    words
}

struct Vocabulary {
    targets: Vec<Vec<&'static str>>,
    positive: Vec<&'static str>,
    negative: Vec<&'static str>,
}

fn draw_vocabulary(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Result<Vocabulary> {
    let lexicon = SentimentLexicon::shared();
    let mut nouns: Vec<&str> = dictionary_words("NN")
        .into_iter()
        .filter(|w| is_plain(w, 4, 9) && !lexicon.is_sentiment(w) && !RESERVED.contains(w))
        .filter(|w| !DAYS.contains(w))
        .collect();
    let needed = spec.targets_per_domain * spec.domains.len();
    if nouns.len() < needed {
        return Err(Error::config(
            "targets_per_domain",
            format!("needs {needed} distinct nouns, only {} available", nouns.len()),
        ));
    }
    nouns.shuffle(rng);
    let targets = nouns[..needed]
        .chunks(spec.targets_per_domain)
        .map(<[&str]>::to_vec)
        .collect();

    let adjectives = dictionary_words("JJ");
    let mut pools = Vec::new();
    for polarity in [crate::lexicon::Polarity::Positive, crate::lexicon::Polarity::Negative] {
        let mut pool: Vec<&str> = adjectives
            .iter()
            .copied()
            .filter(|w| is_plain(w, 3, 10) && lexicon.polarity(w) == Some(polarity))
            .collect();
        if pool.len() < spec.sentiment_words {
            return Err(Error::config(
                "sentiment_words",
                format!("only {} {} adjectives available", pool.len(), polarity.as_str()),
            ));
        }
        pool.shuffle(rng);
        pool.truncate(spec.sentiment_words);
        pools.push(pool);
    }
    let negative = pools.pop().expect("two pools");
    let positive = pools.pop().expect("two pools");
    Ok(Vocabulary {
        targets,
        positive,
        negative,
    })
}

fn pick<'a>(rng: &mut ChaCha8Rng, items: &[&'a str]) -> &'a str {
    items[rng.random_range(0..items.len())]
}

fn render(template: &str, s: &str, t: &str, u: &str, d: &str) -> String {
    template
        .replace("{s}", s)
        .replace("{t}", t)
        .replace("{u}", u)
        .replace("{d}", d)
}

fn capitalize_sentences(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut upper = true;
    for c in text.chars() {
        if upper && c.is_alphabetic() {
            out.extend(c.to_uppercase());
            upper = false;
        } else {
            out.push(c);
        }
        if c == '.' {
            upper = true;
        }
    }
    out
}

fn mood(rng: &mut ChaCha8Rng, weights: &[f64; 5]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if x < *w {
            return i;
        }
        x -= w;
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(4)
}

fn generate_review(
    spec: &SynthSpec,
    vocab: &Vocabulary,
    targets: &[&str],
    rng: &mut ChaCha8Rng,
) -> (String, Stars) {
    let p_positive = MOOD_POSITIVE_RATE[mood(rng, &spec.mood_weights)];
    let opinions = rng.random_range(spec.min_opinions..=spec.max_opinions);
    let neutral = rng.random_range(0..=spec.max_neutral);
    let (mut pos, mut neg) = (0, 0);
    let mut clauses = Vec::with_capacity(opinions + neutral);
    for _ in 0..opinions {
        let positive = rng.random::<f64>() < p_positive;
        let pool = if positive { &vocab.positive } else { &vocab.negative };
        let mut s = pick(rng, pool).to_string();
        let mut planted = 1;
        if rng.random::<f64>() < spec.stacked_rate {
            s = format!("{} {s}", pick(rng, pool));
            planted += 1;
        }
        if positive {
            pos += planted;
        } else {
            neg += planted;
        }
        let template = OPINION_TEMPLATES[rng.random_range(0..OPINION_TEMPLATES.len())];
        clauses.push(render(template, &s, pick(rng, targets), "", ""));
    }
    for _ in 0..neutral {
        let template = NEUTRAL_TEMPLATES[rng.random_range(0..NEUTRAL_TEMPLATES.len())];
        let clause = render(template, "", pick(rng, targets), pick(rng, targets), pick(rng, &DAYS));
        let at = rng.random_range(0..=clauses.len());
        clauses.insert(at, clause);
    }
    let mut text = String::new();
    for (i, c) in clauses.iter().enumerate() {
        if i > 0 {
            text.push_str(JOINERS[rng.random_range(0..JOINERS.len())]);
        }
        text.push_str(c);
    }
    text.push('.');
    (capitalize_sentences(&text), default_rating_rule(pos, neg))
}

/// Generates the corpus described by `spec`. Equal seeds give identical
/// corpora.
pub fn synth_corpus(spec: &SynthSpec, seed: u64) -> Result<ReviewSet> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, "vocabulary"));
    let vocab = draw_vocabulary(spec, &mut rng)?;
    let mut reviews = Vec::new();
    for (d, domain) in spec.domains.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, &domain.name));
        for i in 0..domain.reviews {
            let (text, stars) = generate_review(spec, &vocab, &vocab.targets[d], &mut rng);
            reviews.push(Review {
                id: format!("{}-{:05}", domain.name, i + 1),
                text,
                stars,
                domain: domain.name.clone(),
                source: "synthetic".into(),
            });
        }
    }
    ReviewSet::new(reviews)
}
