//! Skip-gram with negative sampling.
//!
//! Two modes share one update kernel. Single-threaded training is
//! bit-reproducible for a given seed. Parallel training lets workers update
//! shared rows without locks (relaxed atomics), so results depend on thread
//! scheduling.

use std::cell::Cell;
use std::collections::HashMap;
use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EmbeddingModel;
use crate::corpus::ReviewSet;
use crate::error::{Error, Result};
use crate::textproc::tokenize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Word2VecConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub min_count: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Frequent-word subsampling threshold; `None` disables it.
    pub subsample: Option<f64>,
    pub seed: u64,
    /// Worker threads. `1` selects the deterministic mode.
    pub threads: usize,
}

impl Default for Word2VecConfig {
    fn default() -> Self {
        Word2VecConfig {
            dim: 100,
            window: 5,
            negatives: 5,
            min_count: 5,
            epochs: 5,
            learning_rate: 0.025,
            subsample: None,
            seed: 1,
            threads: 1,
        }
    }
}

impl Word2VecConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, key: &str, reason: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::config(key, reason))
            }
        };
        check(self.dim >= 1, "dim", "must be at least 1")?;
        check(self.window >= 1, "window", "must be at least 1")?;
        check(self.negatives >= 1, "negatives", "must be at least 1")?;
        check(self.epochs >= 1, "epochs", "must be at least 1")?;
        check(self.min_count >= 1, "min_count", "must be at least 1")?;
        check(self.threads >= 1, "threads", "must be at least 1")?;
        check(
            self.learning_rate > 0.0 && self.learning_rate.is_finite(),
            "learning_rate",
            "must be positive",
        )?;
        if let Some(t) = self.subsample {
            check(t > 0.0 && t.is_finite(), "subsample", "must be positive")?;
        }
        Ok(())
    }
}

/// Lowercased, punctuation-free token stream of a text.
pub fn training_tokens(text: &str) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .filter(|t| !t.is_punctuation())
        .map(|t| t.norm)
        .collect()
}

pub fn train_word2vec(corpus: &ReviewSet, config: &Word2VecConfig) -> Result<EmbeddingModel> {
    if corpus.is_empty() {
        return Err(Error::InvalidInput("empty training corpus".into()));
    }
    let sentences: Vec<Vec<String>> = corpus.iter().map(|r| training_tokens(&r.text)).collect();
    train_on_sentences(&sentences, config)
}

/// Shared access to a weight matrix.
trait Store {
    fn get(&self, i: usize) -> f32;
    fn set(&self, i: usize, v: f32);
}

struct Local<'a>(&'a [Cell<f32>]);

impl Store for Local<'_> {
    #[inline]
    fn get(&self, i: usize) -> f32 {
        self.0[i].get()
    }
    #[inline]
    fn set(&self, i: usize, v: f32) {
        self.0[i].set(v)
    }
}

struct Shared<'a>(&'a [AtomicU32]);

impl Store for Shared<'_> {
    #[inline]
    fn get(&self, i: usize) -> f32 {
        f32::from_bits(self.0[i].load(Ordering::Relaxed))
    }
    #[inline]
    fn set(&self, i: usize, v: f32) {
        self.0[i].store(v.to_bits(), Ordering::Relaxed)
    }
}

struct Vocab {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
}

fn build_vocab(sentences: &[Vec<String>], min_count: usize) -> Vocab {
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for s in sentences {
        for w in s {
            *counts.entry(w.as_str()).or_insert(0) += 1;
        }
    }
    let mut kept: Vec<(&str, u64)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_count as u64)
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let words: Vec<String> = kept.iter().map(|(w, _)| w.to_string()).collect();
    let counts = kept.iter().map(|&(_, c)| c).collect();
    let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
    Vocab {
        words,
        counts,
        index,
    }
}

/// Cumulative unigram^0.75 distribution for negative draws.
struct NoiseTable {
    cumulative: Vec<f64>,
}

impl NoiseTable {
    fn new(counts: &[u64]) -> NoiseTable {
        let mut acc = 0.0;
        let cumulative = counts
            .iter()
            .map(|&c| {
                acc += (c as f64).powf(0.75);
                acc
            })
            .collect();
        NoiseTable { cumulative }
    }

    fn sample(&self, rng: &mut impl Rng) -> usize {
        let total = *self.cumulative.last().expect("non-empty vocabulary");
        let x = rng.random::<f64>() * total;
        self.cumulative
            .partition_point(|&c| c <= x)
            .min(self.cumulative.len() - 1)
    }
}

struct Job<'a> {
    config: &'a Word2VecConfig,
    noise: &'a NoiseTable,
    keep_prob: Option<Vec<f64>>,
    total_words: u64,
    processed: &'a AtomicU64,
}

fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

/// One training pass over `sentences`.
fn run_epoch<S: Store>(
    job: &Job<'_>,
    sentences: &[Vec<usize>],
    input: &S,
    output: &S,
    rng: &mut ChaCha8Rng,
) {
    let dim = job.config.dim;
    let lr0 = job.config.learning_rate;
    let budget = (job.config.epochs as u64 * job.total_words + 1) as f64;
    let mut grad = vec![0.0f32; dim];
    let mut kept: Vec<usize> = Vec::new();

    for sentence in sentences {
        let done = job.processed.fetch_add(sentence.len() as u64, Ordering::Relaxed);
        let lr = (lr0 * (1.0 - done as f64 / budget)).max(lr0 * 1e-4) as f32;

        kept.clear();
        match &job.keep_prob {
            Some(p) => kept.extend(sentence.iter().copied().filter(|&w| rng.random::<f64>() < p[w])),
            None => kept.extend_from_slice(sentence),
        }

        for (pos, &center) in kept.iter().enumerate() {
            let reach = job.config.window - rng.random_range(0..job.config.window);
            let lo = pos.saturating_sub(reach);
            let hi = (pos + reach).min(kept.len() - 1);
            for ctx_pos in lo..=hi {
                if ctx_pos == pos {
                    continue;
                }
                let context = kept[ctx_pos];
                let in_row = center * dim;
                grad.iter_mut().for_each(|g| *g = 0.0);
                for k in 0..=job.config.negatives {
                    let (target, label) = if k == 0 {
                        (context, 1.0f32)
                    } else {
                        let t = job.noise.sample(rng);
                        if t == context {
                            continue;
                        }
                        (t, 0.0)
                    };
                    let out_row = target * dim;
                    let mut dot = 0.0f32;
                    for d in 0..dim {
                        dot += input.get(in_row + d) * output.get(out_row + d);
                    }
                    let g = (label - sigmoid(dot)) * lr;
                    for d in 0..dim {
                        let o = output.get(out_row + d);
                        grad[d] += g * o;
                        output.set(out_row + d, o + g * input.get(in_row + d));
                    }
                }
                for d in 0..dim {
                    input.set(in_row + d, input.get(in_row + d) + grad[d]);
                }
            }
        }
    }
}

/// Tokens scored when measuring the objective after each epoch.
const OBJECTIVE_SAMPLE_TOKENS: usize = 20_000;

/// Mean negative-sampling loss per (center, context) pair over a fixed
/// sample with frozen weights. The sample, windows and negative draws are
/// identical in every call, so values are comparable across epochs.
fn objective<S: Store>(job: &Job<'_>, sample: &[Vec<usize>], input: &S, output: &S) -> f64 {
    let dim = job.config.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(job.config.seed ^ 0x6f62_6a65_6374_6976);
    let mut loss = 0.0f64;
    let mut pairs = 0u64;
    for sentence in sample {
        for (pos, &center) in sentence.iter().enumerate() {
            let lo = pos.saturating_sub(job.config.window);
            let hi = (pos + job.config.window).min(sentence.len() - 1);
            for (ctx_pos, &context) in sentence.iter().enumerate().take(hi + 1).skip(lo) {
                if ctx_pos == pos {
                    continue;
                }
                for k in 0..=job.config.negatives {
                    let (target, positive) = if k == 0 {
                        (context, true)
                    } else {
                        (job.noise.sample(&mut rng), false)
                    };
                    let mut dot = 0.0f32;
                    for d in 0..dim {
                        dot += input.get(center * dim + d) * output.get(target * dim + d);
                    }
                    let p = sigmoid(if positive { dot } else { -dot });
                    loss -= f64::from(p.max(1e-7)).ln();
                }
                pairs += 1;
            }
        }
    }
    loss / pairs.max(1) as f64
}

pub fn train_on_sentences(sentences: &[Vec<String>], config: &Word2VecConfig) -> Result<EmbeddingModel> {
    config.validate()?;
    let vocab = build_vocab(sentences, config.min_count);
    if vocab.words.is_empty() {
        return Err(Error::EmptyVocabulary {
            min_count: config.min_count,
        });
    }
    let encoded: Vec<Vec<usize>> = sentences
        .iter()
        .map(|s| s.iter().filter_map(|w| vocab.index.get(w).copied()).collect())
        .filter(|s: &Vec<usize>| s.len() > 1)
        .collect();
    let total_words: u64 = encoded.iter().map(|s| s.len() as u64).sum();
    let mut sample_len = 0;
    let mut sample_tokens = 0;
    while sample_len < encoded.len() && (sample_len == 0 || sample_tokens < OBJECTIVE_SAMPLE_TOKENS) {
        sample_tokens += encoded[sample_len].len();
        sample_len += 1;
    }
    let sample = &encoded[..sample_len];
    let noise = NoiseTable::new(&vocab.counts);
    let keep_prob = config.subsample.map(|t| {
        let total: u64 = vocab.counts.iter().sum();
        vocab
            .counts
            .iter()
            .map(|&c| {
                let f = c as f64 / total as f64;
                ((t / f).sqrt() + t / f).min(1.0)
            })
            .collect()
    });

    let dim = config.dim;
    let n = vocab.words.len() * dim;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut input: Vec<f32> = (0..n)
        .map(|_| (rng.random::<f32>() - 0.5) / dim as f32)
        .collect();
    let mut output = vec![0.0f32; n];
    let processed = AtomicU64::new(0);
    let job = Job {
        config,
        noise: &noise,
        keep_prob,
        total_words,
        processed: &processed,
    };
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    if config.threads == 1 {
        let inp = Local(Cell::from_mut(input.as_mut_slice()).as_slice_of_cells());
        let out = Local(Cell::from_mut(output.as_mut_slice()).as_slice_of_cells());
        for _ in 0..config.epochs {
            run_epoch(&job, &encoded, &inp, &out, &mut rng);
            epoch_losses.push(objective(&job, sample, &inp, &out));
        }
    } else {
        let to_atomic = |v: &[f32]| v.iter().map(|x| AtomicU32::new(x.to_bits())).collect::<Vec<_>>();
        let inp_a = to_atomic(&input);
        let out_a = to_atomic(&output);
        let chunk = encoded.len().div_ceil(config.threads).max(1);
        let mut worker_rngs: Vec<ChaCha8Rng> = (0..config.threads)
            .map(|w| ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1 + w as u64)))
            .collect();
        for _ in 0..config.epochs {
            std::thread::scope(|s| {
                let handles: Vec<_> = encoded
                    .chunks(chunk)
                    .zip(worker_rngs.iter_mut())
                    .map(|(part, wrng)| {
                        let (job, inp, out) = (&job, Shared(&inp_a), Shared(&out_a));
                        s.spawn(move || run_epoch(job, part, &inp, &out, wrng))
                    })
                    .collect();
                for h in handles {
                    h.join().expect("word2vec worker panicked");
                }
            });
            epoch_losses.push(objective(&job, sample, &Shared(&inp_a), &Shared(&out_a)));
        }
        input = inp_a.iter().map(|a| f32::from_bits(a.load(Ordering::Relaxed))).collect();
    }

    if input.iter().any(|x| !x.is_finite()) {
        return Err(Error::Internal("word2vec diverged to non-finite weights".into()));
    }
    Ok(EmbeddingModel {
        dim,
        index: vocab.index,
        words: vocab.words,
        vectors: input,
        train_config: Some(config.clone()),
        epoch_losses,
    })
}
