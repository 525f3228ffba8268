//! Averaged-perceptron part-of-speech tagger.
//!
//! The tagger predicts Penn Treebank tags and collapses them to the coarse
//! [`Pos`] classes through a map stored in the model. Besides the usual
//! word, affix and tag-history features it consults a tag dictionary (word
//! to most frequent tag). Words missing from the dictionary get a guess from
//! suffix and shape rules, so unseen words still land in a sensible class.
//!
//! # Model file
//!
//! UTF-8 text, tab-separated fields:
//!
//! ```text
//! RRPTAGGER<TAB>1
//! classes<TAB><n>
//! <fine tag><TAB><coarse class>          (n lines)
//! dictionary<TAB><n>
//! <word><TAB><fine tag>                  (n lines)
//! weights<TAB><n>
//! <feature><TAB><tag>=<w><TAB><tag>=<w>…  (n lines)
//! ```
//!
//! The first line is the magic string and the format version. Weights are
//! written in shortest round-trip form so save/load is exact.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::tokenize::{Pos, Token};
use crate::error::{Error, Result};

const MAGIC: &str = "RRPTAGGER";
const VERSION: u32 = 1;

const BUNDLED_MODEL: &str = include_str!("../../data/tagger/tagger.model");
/// Hand-tagged training sentences shipped with the crate.
pub const BUNDLED_TRAINING: &str = include_str!("../../data/tagger/train.txt");
/// Word to most-frequent-tag dictionary shipped with the crate.
pub const BUNDLED_DICTIONARY: &str = include_str!("../../data/tagger/brill-lexicon.txt");

/// Anything that can assign one coarse tag per word.
pub trait Tagger: Send + Sync {
    fn tag(&self, words: &[&str]) -> Vec<Pos>;
}

/// Assigns `pos` to every token.
pub fn pos_tag(tokens: &mut [Token], tagger: &dyn Tagger) {
    let words: Vec<&str> = tokens.iter().map(|t| t.surface.as_str()).collect();
    let tags = tagger.tag(&words);
    debug_assert_eq!(tags.len(), tokens.len());
    for (t, p) in tokens.iter_mut().zip(tags) {
        t.pos = Some(p);
    }
}

/// Penn Treebank tag to coarse class.
pub fn default_collapse(tag: &str) -> Pos {
    match tag {
        "NN" | "NNS" | "NNP" | "NNPS" => Pos::Noun,
        "VB" | "VBD" | "VBG" | "VBN" | "VBP" | "VBZ" | "MD" => Pos::Verb,
        "JJ" | "JJR" | "JJS" => Pos::Adjective,
        "RB" | "RBR" | "RBS" | "WRB" => Pos::Adverb,
        "CC" => Pos::Conjunction,
        "," | "." | ":" | "(" | ")" | "``" | "''" | "#" | "$" | "SYM" => Pos::Punctuation,
        _ => Pos::Other,
    }
}

fn punctuation_tag(word: &str) -> Option<&'static str> {
    if word.is_empty() || word.chars().any(char::is_alphanumeric) {
        return None;
    }
    Some(match word {
        "," => ",",
        "." | "!" | "?" => ".",
        ":" | ";" | "-" | "--" | "\u{2013}" | "\u{2014}" => ":",
        "(" | "[" | "{" => "(",
        ")" | "]" | "}" => ")",
        "\"" | "'" | "\u{2019}" | "\u{201d}" => "''",
        "`" | "\u{2018}" | "\u{201c}" => "``",
        "#" => "#",
        "$" => "$",
        _ => "SYM",
    })
}

fn is_number(word: &str) -> bool {
    word.chars().any(|c| c.is_ascii_digit())
        && word
            .chars()
            .all(|c| c.is_ascii_digit() || matches!(c, '.' | ',' | '-' | '/'))
}

/// Deterministic guess for words absent from the dictionary.
pub fn guess_tag(word: &str) -> &'static str {
    if let Some(t) = punctuation_tag(word) {
        return t;
    }
    if is_number(word) {
        return "CD";
    }
    let lower = word.to_lowercase();
    let ends = |s: &str| lower.len() > s.len() + 2 && lower.ends_with(s);
    if ends("ly") {
        "RB"
    } else if ends("ing") {
        "VBG"
    } else if ends("ed") {
        "VBN"
    } else if ["ous", "ful", "able", "ible", "ive", "less", "ish", "ic", "al", "ary"]
        .iter()
        .any(|s| ends(s))
    {
        "JJ"
    } else if ends("est") {
        "JJS"
    } else if ["ize", "ise", "ify"].iter().any(|s| ends(s)) {
        "VB"
    } else if ends("s") && !ends("ss") && !ends("us") {
        "NNS"
    } else if word.chars().next().is_some_and(char::is_uppercase) {
        "NNP"
    } else {
        "NN"
    }
}

/// Tag dictionary keyed by surface form, with a lowercase fallback.
#[derive(Debug, Clone, Default)]
pub struct TagDictionary {
    entries: HashMap<String, String>,
}

impl TagDictionary {
    /// Parses `word tag` lines; `;` lines are comments.
    pub fn parse(text: &str) -> Result<TagDictionary> {
        let mut entries = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with(';') {
                continue;
            }
            let mut it = line.split_whitespace();
            match (it.next(), it.next(), it.next()) {
                (Some(w), Some(t), None) => {
                    entries.entry(w.to_string()).or_insert_with(|| t.to_string());
                }
                _ => {
                    return Err(Error::TaggerModel(format!(
                        "dictionary line {}: expected `word tag`",
                        i + 1
                    )))
                }
            }
        }
        Ok(TagDictionary { entries })
    }

    pub fn get(&self, word: &str) -> Option<&str> {
        if let Some(t) = self.entries.get(word) {
            return Some(t);
        }
        let lower = word.to_lowercase();
        self.entries.get(&lower).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn suffix(word: &str, n: usize) -> &str {
    let start = word
        .char_indices()
        .rev()
        .nth(n - 1)
        .map_or(0, |(i, _)| i);
    &word[start..]
}

fn prefix1(word: &str) -> &str {
    word.chars().next().map_or("", |c| &word[..c.len_utf8()])
}

fn shape(word: &str) -> &'static str {
    if word.chars().all(|c| !c.is_alphanumeric()) {
        "punct"
    } else if is_number(word) {
        "num"
    } else if word.contains('-') {
        "hyphen"
    } else if word.chars().all(char::is_uppercase) && word.chars().count() > 1 {
        "upper"
    } else if word.chars().next().is_some_and(char::is_uppercase) {
        "title"
    } else {
        "lower"
    }
}

/// Per-sentence context shared by training and inference.
struct Context<'a> {
    lowered: Vec<String>,
    dict_tags: Vec<String>,
    words: &'a [&'a str],
}

impl<'a> Context<'a> {
    fn new(words: &'a [&'a str], dict: &TagDictionary) -> Context<'a> {
        let lowered = words.iter().map(|w| w.to_lowercase()).collect();
        let dict_tags = words
            .iter()
            .map(|w| match punctuation_tag(w) {
                Some(t) => t.to_string(),
                None => match dict.get(w) {
                    Some(t) => t.to_string(),
                    None => format!("?{}", guess_tag(w)),
                },
            })
            .collect();
        Context {
            lowered,
            dict_tags,
            words,
        }
    }

    fn word(&self, i: isize) -> &str {
        if i < 0 {
            "-START-"
        } else {
            self.lowered.get(i as usize).map_or("-END-", String::as_str)
        }
    }

    fn dict(&self, i: isize) -> &str {
        if i < 0 {
            "-START-"
        } else {
            self.dict_tags.get(i as usize).map_or("-END-", String::as_str)
        }
    }

    fn features(&self, i: usize, prev: &str, prev2: &str) -> Vec<String> {
        let ii = i as isize;
        let w = self.word(ii);
        let mut f = Vec::with_capacity(20);
        f.push("bias".to_string());
        f.push(format!("w {w}"));
        f.push(format!("suf3 {}", suffix(w, 3)));
        f.push(format!("suf2 {}", suffix(w, 2)));
        f.push(format!("pre1 {}", prefix1(w)));
        f.push(format!("shape {}", shape(self.words[i])));
        f.push(format!("d {}", self.dict(ii)));
        f.push(format!("d-1 {}", self.dict(ii - 1)));
        f.push(format!("d+1 {}", self.dict(ii + 1)));
        f.push(format!("d {} d+1 {}", self.dict(ii), self.dict(ii + 1)));
        f.push(format!("t-1 {prev}"));
        f.push(format!("t-2 {prev2}"));
        f.push(format!("t-1 {prev} t-2 {prev2}"));
        f.push(format!("t-1 {prev} d {}", self.dict(ii)));
        f.push(format!("t-1 {prev} w {w}"));
        f.push(format!("w-1 {}", self.word(ii - 1)));
        f.push(format!("suf3-1 {}", suffix(self.word(ii - 1), 3)));
        f.push(format!("w-2 {}", self.word(ii - 2)));
        f.push(format!("w+1 {}", self.word(ii + 1)));
        f.push(format!("suf3+1 {}", suffix(self.word(ii + 1), 3)));
        f.push(format!("w+2 {}", self.word(ii + 2)));
        f
    }
}

/// A trained averaged-perceptron tagger. Immutable after construction.
#[derive(Debug, Clone)]
pub struct PerceptronTagger {
    classes: Vec<String>,
    collapse: Vec<Pos>,
    dictionary: TagDictionary,
    dict_source: BTreeMap<String, String>,
    weights: HashMap<String, Vec<(u16, f64)>>,
}

impl PerceptronTagger {
    /// The model file shipped with the crate, parsed once per process.
    pub fn shared() -> &'static PerceptronTagger {
        static MODEL: OnceLock<PerceptronTagger> = OnceLock::new();
        MODEL.get_or_init(|| {
            PerceptronTagger::from_model_str(BUNDLED_MODEL).expect("bundled tagger model is valid")
        })
    }

    pub fn bundled() -> PerceptronTagger {
        PerceptronTagger::shared().clone()
    }

    pub fn load(path: &Path) -> Result<PerceptronTagger> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        PerceptronTagger::from_model_str(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_model_string()).map_err(|e| Error::io(path, e))
    }

    fn class_index(&self, tag: &str) -> Option<u16> {
        self.classes.iter().position(|c| c == tag).map(|i| i as u16)
    }

    /// Fine-grained Penn tags for a sentence.
    pub fn tag_fine(&self, words: &[&str]) -> Vec<String> {
        let ctx = Context::new(words, &self.dictionary);
        let mut out: Vec<String> = Vec::with_capacity(words.len());
        let mut scores = vec![0.0f64; self.classes.len()];
        for i in 0..words.len() {
            let tag = if let Some(t) = punctuation_tag(words[i]) {
                t.to_string()
            } else {
                let prev = if i >= 1 { out[i - 1].as_str() } else { "-START-" };
                let prev2 = if i >= 2 { out[i - 2].as_str() } else { "-START2-" };
                scores.iter_mut().for_each(|s| *s = 0.0);
                for f in ctx.features(i, prev, prev2) {
                    if let Some(ws) = self.weights.get(&f) {
                        for &(c, w) in ws {
                            scores[c as usize] += w;
                        }
                    }
                }
                let best = argmax(&scores);
                self.classes[best].clone()
            };
            out.push(tag);
        }
        out
    }

    pub fn to_model_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{MAGIC}\t{VERSION}");
        let _ = writeln!(s, "classes\t{}", self.classes.len());
        for (c, p) in self.classes.iter().zip(&self.collapse) {
            let _ = writeln!(s, "{c}\t{}", p.as_str());
        }
        let _ = writeln!(s, "dictionary\t{}", self.dict_source.len());
        for (w, t) in &self.dict_source {
            let _ = writeln!(s, "{w}\t{t}");
        }
        let mut feats: Vec<(&String, &Vec<(u16, f64)>)> = self.weights.iter().collect();
        feats.sort_by(|a, b| a.0.cmp(b.0));
        let _ = writeln!(s, "weights\t{}", feats.len());
        for (f, ws) in feats {
            s.push_str(f);
            for &(c, w) in ws {
                let _ = write!(s, "\t{}={w}", self.classes[c as usize]);
            }
            s.push('\n');
        }
        s
    }

    pub fn from_model_str(text: &str) -> Result<PerceptronTagger> {
        let bad = |m: String| Error::TaggerModel(m);
        let mut lines = text.lines().enumerate();
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::TaggerModel(format!("truncated before {what}")))
        };
        let (_, header) = next("header")?;
        let (magic, version) = header
            .split_once('\t')
            .ok_or_else(|| bad("missing magic header".into()))?;
        if magic != MAGIC {
            return Err(bad(format!("bad magic `{magic}`")));
        }
        if version.parse::<u32>().ok() != Some(VERSION) {
            return Err(bad(format!("unsupported version `{version}`")));
        }

        let section = |line: (usize, &str), name: &str| -> Result<usize> {
            let (i, l) = line;
            match l.split_once('\t') {
                Some((n, c)) if n == name => c
                    .parse()
                    .map_err(|_| Error::TaggerModel(format!("line {}: bad count", i + 1))),
                _ => Err(Error::TaggerModel(format!(
                    "line {}: expected section `{name}`",
                    i + 1
                ))),
            }
        };

        let n = section(next("classes")?, "classes")?;
        let mut classes = Vec::with_capacity(n);
        let mut collapse = Vec::with_capacity(n);
        for _ in 0..n {
            let (i, l) = next("class entry")?;
            let (tag, coarse) = l
                .split_once('\t')
                .ok_or_else(|| bad(format!("line {}: bad class entry", i + 1)))?;
            let pos = Pos::parse(coarse)
                .ok_or_else(|| bad(format!("line {}: unknown class `{coarse}`", i + 1)))?;
            classes.push(tag.to_string());
            collapse.push(pos);
        }
        if classes.is_empty() || classes.len() > u16::MAX as usize {
            return Err(bad("class count out of range".into()));
        }

        let n = section(next("dictionary")?, "dictionary")?;
        let mut dict_source = BTreeMap::new();
        for _ in 0..n {
            let (i, l) = next("dictionary entry")?;
            let (w, t) = l
                .split_once('\t')
                .ok_or_else(|| bad(format!("line {}: bad dictionary entry", i + 1)))?;
            dict_source.insert(w.to_string(), t.to_string());
        }

        let index: HashMap<&str, u16> = classes
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i as u16))
            .collect();
        let n = section(next("weights")?, "weights")?;
        let mut weights = HashMap::with_capacity(n);
        for _ in 0..n {
            let (i, l) = next("weight entry")?;
            let mut parts = l.split('\t');
            let feat = parts.next().unwrap_or_default().to_string();
            let mut ws = Vec::new();
            for p in parts {
                let (tag, w) = p
                    .rsplit_once('=')
                    .ok_or_else(|| bad(format!("line {}: bad weight `{p}`", i + 1)))?;
                let c = *index
                    .get(tag)
                    .ok_or_else(|| bad(format!("line {}: unknown tag `{tag}`", i + 1)))?;
                let w: f64 = w
                    .parse()
                    .map_err(|_| bad(format!("line {}: bad weight `{p}`", i + 1)))?;
                if !w.is_finite() {
                    return Err(bad(format!("line {}: non-finite weight", i + 1)));
                }
                ws.push((c, w));
            }
            weights.insert(feat, ws);
        }

        let dictionary = TagDictionary {
            entries: dict_source.iter().map(|(a, b)| (a.clone(), b.clone())).collect(),
        };
        Ok(PerceptronTagger {
            classes,
            collapse,
            dictionary,
            dict_source,
            weights,
        })
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn collapse(&self, tag: &str) -> Pos {
        match self.class_index(tag) {
            Some(i) => self.collapse[i as usize],
            None => default_collapse(tag),
        }
    }
}

impl Tagger for PerceptronTagger {
    fn tag(&self, words: &[&str]) -> Vec<Pos> {
        self.tag_fine(words)
            .iter()
            .map(|t| self.collapse(t))
            .collect()
    }
}

fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// One training sentence: `(word, fine tag)` pairs.
pub type TaggedSentence = Vec<(String, String)>;

/// Parses `word/TAG word/TAG …` lines. Lines starting with `#` are comments.
pub fn parse_tagged_corpus(text: &str) -> Result<Vec<TaggedSentence>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut sent = Vec::new();
        for item in line.split_whitespace() {
            let (w, t) = item.rsplit_once('/').ok_or_else(|| {
                Error::TaggerModel(format!("corpus line {}: `{item}` lacks /TAG", i + 1))
            })?;
            if w.is_empty() || t.is_empty() {
                return Err(Error::TaggerModel(format!(
                    "corpus line {}: bad item `{item}`",
                    i + 1
                )));
            }
            sent.push((w.to_string(), t.to_string()));
        }
        out.push(sent);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct TaggerTrainConfig {
    pub iterations: usize,
    pub seed: u64,
}

impl Default for TaggerTrainConfig {
    fn default() -> Self {
        TaggerTrainConfig {
            iterations: 8,
            seed: 1,
        }
    }
}

#[derive(Default)]
struct Accum {
    weight: f64,
    total: f64,
    stamp: u64,
}

/// Trains a tagger. Deterministic for a fixed corpus, dictionary and seed.
pub fn train_tagger(
    sentences: &[TaggedSentence],
    dictionary_text: &str,
    config: &TaggerTrainConfig,
) -> Result<PerceptronTagger> {
    let dictionary = TagDictionary::parse(dictionary_text)?;
    let mut tagset: std::collections::BTreeSet<String> = sentences
        .iter()
        .flat_map(|s| s.iter().map(|(_, t)| t.clone()))
        .collect();
    tagset.extend(dictionary.entries.values().cloned());
    let classes: Vec<String> = tagset.into_iter().collect();
    if classes.is_empty() {
        return Err(Error::TaggerModel("empty training corpus".into()));
    }
    let index: HashMap<&str, usize> = classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();

    let mut acc: HashMap<String, Vec<Accum>> = HashMap::new();
    let mut step: u64 = 0;
    let mut order: Vec<usize> = (0..sentences.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut scores = vec![0.0f64; classes.len()];

    for _ in 0..config.iterations {
        for &si in &order {
            let sent = &sentences[si];
            let words: Vec<&str> = sent.iter().map(|(w, _)| w.as_str()).collect();
            let ctx = Context::new(&words, &dictionary);
            let mut prev = "-START-".to_string();
            let mut prev2 = "-START2-".to_string();
            for (i, (_, gold)) in sent.iter().enumerate() {
                step += 1;
                let feats = ctx.features(i, &prev, &prev2);
                scores.iter_mut().for_each(|s| *s = 0.0);
                for f in &feats {
                    if let Some(ws) = acc.get(f) {
                        for (c, a) in ws.iter().enumerate() {
                            scores[c] += a.weight;
                        }
                    }
                }
                let guess = argmax(&scores);
                let truth = index[gold.as_str()];
                if guess != truth {
                    for f in &feats {
                        let ws = acc
                            .entry(f.clone())
                            .or_insert_with(|| (0..classes.len()).map(|_| Accum::default()).collect());
                        for (c, delta) in [(truth, 1.0), (guess, -1.0)] {
                            let a = &mut ws[c];
                            a.total += (step - a.stamp) as f64 * a.weight;
                            a.stamp = step;
                            a.weight += delta;
                        }
                    }
                }
                // Teacher forcing on the tag history.
                prev2 = std::mem::replace(&mut prev, gold.clone());
            }
        }
        order.shuffle(&mut rng);
    }

    let mut weights = HashMap::new();
    for (f, ws) in acc {
        let mut sparse = Vec::new();
        for (c, a) in ws.iter().enumerate() {
            let total = a.total + (step - a.stamp) as f64 * a.weight;
            let avg = total / step as f64;
            if avg != 0.0 {
                sparse.push((c as u16, avg));
            }
        }
        if !sparse.is_empty() {
            weights.insert(f, sparse);
        }
    }
    let collapse = classes.iter().map(|c| default_collapse(c)).collect();
    let dict_source = dictionary
        .entries
        .iter()
        .map(|(a, b)| (a.clone(), b.clone()))
        .collect();
    Ok(PerceptronTagger {
        classes,
        collapse,
        dictionary,
        dict_source,
        weights,
    })
}

/// Trains a tagger from the corpus and dictionary shipped with the crate.
pub fn train_bundled(config: &TaggerTrainConfig) -> Result<PerceptronTagger> {
    let sentences = parse_tagged_corpus(BUNDLED_TRAINING)?;
    train_tagger(&sentences, BUNDLED_DICTIONARY, config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coarse(words: &[&str]) -> Vec<Pos> {
        PerceptronTagger::bundled().tag(words)
    }

    #[test]
    fn tags_fixture_phrases() {
        assert_eq!(coarse(&["good", "food"]), [Pos::Adjective, Pos::Noun]);
        assert_eq!(coarse(&[","]), [Pos::Punctuation]);
        let t = coarse(&["I", "recommend", "it"]);
        assert_eq!(t[1], Pos::Verb);
        let t = coarse(&["we", "loved", "the", "service"]);
        assert_eq!(t[1], Pos::Verb);
        assert_eq!(t[3], Pos::Noun);
        let t = coarse(&["The", "food", "was", "excellent"]);
        assert_eq!(t, [Pos::Other, Pos::Noun, Pos::Verb, Pos::Adjective]);
    }

    #[test]
    fn tagging_is_deterministic() {
        let tagger = PerceptronTagger::bundled();
        let words = ["the", "staff", "was", "friendly", "and", "the", "room", "clean"];
        assert_eq!(tagger.tag(&words), tagger.tag(&words));
    }

    #[test]
    fn unknown_words_fall_back_to_guesses() {
        assert_eq!(guess_tag("blorpingly"), "RB");
        assert_eq!(guess_tag("zorbed"), "VBN");
        assert_eq!(guess_tag("flumoxes"), "NNS");
        assert_eq!(guess_tag("42"), "CD");
        assert_eq!(guess_tag("Zanzibarx"), "NNP");
        assert_eq!(guess_tag("glorp"), "NN");
        assert_eq!(guess_tag("!"), ".");
    }

    #[test]
    fn model_round_trip_is_exact() {
        let tagger = PerceptronTagger::bundled();
        let text = tagger.to_model_string();
        let again = PerceptronTagger::from_model_str(&text).unwrap();
        assert_eq!(again.to_model_string(), text);
    }

    #[test]
    fn bundled_model_matches_retraining() {
        let retrained = train_bundled(&TaggerTrainConfig::default()).unwrap();
        assert!(
            retrained.to_model_string() == BUNDLED_MODEL,
            "data/tagger/tagger.model is stale; regenerate with `review-rating train-tagger`"
        );
    }

    #[test]
    fn corrupt_models_rejected() {
        for bad in [
            "",
            "NOTATAGGER\t1\n",
            "RRPTAGGER\t9\n",
            "RRPTAGGER\t1\nclasses\t1\nNN\tnoun\ndictionary\t0\nweights\t1\nbias\tXX=1\n",
            "RRPTAGGER\t1\nclasses\t1\nNN\tnoun\ndictionary\t0\nweights\t1\nbias\tNN=abc\n",
            "RRPTAGGER\t1\nclasses\t2\nNN\tnoun\n",
        ] {
            assert!(
                matches!(PerceptronTagger::from_model_str(bad), Err(Error::TaggerModel(_))),
                "accepted {bad:?}"
            );
        }
        assert!(matches!(
            PerceptronTagger::load(Path::new("/nonexistent/model")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn bundled_corpus_parses() {
        let sents = parse_tagged_corpus(BUNDLED_TRAINING).unwrap();
        assert!(sents.len() >= 100);
        assert!(parse_tagged_corpus("good").is_err());
    }

    #[test]
    fn training_fits_its_corpus() {
        let sents = parse_tagged_corpus(BUNDLED_TRAINING).unwrap();
        let tagger = PerceptronTagger::bundled();
        let (mut right, mut total) = (0, 0);
        for s in &sents {
            let words: Vec<&str> = s.iter().map(|(w, _)| w.as_str()).collect();
            for (pred, (_, gold)) in tagger.tag_fine(&words).iter().zip(s) {
                right += usize::from(pred == gold);
                total += 1;
            }
        }
        assert!(right as f64 / total as f64 > 0.97, "{right}/{total}");
    }
}
