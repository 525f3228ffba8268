//! Tokenization, part-of-speech tagging and opinion segmentation.

mod tagger;
mod tokenize;

pub use tagger::{
    default_collapse, guess_tag, parse_tagged_corpus, pos_tag, train_bundled, train_tagger,
    PerceptronTagger, TagDictionary, TaggedSentence, Tagger, TaggerTrainConfig,
    BUNDLED_DICTIONARY, BUNDLED_TRAINING,
};
pub use tokenize::{
    is_delimiter, reconstruct, tokenize, Pos, Token, COORDINATING_CONJUNCTIONS,
    DELIMITER_PUNCTUATION,
};

/// A maximal run of non-delimiter tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub tokens: Vec<Token>,
}

/// Drops delimiter tokens and splits the stream at each of them. Empty runs
/// (consecutive delimiters) produce no segment.
pub fn segment(tokens: &[Token]) -> Vec<Segment> {
    tokens
        .split(|t| t.is_delimiter)
        .filter(|run| !run.is_empty())
        .map(|run| Segment {
            tokens: run.to_vec(),
        })
        .collect()
}

/// Tokenize, tag and segment in one pass.
pub fn analyze(text: &str, tagger: &dyn Tagger) -> Vec<Segment> {
    let mut tokens = tokenize(text);
    pos_tag(&mut tokens, tagger);
    segment(&tokens)
}
