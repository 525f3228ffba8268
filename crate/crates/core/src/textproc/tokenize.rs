use serde::{Deserialize, Serialize};

/// Coarse part-of-speech classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pos {
    Noun,
    Verb,
    Adjective,
    Adverb,
    Punctuation,
    Conjunction,
    Other,
}

impl Pos {
    pub fn as_str(self) -> &'static str {
        match self {
            Pos::Noun => "noun",
            Pos::Verb => "verb",
            Pos::Adjective => "adjective",
            Pos::Adverb => "adverb",
            Pos::Punctuation => "punctuation",
            Pos::Conjunction => "conjunction",
            Pos::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Option<Pos> {
        Some(match s {
            "noun" => Pos::Noun,
            "verb" => Pos::Verb,
            "adjective" => Pos::Adjective,
            "adverb" => Pos::Adverb,
            "punctuation" => Pos::Punctuation,
            "conjunction" => Pos::Conjunction,
            "other" => Pos::Other,
            _ => return None,
        })
    }
}

pub const DELIMITER_PUNCTUATION: [&str; 4] = [",", ".", ";", ":"];
pub const COORDINATING_CONJUNCTIONS: [&str; 7] = ["for", "and", "nor", "but", "or", "yet", "so"];

/// True for the four boundary punctuation marks and the seven coordinating
/// conjunctions (whole token, case-insensitive).
pub fn is_delimiter(surface: &str) -> bool {
    DELIMITER_PUNCTUATION.contains(&surface)
        || COORDINATING_CONJUNCTIONS
            .iter()
            .any(|c| c.eq_ignore_ascii_case(surface))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub norm: String,
    pub pos: Option<Pos>,
    pub is_delimiter: bool,
    /// Byte offset of `surface` in the source text.
    pub start: usize,
}

impl Token {
    pub fn new(surface: &str, start: usize) -> Token {
        Token {
            surface: surface.to_string(),
            norm: surface.to_lowercase(),
            pos: None,
            is_delimiter: is_delimiter(surface),
            start,
        }
    }

    pub fn end(&self) -> usize {
        self.start + self.surface.len()
    }

    pub fn is_punctuation(&self) -> bool {
        self.surface.chars().all(|c| !c.is_alphanumeric())
    }
}

fn joins_word(prev: Option<char>, c: char, next: Option<char>) -> bool {
    let alnum = |x: Option<char>| x.is_some_and(char::is_alphanumeric);
    let digit = |x: Option<char>| x.is_some_and(|x| x.is_ascii_digit());
    match c {
        '-' | '\'' | '\u{2019}' => alnum(prev) && alnum(next),
        '.' | ',' => digit(prev) && digit(next),
        _ => false,
    }
}

/// Splits on whitespace and detaches punctuation into single-character
/// tokens. Hyphens and apostrophes between letters or digits stay inside
/// the word, as do `.` and `,` between digits.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut word_start: Option<usize> = None;

    for (i, &(offset, c)) in chars.iter().enumerate() {
        let prev = i.checked_sub(1).map(|p| chars[p].1);
        let next = chars.get(i + 1).map(|&(_, n)| n);
        let word_char = c.is_alphanumeric() || joins_word(prev, c, next);
        if word_char {
            word_start.get_or_insert(offset);
            continue;
        }
        if let Some(s) = word_start.take() {
            tokens.push(Token::new(&text[s..offset], s));
        }
        if !c.is_whitespace() {
            tokens.push(Token::new(&text[offset..offset + c.len_utf8()], offset));
        }
    }
    if let Some(s) = word_start {
        tokens.push(Token::new(&text[s..], s));
    }
    tokens
}

/// Rebuilds the source text from tokens and the whitespace gaps between
/// them.
pub fn reconstruct(text: &str, tokens: &[Token]) -> String {
    let mut out = String::with_capacity(text.len());
    let mut cursor = 0;
    for t in tokens {
        out.push_str(&text[cursor..t.start]);
        out.push_str(&t.surface);
        cursor = t.end();
    }
    out.push_str(&text[cursor..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn surfaces(text: &str) -> Vec<String> {
        tokenize(text).into_iter().map(|t| t.surface).collect()
    }

    #[test]
    fn splits_trailing_punctuation() {
        assert_eq!(surfaces("Great food!"), ["Great", "food", "!"]);
    }

    #[test]
    fn keeps_intra_word_hyphens_and_apostrophes() {
        assert_eq!(surfaces("well-written"), ["well-written"]);
        assert_eq!(surfaces("I don't know"), ["I", "don't", "know"]);
        assert_eq!(surfaces("'quoted'"), ["'", "quoted", "'"]);
        assert_eq!(surfaces("a - b"), ["a", "-", "b"]);
    }

    #[test]
    fn comma_is_delimiter_token() {
        let toks = tokenize("a, b");
        assert_eq!(toks.len(), 3);
        assert_eq!(toks[1].surface, ",");
        assert!(toks[1].is_delimiter);
        assert!(!toks[0].is_delimiter);
    }

    #[test]
    fn punctuation_inside_words_is_split_except_numbers() {
        assert_eq!(surfaces("clean,and cheap"), ["clean", ",", "and", "cheap"]);
        assert_eq!(surfaces("costs 3.50, ok"), ["costs", "3.50", ",", "ok"]);
        assert_eq!(surfaces("wait...what"), ["wait", ".", ".", ".", "what"]);
    }

    #[test]
    fn conjunctions_case_insensitive() {
        assert!(is_delimiter("And"));
        assert!(is_delimiter("SO"));
        assert!(!is_delimiter("andy"));
        assert!(!is_delimiter("!"));
    }

    #[test]
    fn norm_is_lowercase() {
        let t = tokenize("GOOD Food");
        assert_eq!(t[0].norm, "good");
        assert_eq!(t[1].norm, "food");
    }

    #[test]
    fn empty_text() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("  \n\t").is_empty());
    }

    proptest! {
        #[test]
        fn reconstruction_is_exact(text in "[a-zA-Z0-9 ,.;:!?'\\-\u{e9}\u{2019}\n]{0,80}") {
            let toks = tokenize(&text);
            prop_assert_eq!(reconstruct(&text, &toks), text.clone());
            let mut cursor = 0;
            for t in &toks {
                prop_assert!(text[cursor..t.start].chars().all(char::is_whitespace));
                prop_assert_eq!(&text[t.start..t.end()], t.surface.as_str());
                prop_assert_eq!(t.norm.clone(), t.surface.to_lowercase());
                cursor = t.end();
            }
        }

        #[test]
        fn delimiter_flag_matches_rule(text in "[a-zA-Z ,.;:]{0,60}") {
            for t in tokenize(&text) {
                let expected = [",", ".", ";", ":"].contains(&t.surface.as_str())
                    || ["for", "and", "nor", "but", "or", "yet", "so"].contains(&t.norm.as_str());
                prop_assert_eq!(t.is_delimiter, expected);
            }
        }
    }
}
