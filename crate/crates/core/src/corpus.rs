//! Review records, JSONL ingest and per-domain star histograms.
//!
//! The interchange format is one JSON object per line:
//!
//! ```text
//! {"id": "a1", "text": "Great food!", "stars": 5, "domain": "restaurants", "source": "yelp"}
//! ```
//!
//! Invalid lines never abort a load. Each one is recorded as a [`Rejection`]
//! with its 1-based line number so that `accepted + rejected == lines`.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An integer star rating in `1..=5`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Stars(u8);

impl Stars {
    pub const ALL: [Stars; 5] = [Stars(1), Stars(2), Stars(3), Stars(4), Stars(5)];

    pub fn new(value: u8) -> Option<Stars> {
        (1..=5).contains(&value).then_some(Stars(value))
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Zero-based class index (1 star -> 0).
    pub fn class_index(self) -> usize {
        usize::from(self.0 - 1)
    }

    pub fn from_class_index(index: usize) -> Stars {
        assert!(index < 5, "class index {index} out of range");
        Stars(index as u8 + 1)
    }
}

impl TryFrom<u8> for Stars {
    type Error = String;

    fn try_from(value: u8) -> std::result::Result<Self, Self::Error> {
        Stars::new(value).ok_or_else(|| "stars out of range".to_string())
    }
}

impl From<Stars> for u8 {
    fn from(s: Stars) -> u8 {
        s.0
    }
}

impl fmt::Display for Stars {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Review {
    pub id: String,
    pub text: String,
    pub stars: Stars,
    pub domain: String,
    pub source: String,
}

/// Immutable, validated collection of reviews.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReviewSet {
    reviews: Vec<Review>,
    domains: BTreeSet<String>,
}

impl ReviewSet {
    /// Builds a set, failing on duplicate ids.
    pub fn new(reviews: Vec<Review>) -> Result<ReviewSet> {
        let mut seen = HashSet::with_capacity(reviews.len());
        for r in &reviews {
            if !seen.insert(r.id.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate review id `{}`", r.id)));
            }
        }
        Ok(ReviewSet::from_unique(reviews))
    }

    fn from_unique(reviews: Vec<Review>) -> ReviewSet {
        let domains = reviews.iter().map(|r| r.domain.clone()).collect();
        ReviewSet { reviews, domains }
    }

    pub fn reviews(&self) -> &[Review] {
        &self.reviews
    }

    pub fn domains(&self) -> &BTreeSet<String> {
        &self.domains
    }

    pub fn len(&self) -> usize {
        self.reviews.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reviews.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Review> {
        self.reviews.iter()
    }

    /// Reviews of one domain, original order preserved. Unknown domains
    /// give an empty set.
    pub fn filter_domain(&self, domain: &str) -> ReviewSet {
        ReviewSet::from_unique(
            self.reviews
                .iter()
                .filter(|r| r.domain == domain)
                .cloned()
                .collect(),
        )
    }

    /// Review count per domain.
    pub fn domain_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for r in &self.reviews {
            *counts.entry(r.domain.clone()).or_insert(0) += 1;
        }
        counts
    }

    /// Domains ordered by descending review count, ties by name.
    pub fn domains_by_size(&self) -> Vec<String> {
        let mut v: Vec<(String, usize)> = self.domain_counts().into_iter().collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        v.into_iter().map(|(d, _)| d).collect()
    }

    pub fn star_distribution(&self) -> StarDistribution {
        let mut dist = StarDistribution::default();
        for r in &self.reviews {
            dist.counts.entry(r.domain.clone()).or_insert([0; 5])[r.stars.class_index()] += 1;
        }
        dist
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for r in &self.reviews {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

impl<'a> IntoIterator for &'a ReviewSet {
    type Item = &'a Review;
    type IntoIter = std::slice::Iter<'a, Review>;

    fn into_iter(self) -> Self::IntoIter {
        self.reviews.iter()
    }
}

/// Per-domain counts of reviews at each star level.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StarDistribution {
    pub counts: BTreeMap<String, [u64; 5]>,
}

impl StarDistribution {
    /// Element-wise sum; histograms of disjoint sets add up to the
    /// histogram of their union.
    pub fn merge(&mut self, other: &StarDistribution) {
        for (domain, counts) in &other.counts {
            let slot = self.counts.entry(domain.clone()).or_insert([0; 5]);
            for (a, b) in slot.iter_mut().zip(counts) {
                *a += b;
            }
        }
    }

    pub fn total(&self, domain: &str) -> u64 {
        self.counts.get(domain).map_or(0, |c| c.iter().sum())
    }

    /// `domain,stars,count`, one row per (domain, star level).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["domain", "stars", "count"]).map_err(csv_err)?;
        for (domain, counts) in &self.counts {
            for (i, c) in counts.iter().enumerate() {
                w.write_record([domain.as_str(), &(i + 1).to_string(), &c.to_string()])
                    .map_err(csv_err)?;
            }
        }
        w.flush().map_err(|e| Error::Internal(e.to_string()))?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Internal(format!("csv: {e}"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    /// 1-based line number.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// When set, reviews whose domain is outside this set are rejected.
    pub domains: Option<BTreeSet<String>>,
    /// Minimum trimmed text length in characters. Zero disables the check.
    pub min_length: usize,
}

#[derive(Debug, Clone)]
pub struct LoadReport {
    pub set: ReviewSet,
    pub rejections: Vec<Rejection>,
    pub total_lines: usize,
}

impl LoadReport {
    pub fn write_rejections_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["line", "reason"]).map_err(csv_err)?;
        for r in &self.rejections {
            w.write_record([r.line.to_string(), r.reason.clone()])
                .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Internal(e.to_string()))?;
        Ok(())
    }
}

#[derive(Deserialize)]
struct RawReview {
    id: Option<String>,
    text: Option<String>,
    stars: Option<serde_json::Value>,
    domain: Option<String>,
    source: Option<String>,
}

fn parse_stars(v: &serde_json::Value) -> std::result::Result<Stars, String> {
    let n = match v {
        serde_json::Value::Number(n) => n,
        _ => return Err("stars is not a number".into()),
    };
    if let Some(i) = n.as_i64() {
        return u8::try_from(i)
            .ok()
            .and_then(Stars::new)
            .ok_or_else(|| "stars out of range".into());
    }
    if n.as_u64().is_some() {
        return Err("stars out of range".into());
    }
    Err("stars is not an integer".into())
}

fn parse_line(line: &str, opts: &LoadOptions) -> std::result::Result<Review, String> {
    if line.trim().is_empty() {
        return Err("blank line".into());
    }
    let raw: RawReview = serde_json::from_str(line).map_err(|e| format!("malformed JSON: {e}"))?;
    let id = raw.id.ok_or("missing id")?;
    if id.is_empty() {
        return Err("empty id".into());
    }
    let text = raw.text.ok_or("missing text")?;
    if text.trim().is_empty() {
        return Err("empty text".into());
    }
    if opts.min_length > 0 && text.trim().chars().count() < opts.min_length {
        return Err(format!("text shorter than {} characters", opts.min_length));
    }
    let stars = parse_stars(&raw.stars.ok_or("missing stars")?)?;
    let domain = raw.domain.ok_or("missing domain")?;
    if domain.is_empty() {
        return Err("empty domain".into());
    }
    if let Some(allowed) = &opts.domains {
        if !allowed.contains(&domain) {
            return Err(format!("domain `{domain}` not in configured set"));
        }
    }
    let source = raw.source.ok_or("missing source")?;
    Ok(Review {
        id,
        text,
        stars,
        domain,
        source,
    })
}

/// Parses JSONL content. Lines are validated in parallel; the result does
/// not depend on the thread count.
pub fn parse_reviews(content: &str, opts: &LoadOptions) -> LoadReport {
    let lines: Vec<&str> = content.lines().collect();
    let parsed: Vec<std::result::Result<Review, String>> =
        lines.par_iter().map(|l| parse_line(l, opts)).collect();

    let mut reviews = Vec::with_capacity(parsed.len());
    let mut rejections = Vec::new();
    let mut seen = HashSet::new();
    for (i, p) in parsed.into_iter().enumerate() {
        match p {
            Ok(r) if !seen.insert(r.id.clone()) => rejections.push(Rejection {
                line: i + 1,
                reason: format!("duplicate id `{}`", r.id),
            }),
            Ok(r) => reviews.push(r),
            Err(reason) => rejections.push(Rejection { line: i + 1, reason }),
        }
    }
    LoadReport {
        set: ReviewSet::from_unique(reviews),
        rejections,
        total_lines: lines.len(),
    }
}

pub fn load_reviews(path: &Path, opts: &LoadOptions) -> Result<LoadReport> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let content = String::from_utf8(bytes).map_err(|e| Error::Record {
        line: 0,
        reason: format!("file is not valid UTF-8: {e}"),
    })?;
    Ok(parse_reviews(&content, opts))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn review(id: &str, stars: u8, domain: &str) -> Review {
        Review {
            id: id.into(),
            text: "some text".into(),
            stars: Stars::new(stars).unwrap(),
            domain: domain.into(),
            source: "test".into(),
        }
    }

    #[test]
    fn well_formed_line_round_trips() {
        let line = r#"{"id":"a1","text":"Great food!","stars":5,"domain":"restaurants","source":"yelp"}"#;
        let rep = parse_reviews(line, &LoadOptions::default());
        assert!(rep.rejections.is_empty());
        let r = &rep.set.reviews()[0];
        assert_eq!(r.id, "a1");
        assert_eq!(r.text, "Great food!");
        assert_eq!(r.stars.get(), 5);
        assert_eq!(r.domain, "restaurants");
        assert_eq!(r.source, "yelp");
        let mut out = Vec::new();
        rep.set.write_jsonl(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap().trim_end(), line);
    }

    #[test]
    fn out_of_range_and_fractional_stars_rejected() {
        let content = [
            r#"{"id":"a","text":"x","stars":6,"domain":"d","source":"s"}"#,
            r#"{"id":"b","text":"x","stars":0,"domain":"d","source":"s"}"#,
            r#"{"id":"c","text":"x","stars":4.5,"domain":"d","source":"s"}"#,
            r#"{"id":"d","text":"x","stars":-1,"domain":"d","source":"s"}"#,
            r#"{"id":"e","text":"x","stars":"5","domain":"d","source":"s"}"#,
        ]
        .join("\n");
        let rep = parse_reviews(&content, &LoadOptions::default());
        assert_eq!(rep.set.len(), 0);
        let reasons: Vec<&str> = rep.rejections.iter().map(|r| r.reason.as_str()).collect();
        assert_eq!(
            reasons,
            [
                "stars out of range",
                "stars out of range",
                "stars is not an integer",
                "stars out of range",
                "stars is not a number"
            ]
        );
        assert_eq!(rep.rejections[2].line, 3);
    }

    #[test]
    fn empty_file_gives_empty_set() {
        let rep = parse_reviews("", &LoadOptions::default());
        assert_eq!(rep.set.len(), 0);
        assert!(rep.set.domains().is_empty());
        assert_eq!(rep.total_lines, 0);
    }

    #[test]
    fn accepted_plus_rejected_equals_lines() {
        let content = [
            r#"{"id":"a","text":"ok","stars":3,"domain":"d","source":"s"}"#,
            "",
            "{not json",
            r#"{"id":"a","text":"dup","stars":3,"domain":"d","source":"s"}"#,
            r#"{"text":"no id","stars":3,"domain":"d","source":"s"}"#,
            r#"{"id":"b","text":"   ","stars":3,"domain":"d","source":"s"}"#,
            r#"{"id":"c","text":"fine","stars":1,"domain":"e","source":"s"}"#,
        ]
        .join("\n");
        let rep = parse_reviews(&content, &LoadOptions::default());
        assert_eq!(rep.set.len(), 2);
        assert_eq!(rep.rejections.len(), 5);
        assert_eq!(rep.set.len() + rep.rejections.len(), rep.total_lines);
        assert!(rep.rejections[2].reason.starts_with("duplicate id"));
    }

    #[test]
    fn domain_whitelist_and_min_length() {
        let content = [
            r#"{"id":"a","text":"long enough","stars":3,"domain":"books","source":"s"}"#,
            r#"{"id":"b","text":"short","stars":3,"domain":"books","source":"s"}"#,
            r#"{"id":"c","text":"long enough","stars":3,"domain":"cars","source":"s"}"#,
        ]
        .join("\n");
        let opts = LoadOptions {
            domains: Some(["books".to_string()].into()),
            min_length: 6,
        };
        let rep = parse_reviews(&content, &opts);
        assert_eq!(rep.set.len(), 1);
        assert_eq!(rep.rejections.len(), 2);
    }

    #[test]
    fn filter_domain_cases() {
        let set = ReviewSet::new(vec![
            review("1", 5, "restaurants"),
            review("2", 4, "dentists"),
            review("3", 3, "restaurants"),
            review("4", 2, "dentists"),
            review("5", 1, "restaurants"),
        ])
        .unwrap();
        let d = set.filter_domain("dentists");
        assert_eq!(d.len(), 2);
        assert_eq!(d.reviews()[0].id, "2");
        assert_eq!(d.reviews()[1].id, "4");
        assert!(set.filter_domain("hotels").is_empty());
        assert_eq!(d.filter_domain("dentists"), d);
    }

    #[test]
    fn duplicate_ids_rejected_by_constructor() {
        assert!(ReviewSet::new(vec![review("1", 5, "a"), review("1", 4, "a")]).is_err());
    }

    #[test]
    fn single_review_histogram() {
        let set = ReviewSet::new(vec![review("1", 5, "books")]).unwrap();
        let dist = set.star_distribution();
        assert_eq!(dist.counts["books"], [0, 0, 0, 0, 1]);
        let mut csv = Vec::new();
        dist.write_csv(&mut csv).unwrap();
        assert_eq!(
            String::from_utf8(csv).unwrap(),
            "domain,stars,count\nbooks,1,0\nbooks,2,0\nbooks,3,0\nbooks,4,0\nbooks,5,1\n"
        );
    }

    #[test]
    fn domains_by_size_orders_descending() {
        let set = ReviewSet::new(vec![
            review("1", 5, "b"),
            review("2", 5, "a"),
            review("3", 5, "b"),
            review("4", 5, "c"),
        ])
        .unwrap();
        assert_eq!(set.domains_by_size(), ["b", "a", "c"]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_reviews(prefix: &'static str) -> impl Strategy<Value = Vec<Review>> {
            prop::collection::vec((1u8..=5, 0usize..3), 0..40).prop_map(move |v| {
                v.into_iter()
                    .enumerate()
                    .map(|(i, (s, d))| review(&format!("{prefix}{i}"), s, ["x", "y", "z"][d]))
                    .collect()
            })
        }

        proptest! {
            #[test]
            fn histogram_is_additive(a in arb_reviews("a"), b in arb_reviews("b")) {
                let sa = ReviewSet::new(a.clone()).unwrap();
                let sb = ReviewSet::new(b.clone()).unwrap();
                let union = ReviewSet::new(a.into_iter().chain(b).collect()).unwrap();
                let mut merged = sa.star_distribution();
                merged.merge(&sb.star_distribution());
                prop_assert_eq!(merged, union.star_distribution());
                for d in union.domains() {
                    prop_assert_eq!(
                        union.star_distribution().total(d) as usize,
                        union.filter_domain(d).len()
                    );
                }
            }

            #[test]
            fn load_is_deterministic(rs in arb_reviews("r")) {
                let set = ReviewSet::new(rs).unwrap();
                let mut buf = Vec::new();
                set.write_jsonl(&mut buf).unwrap();
                let text = String::from_utf8(buf).unwrap();
                let a = parse_reviews(&text, &LoadOptions::default());
                let b = parse_reviews(&text, &LoadOptions::default());
                prop_assert_eq!(&a.set, &b.set);
                prop_assert_eq!(&a.set, &set);
            }
        }
    }
}
