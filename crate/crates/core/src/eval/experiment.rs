use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::folds::{FoldPlan, Split};
use super::metrics::{mae, rmse};
use crate::aspects::{AspectExtractor, AspectPhrase};
use crate::corpus::{csv_err, ReviewSet, Stars};
use crate::embeddings::{
    featurize_tokens, train_on_sentences, training_tokens, EmbeddingModel, Scheme, Word2VecConfig,
};
use crate::error::{Error, Result};
use crate::lexicon::SentimentLexicon;
use crate::models::{bl_featurize_tokens, select_top_k_unigrams, train_mlr, MlrConfig, DEFAULT_TOP_K};
use crate::seeds;
use crate::textproc::Tagger;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    InDomain,
    CrossDomain,
}

impl Setting {
    pub const ALL: [Setting; 2] = [Setting::InDomain, Setting::CrossDomain];

    pub fn as_str(self) -> &'static str {
        match self {
            Setting::InDomain => "in_domain",
            Setting::CrossDomain => "cross_domain",
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Setting> {
        match s.replace('-', "_").as_str() {
            "in_domain" => Ok(Setting::InDomain),
            "cross_domain" => Ok(Setting::CrossDomain),
            _ => Err(Error::config("setting", format!("unknown setting `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub settings: Vec<Setting>,
    pub schemes: Vec<Scheme>,
    /// Master seed; cell seeds derive from it.
    pub seed: u64,
    pub top_k: usize,
    pub embedding: Word2VecConfig,
    pub mlr: MlrConfig,
    /// Train one embedding model on the whole corpus, test text included,
    /// instead of one per training split.
    pub paper_leakage: bool,
    /// Restrict evaluation to these test domains; all domains still serve
    /// as cross-domain training data.
    pub test_domains: Option<Vec<String>>,
    /// Largest token distance between the words of an aspect phrase.
    pub max_distance: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            settings: Setting::ALL.to_vec(),
            schemes: Scheme::ALL.to_vec(),
            seed: 1,
            top_k: DEFAULT_TOP_K,
            embedding: Word2VecConfig::default(),
            mlr: MlrConfig::default(),
            paper_leakage: false,
            test_domains: None,
            max_distance: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.settings.is_empty() {
            return Err(Error::config("settings", "at least one setting is required"));
        }
        if self.schemes.is_empty() {
            return Err(Error::config("schemes", "at least one scheme is required"));
        }
        if self.top_k == 0 {
            return Err(Error::config("top_k", "must be at least 1"));
        }
        if let Some(d) = &self.test_domains {
            if d.is_empty() {
                return Err(Error::config("test_domains", "must name at least one domain"));
            }
        }
        self.embedding.validate()?;
        self.mlr.validate()
    }
}

/// One `(setting, test domain, fold)` evaluation unit. Indices point into
/// the experiment's review set.
#[derive(Debug, Clone)]
pub struct Cell<'a> {
    pub setting: Setting,
    pub domain: &'a str,
    pub fold: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// Seed reserved for this cell.
    pub seed: u64,
}

/// Produces test predictions for a cell, one vector per requested scheme.
pub trait Rater: Sync {
    fn rate(&self, set: &ReviewSet, cell: &Cell<'_>, schemes: &[Scheme]) -> Result<Vec<Vec<Stars>>>;
}

/// The full pipeline: embeddings, featurizers and the softmax rater, all
/// fit on the cell's training reviews.
pub struct PipelineRater {
    config: ExperimentConfig,
    tokens: Vec<Vec<String>>,
    phrases: Option<Vec<Vec<AspectPhrase>>>,
    full_embeddings: OnceLock<std::result::Result<EmbeddingModel, String>>,
}

impl PipelineRater {
    /// Tokenizes every review and, when a phrase scheme is requested,
    /// extracts its aspect phrases.
    pub fn prepare(
        set: &ReviewSet,
        config: &ExperimentConfig,
        lexicon: &SentimentLexicon,
        tagger: &dyn Tagger,
    ) -> PipelineRater {
        let tokens = set.reviews().par_iter().map(|r| training_tokens(&r.text)).collect();
        let phrases = config
            .schemes
            .iter()
            .any(|s| matches!(s, Scheme::W2vApe | Scheme::W2vPape))
            .then(|| {
                AspectExtractor::new(lexicon, tagger)
                    .with_max_distance(config.max_distance)
                    .extract_all(set)
            });
        PipelineRater {
            config: config.clone(),
            tokens,
            phrases,
            full_embeddings: OnceLock::new(),
        }
    }

    fn embeddings(&self, cell: &Cell<'_>) -> Result<EmbeddingModel> {
        if self.config.paper_leakage {
            let cached = self.full_embeddings.get_or_init(|| {
                let cfg = Word2VecConfig {
                    seed: seeds::derive(self.config.seed, seeds::EMBEDDING),
                    ..self.config.embedding.clone()
                };
                train_on_sentences(&self.tokens, &cfg).map_err(|e| e.to_string())
            });
            return cached.clone().map_err(Error::InvalidInput);
        }
        let sentences: Vec<Vec<String>> = cell.train.iter().map(|&i| self.tokens[i].clone()).collect();
        let cfg = Word2VecConfig {
            seed: seeds::derive(cell.seed, seeds::EMBEDDING),
            ..self.config.embedding.clone()
        };
        train_on_sentences(&sentences, &cfg)
    }
}

const NO_PHRASES: &[AspectPhrase] = &[];

impl Rater for PipelineRater {
    fn rate(&self, set: &ReviewSet, cell: &Cell<'_>, schemes: &[Scheme]) -> Result<Vec<Vec<Stars>>> {
        let labels: Vec<Stars> = cell.train.iter().map(|&i| set.reviews()[i].stars).collect();
        let mlr = MlrConfig {
            seed: seeds::derive(cell.seed, seeds::MLR),
            ..self.config.mlr.clone()
        };
        let embeddings = if schemes.iter().any(|s| s.uses_embeddings()) {
            Some(self.embeddings(cell)?)
        } else {
            None
        };
        let mut out = Vec::with_capacity(schemes.len());
        for &scheme in schemes {
            let featurize = |i: usize| -> Result<Vec<f64>> {
                let phrases = self.phrases.as_ref().map_or(NO_PHRASES, |p| p[i].as_slice());
                let model = embeddings.as_ref().expect("embedding model trained");
                Ok(featurize_tokens(model, &self.tokens[i], phrases, scheme)?.to_dense())
            };
            let (train_x, test_x): (Vec<Vec<f64>>, Vec<Vec<f64>>) = if scheme == Scheme::Bl {
                let train_set = ReviewSet::new(
                    cell.train.iter().map(|&i| set.reviews()[i].clone()).collect(),
                )?;
                let vocab = select_top_k_unigrams(&train_set, self.config.top_k)?;
                let f = |i: &usize| bl_featurize_tokens(&self.tokens[*i], &vocab).to_dense();
                (cell.train.iter().map(f).collect(), cell.test.iter().map(f).collect())
            } else {
                (
                    cell.train.iter().map(|&i| featurize(i)).collect::<Result<_>>()?,
                    cell.test.iter().map(|&i| featurize(i)).collect::<Result<_>>()?,
                )
            };
            let model = train_mlr(&train_x, &labels, &mlr)?;
            out.push(test_x.iter().map(|x| model.predict(x)).collect::<Result<_>>()?);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldRow {
    pub domain: String,
    pub setting: Setting,
    pub scheme: Scheme,
    /// 1-based in CSV output.
    pub fold: usize,
    pub n: usize,
    pub mae: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub domain: String,
    pub setting: Setting,
    pub scheme: Scheme,
    /// Test reviews over all folds.
    pub n: usize,
    /// Unweighted mean of the fold scores.
    pub mae: f64,
    pub rmse: f64,
}

/// Best in-domain score per domain, minimized separately per metric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestInDomain {
    pub domain: String,
    pub mae_scheme: Scheme,
    pub mae: f64,
    pub rmse_scheme: Scheme,
    pub rmse: f64,
}

/// Per-fold and per-domain results. Rows are ordered by descending domain
/// size, then setting, scheme and fold.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsReport {
    pub folds: Vec<FoldRow>,
    pub aggregates: Vec<AggregateRow>,
}

fn fmt_metric(x: f64) -> String {
    format!("{x:.6}")
}

impl MetricsReport {
    pub fn aggregate(
        &self,
        domain: &str,
        setting: Setting,
        scheme: Scheme,
    ) -> Option<&AggregateRow> {
        self.aggregates
            .iter()
            .find(|r| r.domain == domain && r.setting == setting && r.scheme == scheme)
    }

    pub fn best_in_domain(&self) -> Vec<BestInDomain> {
        let mut out: Vec<BestInDomain> = Vec::new();
        for r in self.aggregates.iter().filter(|r| r.setting == Setting::InDomain) {
            match out.iter_mut().find(|b| b.domain == r.domain) {
                Some(b) => {
                    if r.mae < b.mae {
                        b.mae = r.mae;
                        b.mae_scheme = r.scheme;
                    }
                    if r.rmse < b.rmse {
                        b.rmse = r.rmse;
                        b.rmse_scheme = r.scheme;
                    }
                }
                None => out.push(BestInDomain {
                    domain: r.domain.clone(),
                    mae_scheme: r.scheme,
                    mae: r.mae,
                    rmse_scheme: r.scheme,
                    rmse: r.rmse,
                }),
            }
        }
        out
    }

    /// `domain,setting,scheme,fold,mae,rmse`
    pub fn write_folds_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["domain", "setting", "scheme", "fold", "mae", "rmse"])
            .map_err(csv_err)?;
        for r in &self.folds {
            w.write_record([
                r.domain.as_str(),
                r.setting.as_str(),
                r.scheme.as_str(),
                &(r.fold + 1).to_string(),
                &fmt_metric(r.mae),
                &fmt_metric(r.rmse),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Internal(e.to_string()))
    }

    /// `domain,setting,scheme,mae,rmse`
    pub fn write_aggregate_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["domain", "setting", "scheme", "mae", "rmse"])
            .map_err(csv_err)?;
        for r in &self.aggregates {
            w.write_record([
                r.domain.as_str(),
                r.setting.as_str(),
                r.scheme.as_str(),
                &fmt_metric(r.mae),
                &fmt_metric(r.rmse),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Internal(e.to_string()))
    }

    /// `domain,mae_scheme,mae,rmse_scheme,rmse`
    pub fn write_bid_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["domain", "mae_scheme", "mae", "rmse_scheme", "rmse"])
            .map_err(csv_err)?;
        for b in self.best_in_domain() {
            w.write_record([
                b.domain.as_str(),
                b.mae_scheme.as_str(),
                &fmt_metric(b.mae),
                b.rmse_scheme.as_str(),
                &fmt_metric(b.rmse),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Internal(e.to_string()))
    }
}

/// Runs every configured setting and scheme with the full pipeline.
pub fn run_experiment(
    set: &ReviewSet,
    plan: &FoldPlan,
    config: &ExperimentConfig,
    lexicon: &SentimentLexicon,
    tagger: &dyn Tagger,
) -> Result<MetricsReport> {
    config.validate()?;
    let rater = PipelineRater::prepare(set, config, lexicon, tagger);
    run_experiment_with(set, plan, config, &rater)
}

fn cell_seed(master: u64, setting: Setting, domain: &str, fold: usize) -> u64 {
    let s = seeds::derive(master, &format!("cell/{}/{domain}", setting.as_str()));
    seeds::derive_indexed(s, fold as u64)
}

/// Runs the experiment with a caller-supplied rater. Cells run in
/// parallel; the report does not depend on scheduling.
pub fn run_experiment_with(
    set: &ReviewSet,
    plan: &FoldPlan,
    config: &ExperimentConfig,
    rater: &dyn Rater,
) -> Result<MetricsReport> {
    config.validate()?;
    let index: HashMap<&str, usize> = set.iter().enumerate().map(|(i, r)| (r.id.as_str(), i)).collect();
    if plan.len() != set.len() || set.iter().any(|r| plan.assignment(&r.id).is_none()) {
        return Err(Error::InvalidInput("fold plan does not cover the review set".into()));
    }
    let test_domains: Vec<usize> = match &config.test_domains {
        None => (0..plan.domains().len()).collect(),
        Some(names) => names
            .iter()
            .map(|n| {
                plan.domain_index(n)
                    .ok_or_else(|| Error::config("test_domains", format!("unknown domain `{n}`")))
            })
            .collect::<Result<_>>()?,
    };

    let mut jobs = Vec::new();
    for &setting in &config.settings {
        for &d in &test_domains {
            for f in 0..plan.k() {
                jobs.push((setting, d, f));
            }
        }
    }
    let to_indices = |ids: &[String]| -> Vec<usize> { ids.iter().map(|id| index[id.as_str()]).collect() };
    let results: Vec<Result<Vec<FoldRow>>> = jobs
        .par_iter()
        .map(|&(setting, d, f)| {
            let domain = plan.domains()[d].as_str();
            let wrap = |e: Error| Error::Cell {
                domain: domain.to_string(),
                fold: f + 1,
                source: Box::new(e),
            };
            let Split { train, test } = match setting {
                Setting::InDomain => plan.in_domain_split(d, f),
                Setting::CrossDomain => plan.cross_domain_split(d, f),
            }
            .map_err(wrap)?;
            let cell = Cell {
                setting,
                domain,
                fold: f,
                train: to_indices(&train),
                test: to_indices(&test),
                seed: cell_seed(config.seed, setting, domain, f),
            };
            let truths: Vec<Stars> = cell.test.iter().map(|&i| set.reviews()[i].stars).collect();
            let preds = rater.rate(set, &cell, &config.schemes).map_err(wrap)?;
            if preds.len() != config.schemes.len() {
                return Err(wrap(Error::Internal("rater returned the wrong number of schemes".into())));
            }
            config
                .schemes
                .iter()
                .zip(preds)
                .map(|(&scheme, p)| {
                    Ok(FoldRow {
                        domain: domain.to_string(),
                        setting,
                        scheme,
                        fold: f,
                        n: truths.len(),
                        mae: mae(&p, &truths).map_err(wrap)?,
                        rmse: rmse(&p, &truths).map_err(wrap)?,
                    })
                })
                .collect()
        })
        .collect();
    let mut folds = Vec::new();
    for r in results {
        folds.extend(r?);
    }
    Ok(assemble(set, folds))
}

fn assemble(set: &ReviewSet, mut folds: Vec<FoldRow>) -> MetricsReport {
    let rank: HashMap<String, usize> = set
        .domains_by_size()
        .into_iter()
        .enumerate()
        .map(|(i, d)| (d, i))
        .collect();
    folds.sort_by(|a, b| {
        (rank[&a.domain], a.setting, a.scheme, a.fold).cmp(&(rank[&b.domain], b.setting, b.scheme, b.fold))
    });
    let mut groups: BTreeMap<(usize, Setting, Scheme), Vec<&FoldRow>> = BTreeMap::new();
    for r in &folds {
        groups.entry((rank[&r.domain], r.setting, r.scheme)).or_default().push(r);
    }
    let aggregates = groups
        .into_values()
        .map(|rows| {
            let k = rows.len() as f64;
            AggregateRow {
                domain: rows[0].domain.clone(),
                setting: rows[0].setting,
                scheme: rows[0].scheme,
                n: rows.iter().map(|r| r.n).sum(),
                mae: rows.iter().map(|r| r.mae).sum::<f64>() / k,
                rmse: rows.iter().map(|r| r.rmse).sum::<f64>() / k,
            }
        })
        .collect();
    MetricsReport { folds, aggregates }
}

/// Oracle rater that returns the true labels.
pub struct PerfectRater;

impl Rater for PerfectRater {
    fn rate(&self, set: &ReviewSet, cell: &Cell<'_>, schemes: &[Scheme]) -> Result<Vec<Vec<Stars>>> {
        let truth: Vec<Stars> = cell.test.iter().map(|&i| set.reviews()[i].stars).collect();
        Ok(vec![truth; schemes.len()])
    }
}
