//! Command-line front end. Exit statuses: 0 success, 2 usage, 3 data,
//! 4 internal.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{resolve, settings_from_table, validate_config, CommandKind, RunConfig, Settings};

use crate::embeddings::Scheme;
use crate::error::{Error, ErrorKind, Result};
use crate::eval::{Setting, SynthSpec};

/// Sizes the worker pool; results do not depend on it.
pub const THREADS_ENV: &str = "REVIEW_RATING_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "review-rating", version, about = "Review star-rating prediction with aspect-phrase embeddings")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a JSONL corpus and write the accepted reviews plus a rejection log.
    Ingest {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        input: Input,
        /// Exit with status 3 when any line is rejected.
        #[arg(long)]
        strict: bool,
    },
    /// Star-rating distribution per domain.
    Stats {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        input: Input,
    },
    /// Most frequent aspect phrases per domain.
    Phrases {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        top: Option<usize>,
        #[arg(long)]
        max_distance: Option<usize>,
        /// Also write every extracted phrase to phrases.csv.
        #[arg(long)]
        dump: bool,
    },
    /// Train skip-gram word vectors on the corpus.
    TrainEmbeddings {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        embedding: EmbeddingFlags,
    },
    /// Write one feature vector per review.
    Featurize {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        scheme: Option<String>,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        top_k: Option<usize>,
        #[arg(long)]
        max_distance: Option<usize>,
    },
    /// Fit a rater on the whole corpus.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        scheme: Option<String>,
        /// Reuse these vectors instead of training new ones.
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        top_k: Option<usize>,
        #[arg(long)]
        max_distance: Option<usize>,
        #[command(flatten)]
        embedding: EmbeddingFlags,
        #[command(flatten)]
        mlr: MlrFlags,
    },
    /// Score a saved model on a corpus.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Overrides the vector file the model refers to.
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        max_distance: Option<usize>,
    },
    /// k-fold in-domain and cross-domain evaluation.
    Experiment {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        input: Input,
        /// in-domain, cross-domain or all; comma separated.
        #[arg(long, value_delimiter = ',')]
        setting: Vec<String>,
        /// bl, w2v, w2v_ape, w2v_pape or all; comma separated.
        #[arg(long, value_delimiter = ',')]
        scheme: Vec<String>,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        stratify: bool,
        /// Train one embedding model on the whole corpus, test folds included.
        #[arg(long)]
        paper_leakage: bool,
        #[arg(long, value_delimiter = ',')]
        test_domain: Vec<String>,
        #[arg(long)]
        top_k: Option<usize>,
        #[arg(long)]
        max_distance: Option<usize>,
        #[command(flatten)]
        embedding: EmbeddingFlags,
        #[command(flatten)]
        mlr: MlrFlags,
    },
    /// Generate a labelled synthetic corpus.
    Synth {
        #[command(flatten)]
        common: Common,
        /// `default` or `acceptance` (four domains of 1000 plus `scarce` of 200).
        #[arg(long)]
        preset: Option<String>,
        /// Number of equally sized domains.
        #[arg(long, requires = "reviews")]
        num_domains: Option<usize>,
        #[arg(long, requires = "num_domains")]
        reviews: Option<usize>,
    },
    /// Train a part-of-speech tagger model.
    TrainTagger {
        #[command(flatten)]
        common: Common,
        /// Tagged corpus, one `word/TAG ...` sentence per line. Defaults to the bundled corpus.
        #[arg(long)]
        train: Option<PathBuf>,
        /// Brill-format tag dictionary. Defaults to the bundled one.
        #[arg(long)]
        dictionary: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        iterations: usize,
    },
    /// Print the resolved configuration as TOML.
    Config {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug, Default)]
struct Common {
    /// TOML config file; flags take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override any config key, e.g. `--set embedding.dim=50`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args, Debug, Default)]
struct Input {
    /// JSONL corpus.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Keep only these domains; comma separated.
    #[arg(long, value_delimiter = ',')]
    domains: Vec<String>,
    #[arg(long)]
    min_length: Option<usize>,
    /// Tagger model file instead of the bundled one.
    #[arg(long)]
    tagger: Option<PathBuf>,
    #[arg(long, requires = "lexicon_negative")]
    lexicon_positive: Option<PathBuf>,
    #[arg(long, requires = "lexicon_positive")]
    lexicon_negative: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct EmbeddingFlags {
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    negatives: Option<usize>,
    #[arg(long)]
    min_count: Option<usize>,
    #[arg(long)]
    embedding_epochs: Option<usize>,
    /// Embedding worker threads; 1 is deterministic.
    #[arg(long)]
    embedding_threads: Option<usize>,
}

#[derive(Args, Debug, Default)]
struct MlrFlags {
    #[arg(long)]
    mlr_epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    l2: Option<f64>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl Common {
    fn settings(&self) -> Result<Settings> {
        let mut s = resolve(self.config.as_deref(), &self.set)?;
        set(&mut s.seed, self.seed);
        if self.out.is_some() {
            s.out = self.out.clone();
        }
        Ok(s)
    }
}

impl Input {
    fn apply(&self, s: &mut Settings) {
        let opt = |slot: &mut Option<PathBuf>, v: &Option<PathBuf>| {
            if v.is_some() {
                slot.clone_from(v);
            }
        };
        opt(&mut s.data, &self.data);
        opt(&mut s.tagger, &self.tagger);
        opt(&mut s.lexicon_positive, &self.lexicon_positive);
        opt(&mut s.lexicon_negative, &self.lexicon_negative);
        if !self.domains.is_empty() {
            s.domains = Some(self.domains.clone());
        }
        set(&mut s.min_length, self.min_length);
    }
}

impl EmbeddingFlags {
    fn apply(&self, s: &mut Settings) {
        let e = &mut s.embedding;
        set(&mut e.dim, self.dim);
        set(&mut e.window, self.window);
        set(&mut e.negatives, self.negatives);
        set(&mut e.min_count, self.min_count);
        set(&mut e.epochs, self.embedding_epochs);
        set(&mut e.threads, self.embedding_threads);
    }
}

impl MlrFlags {
    fn apply(&self, s: &mut Settings) {
        let m = &mut s.mlr;
        set(&mut m.epochs, self.mlr_epochs);
        set(&mut m.batch_size, self.batch_size);
        set(&mut m.learning_rate, self.learning_rate);
        set(&mut m.l2, self.l2);
    }
}

fn parse_schemes(values: &[String]) -> Result<Vec<Scheme>> {
    let mut out = Vec::new();
    for v in values {
        if v == "all" {
            out.extend(Scheme::ALL);
        } else {
            out.push(v.parse().map_err(|_| Error::config("schemes", format!("unknown scheme `{v}`")))?);
        }
    }
    out.dedup();
    Ok(out)
}

fn parse_settings(values: &[String]) -> Result<Vec<Setting>> {
    let mut out = Vec::new();
    for v in values {
        if v == "all" || v == "both" {
            out.extend(Setting::ALL);
        } else {
            out.push(v.parse()?);
        }
    }
    out.dedup();
    Ok(out)
}

fn single_scheme(s: &mut Settings, scheme: &Option<String>) -> Result<()> {
    if let Some(v) = scheme {
        s.schemes = parse_schemes(std::slice::from_ref(v))?;
    }
    Ok(())
}

/// Merges flags over the config layers and validates the result.
fn build(command: &Command) -> Result<RunConfig> {
    let (kind, settings) = match command {
        Command::Ingest { common, input, .. } => {
            let mut s = common.settings()?;
            input.apply(&mut s);
            (CommandKind::Ingest, s)
        }
        Command::Stats { common, input } => {
            let mut s = common.settings()?;
            input.apply(&mut s);
            (CommandKind::Stats, s)
        }
        Command::Phrases {
            common,
            input,
            top,
            max_distance,
            dump,
        } => {
            let mut s = common.settings()?;
            input.apply(&mut s);
            set(&mut s.top_phrases, *top);
            if max_distance.is_some() {
                s.max_distance = *max_distance;
            }
            if *dump && s.out.is_none() {
                return Err(Error::config("out", "--dump needs an output directory"));
            }
            (CommandKind::Phrases, s)
        }
        Command::TrainEmbeddings {
            common,
            input,
            embedding,
        } => {
            let mut s = common.settings()?;
            input.apply(&mut s);
            embedding.apply(&mut s);
            (CommandKind::TrainEmbeddings, s)
        }
        Command::Featurize {
            common,
            input,
            scheme,
            embeddings,
            top_k,
            max_distance,
        } => {
            let mut s = common.settings()?;
            input.apply(&mut s);
            single_scheme(&mut s, scheme)?;
            if embeddings.is_some() {
                s.embeddings.clone_from(embeddings);
            }
            set(&mut s.top_k, *top_k);
            if max_distance.is_some() {
                s.max_distance = *max_distance;
            }
            (CommandKind::Featurize, s)
        }
        Command::Train {
            common,
            input,
            scheme,
            embeddings,
            top_k,
            max_distance,
            embedding,
            mlr,
        } => {
            let mut s = common.settings()?;
            input.apply(&mut s);
            single_scheme(&mut s, scheme)?;
            if embeddings.is_some() {
                s.embeddings.clone_from(embeddings);
            }
            set(&mut s.top_k, *top_k);
            if max_distance.is_some() {
                s.max_distance = *max_distance;
            }
            embedding.apply(&mut s);
            mlr.apply(&mut s);
            (CommandKind::Train, s)
        }
        Command::Evaluate {
            common,
            input,
            model,
            embeddings,
            max_distance,
        } => {
            let mut s = common.settings()?;
            input.apply(&mut s);
            if model.is_some() {
                s.model.clone_from(model);
            }
            if embeddings.is_some() {
                s.embeddings.clone_from(embeddings);
            }
            if max_distance.is_some() {
                s.max_distance = *max_distance;
            }
            (CommandKind::Evaluate, s)
        }
        Command::Experiment {
            common,
            input,
            setting,
            scheme,
            folds,
            stratify,
            paper_leakage,
            test_domain,
            top_k,
            max_distance,
            embedding,
            mlr,
        } => {
            let mut s = common.settings()?;
            input.apply(&mut s);
            if !setting.is_empty() {
                s.settings = parse_settings(setting)?;
            }
            if !scheme.is_empty() {
                s.schemes = parse_schemes(scheme)?;
            }
            set(&mut s.folds, *folds);
            s.stratify |= *stratify;
            s.paper_leakage |= *paper_leakage;
            if !test_domain.is_empty() {
                s.test_domains = Some(test_domain.clone());
            }
            set(&mut s.top_k, *top_k);
            if max_distance.is_some() {
                s.max_distance = *max_distance;
            }
            embedding.apply(&mut s);
            mlr.apply(&mut s);
            (CommandKind::Experiment, s)
        }
        Command::Synth {
            common,
            preset,
            num_domains,
            reviews,
        } => {
            let mut s = common.settings()?;
            match preset.as_deref() {
                None => {}
                Some("default") => s.synth = SynthSpec::default(),
                Some("acceptance") => s.synth = SynthSpec::acceptance(),
                Some(other) => return Err(Error::config("preset", format!("unknown preset `{other}`"))),
            }
            if let (Some(n), Some(r)) = (num_domains, reviews) {
                s.synth.domains = SynthSpec::uniform(*n, *r).domains;
            }
            (CommandKind::Synth, s)
        }
        Command::TrainTagger { common, .. } => (CommandKind::TrainTagger, common.settings()?),
        Command::Config { common } => (CommandKind::Config, common.settings()?),
    };
    validate_config(kind, settings)
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| Error::config(THREADS_ENV, format!("`{raw}` is not a positive integer")))?;
    // A pool built earlier in this process keeps its size.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn exit_code(kind: ErrorKind) -> i32 {
    match kind {
        ErrorKind::Usage => EXIT_USAGE,
        ErrorKind::Data => EXIT_DATA,
        ErrorKind::Internal => EXIT_INTERNAL,
    }
}

fn report(e: &Error) {
    eprintln!("error: {e}");
    let mut source = std::error::Error::source(e);
    while let Some(s) = source {
        eprintln!("  caused by: {s}");
        source = s.source();
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = configure_threads()
        .and_then(|()| build(&cli.command))
        .and_then(|run| commands::dispatch(&cli_extras(&cli.command), &run));
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            report(&e);
            exit_code(e.kind())
        }
    }
}

/// Command flags that do not belong in the persisted settings.
#[derive(Debug, Default)]
pub(crate) struct Extras {
    pub strict: bool,
    pub dump: bool,
    pub tagger_train: Option<PathBuf>,
    pub tagger_dictionary: Option<PathBuf>,
    pub tagger_iterations: usize,
}

fn cli_extras(command: &Command) -> Extras {
    match command {
        Command::Ingest { strict, .. } => Extras {
            strict: *strict,
            ..Extras::default()
        },
        Command::Phrases { dump, .. } => Extras {
            dump: *dump,
            ..Extras::default()
        },
        Command::TrainTagger {
            train,
            dictionary,
            iterations,
            ..
        } => Extras {
            tagger_train: train.clone(),
            tagger_dictionary: dictionary.clone(),
            tagger_iterations: *iterations,
            ..Extras::default()
        },
        _ => Extras::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn scheme_and_setting_lists() {
        assert_eq!(parse_schemes(&["all".into()]).unwrap(), Scheme::ALL);
        assert_eq!(parse_schemes(&["w2v-pape".into()]).unwrap(), [Scheme::W2vPape]);
        assert!(parse_schemes(&["bogus".into()]).is_err());
        assert_eq!(parse_settings(&["cross-domain".into()]).unwrap(), [Setting::CrossDomain]);
        assert_eq!(parse_settings(&["both".into()]).unwrap(), Setting::ALL);
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(["review-rating", "experiment"]), EXIT_USAGE);
        assert_eq!(run(["review-rating", "nonsense"]), EXIT_USAGE);
        assert_eq!(run(["review-rating", "--help"]), EXIT_OK);
    }
}
