use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::embeddings::{Scheme, Word2VecConfig};
use crate::error::{Error, Result};
use crate::eval::{ExperimentConfig, Setting, SynthSpec, DEFAULT_FOLDS};
use crate::models::{MlrConfig, DEFAULT_TOP_K};
use crate::seeds;

/// Fully resolved run settings. Layering: defaults, then the TOML config
/// file, then `--set key=value` overrides, then dedicated flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub seed: u64,
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// Keep only these domains when loading.
    pub domains: Option<Vec<String>>,
    pub min_length: usize,
    pub folds: usize,
    pub stratify: bool,
    pub settings: Vec<Setting>,
    pub schemes: Vec<Scheme>,
    pub top_k: usize,
    pub top_phrases: usize,
    pub max_distance: Option<usize>,
    pub paper_leakage: bool,
    pub test_domains: Option<Vec<String>>,
    pub model: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub tagger: Option<PathBuf>,
    pub lexicon_positive: Option<PathBuf>,
    pub lexicon_negative: Option<PathBuf>,
    pub embedding: Word2VecConfig,
    pub mlr: MlrConfig,
    pub synth: SynthSpec,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            seed: 1,
            data: None,
            out: None,
            domains: None,
            min_length: 0,
            folds: DEFAULT_FOLDS,
            stratify: false,
            settings: Setting::ALL.to_vec(),
            schemes: Scheme::ALL.to_vec(),
            top_k: DEFAULT_TOP_K,
            top_phrases: 10,
            max_distance: None,
            paper_leakage: false,
            test_domains: None,
            model: None,
            embeddings: None,
            tagger: None,
            lexicon_positive: None,
            lexicon_negative: None,
            embedding: Word2VecConfig::default(),
            mlr: MlrConfig::default(),
            synth: SynthSpec::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Ingest,
    Stats,
    Phrases,
    TrainEmbeddings,
    Featurize,
    Train,
    Evaluate,
    Experiment,
    Synth,
    TrainTagger,
    Config,
}

impl CommandKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CommandKind::Ingest => "ingest",
            CommandKind::Stats => "stats",
            CommandKind::Phrases => "phrases",
            CommandKind::TrainEmbeddings => "train-embeddings",
            CommandKind::Featurize => "featurize",
            CommandKind::Train => "train",
            CommandKind::Evaluate => "evaluate",
            CommandKind::Experiment => "experiment",
            CommandKind::Synth => "synth",
            CommandKind::TrainTagger => "train-tagger",
            CommandKind::Config => "config",
        }
    }

    fn needs_data(self) -> bool {
        !matches!(self, CommandKind::Synth | CommandKind::TrainTagger | CommandKind::Config)
    }

    fn needs_out(self) -> bool {
        !matches!(self, CommandKind::Stats | CommandKind::Phrases | CommandKind::Config)
    }
}

/// A validated command plus its settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub settings: Settings,
}

impl RunConfig {
    pub fn data(&self) -> &Path {
        self.settings.data.as_deref().expect("validated")
    }

    pub fn out(&self) -> Option<&Path> {
        self.settings.out.as_deref()
    }

    /// Single scheme of `featurize` and `train`.
    pub fn scheme(&self) -> Scheme {
        self.settings.schemes[0]
    }

    pub fn experiment_config(&self) -> ExperimentConfig {
        let s = &self.settings;
        ExperimentConfig {
            settings: s.settings.clone(),
            schemes: s.schemes.clone(),
            seed: s.seed,
            top_k: s.top_k,
            embedding: s.embedding.clone(),
            mlr: s.mlr.clone(),
            paper_leakage: s.paper_leakage,
            test_domains: s.test_domains.clone(),
            max_distance: s.max_distance,
        }
    }
}

/// Parses a config file and `key=value` overrides on top of the defaults.
/// Override keys are dotted paths (`embedding.dim=50`); values are TOML,
/// falling back to a bare string.
pub fn resolve(file: Option<&Path>, overrides: &[String]) -> Result<Settings> {
    let mut table = match file {
        Some(path) => {
            if !path.is_file() {
                return Err(Error::config("config", format!("{} does not exist", path.display())));
            }
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            text.parse::<toml::Table>()
                .map_err(|e| Error::config("config", format!("{}: {e}", path.display())))?
        }
        None => toml::Table::new(),
    };
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| Error::config("set", format!("`{item}` is not key=value")))?;
        set_path(&mut table, key.trim(), parse_value(raw.trim()))?;
    }
    settings_from_table(table)
}

pub fn settings_from_table(table: toml::Table) -> Result<Settings> {
    for section in ["embedding", "mlr"] {
        if let Some(toml::Value::Table(t)) = table.get(section) {
            if t.contains_key("seed") {
                return Err(Error::config(
                    format!("{section}.seed"),
                    "component seeds derive from the top-level `seed`",
                ));
            }
        }
    }
    toml::Value::Table(table)
        .try_into::<Settings>()
        .map_err(|e| Error::config(first_key(&e.to_string()), e.message().to_string()))
}

/// Best-effort name of the key a deserialization error points at.
fn first_key(message: &str) -> String {
    let between = |open: char, close: char| {
        let start = message.find(open)? + open.len_utf8();
        let end = message[start..].find(close)? + start;
        Some(message[start..end].to_string())
    };
    between('`', '`').unwrap_or_else(|| "config".into())
}

fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn set_path(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::config("set", format!("bad key `{key}`")));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::config(key, format!("`{p}` is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn prefixed(section: &str, r: Result<()>) -> Result<()> {
    r.map_err(|e| match e {
        Error::Config { key, reason } => Error::config(format!("{section}.{key}"), reason),
        other => other,
    })
}

fn existing(key: &str, path: &Option<PathBuf>) -> Result<()> {
    match path {
        Some(p) if !p.exists() => Err(Error::config(key, format!("{} does not exist", p.display()))),
        _ => Ok(()),
    }
}

/// Fills derived seeds and checks every constraint before any work starts.
/// Errors name the first offending key.
pub fn validate_config(command: CommandKind, mut settings: Settings) -> Result<RunConfig> {
    let s = &mut settings;
    if command.needs_data() && s.data.is_none() {
        return Err(Error::config("data", "an input corpus is required (--data)"));
    }
    existing("data", &s.data)?;
    if command.needs_out() && s.out.is_none() {
        return Err(Error::config("out", "an output directory is required (--out)"));
    }
    if let Some(out) = &s.out {
        if out.exists() && !out.is_dir() {
            return Err(Error::config("out", format!("{} is not a directory", out.display())));
        }
    }
    if command == CommandKind::Evaluate && s.model.is_none() {
        return Err(Error::config("model", "a trained model is required (--model)"));
    }
    existing("model", &s.model)?;
    existing("embeddings", &s.embeddings)?;
    existing("tagger", &s.tagger)?;
    existing("lexicon_positive", &s.lexicon_positive)?;
    existing("lexicon_negative", &s.lexicon_negative)?;
    if s.lexicon_positive.is_some() != s.lexicon_negative.is_some() {
        return Err(Error::config(
            "lexicon_positive",
            "lexicon_positive and lexicon_negative must be given together",
        ));
    }
    if s.folds < 2 {
        return Err(Error::config("folds", "must be at least 2"));
    }
    if s.settings.is_empty() {
        return Err(Error::config("settings", "at least one setting is required"));
    }
    if s.schemes.is_empty() {
        return Err(Error::config("schemes", "at least one scheme is required"));
    }
    if matches!(command, CommandKind::Featurize | CommandKind::Train) && s.schemes.len() != 1 {
        return Err(Error::config("schemes", "this command takes exactly one scheme (--scheme)"));
    }
    if command == CommandKind::Featurize && s.schemes[0].uses_embeddings() && s.embeddings.is_none() {
        return Err(Error::config("embeddings", "embedding schemes need --embeddings"));
    }
    if s.top_k == 0 {
        return Err(Error::config("top_k", "must be at least 1"));
    }
    if s.top_phrases == 0 {
        return Err(Error::config("top_phrases", "must be at least 1"));
    }
    for (key, list) in [("domains", &s.domains), ("test_domains", &s.test_domains)] {
        if list.as_ref().is_some_and(|l| l.is_empty()) {
            return Err(Error::config(key, "must name at least one domain"));
        }
    }
    prefixed("embedding", s.embedding.validate())?;
    prefixed("mlr", s.mlr.validate())?;
    prefixed("synth", s.synth.validate())?;
    s.embedding.seed = seeds::derive(s.seed, seeds::EMBEDDING);
    s.mlr.seed = seeds::derive(s.seed, seeds::MLR);
    Ok(RunConfig { command, settings })
}
