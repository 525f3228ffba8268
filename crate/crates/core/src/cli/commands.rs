use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::json;

use super::config::{CommandKind, RunConfig};
use super::Extras;
use crate::aspects::{rank_phrases, write_phrase_dump, AspectExtractor, AspectPhrase};
use crate::corpus::{load_reviews, LoadOptions, ReviewSet, Stars};
use crate::embeddings::{featurize_tokens, train_word2vec, training_tokens, EmbeddingModel, Scheme};
use crate::error::{Error, Result};
use crate::eval::{make_fold_plan_with, mae, rmse, run_experiment, synth_corpus, FoldOptions, Setting};
use crate::lexicon::SentimentLexicon;
use crate::models::{
    bl_featurize_tokens, select_top_k_unigrams, train_mlr, Predictor, SavedModel, UnigramVocab,
};
use crate::seeds;
use crate::textproc::{parse_tagged_corpus, train_tagger, PerceptronTagger, TaggerTrainConfig};
use crate::textproc::{BUNDLED_DICTIONARY, BUNDLED_TRAINING};

pub(crate) fn dispatch(extras: &Extras, run: &RunConfig) -> Result<()> {
    let mut out = Outputs::new(run);
    match run.command {
        CommandKind::Ingest => ingest(run, extras, &mut out)?,
        CommandKind::Stats => stats(run, &mut out)?,
        CommandKind::Phrases => phrases(run, extras, &mut out)?,
        CommandKind::TrainEmbeddings => train_embeddings(run, &mut out)?,
        CommandKind::Featurize => featurize(run, &mut out)?,
        CommandKind::Train => train(run, &mut out)?,
        CommandKind::Evaluate => evaluate(run, &mut out)?,
        CommandKind::Experiment => experiment(run, &mut out)?,
        CommandKind::Synth => synth(run, &mut out)?,
        CommandKind::TrainTagger => tagger(run, extras, &mut out)?,
        CommandKind::Config => {
            print!("{}", settings_toml(run)?);
            return Ok(());
        }
    }
    out.finish(run)
}

/// Resolved settings as a reusable config file. Component seeds are left
/// out because they derive from `seed`.
pub(crate) fn settings_toml(run: &RunConfig) -> Result<String> {
    let internal = |e: &dyn std::fmt::Display| Error::Internal(e.to_string());
    let mut settings = run.settings.clone();
    if i64::try_from(settings.seed).is_err() {
        return Err(Error::config("seed", "TOML integers stop at 2^63 - 1"));
    }
    settings.embedding.seed = 0;
    settings.mlr.seed = 0;
    let mut value = toml::Value::try_from(&settings).map_err(|e| internal(&e))?;
    for section in ["embedding", "mlr"] {
        if let Some(t) = value.get_mut(section).and_then(toml::Value::as_table_mut) {
            t.remove("seed");
        }
    }
    toml::to_string(&value).map_err(|e| internal(&e))
}

/// Declared output files of one run, written under the output directory,
/// or to stdout when no directory is given.
struct Outputs {
    dir: Option<PathBuf>,
    written: Vec<String>,
    inputs: Vec<PathBuf>,
    notes: serde_json::Map<String, serde_json::Value>,
}

impl Outputs {
    fn new(run: &RunConfig) -> Outputs {
        let s = &run.settings;
        let inputs = [&s.data, &s.model, &s.embeddings, &s.tagger, &s.lexicon_positive, &s.lexicon_negative]
            .into_iter()
            .flatten()
            .filter_map(|p| p.canonicalize().ok())
            .collect();
        Outputs {
            dir: run.out().map(Path::to_path_buf),
            written: Vec::new(),
            inputs,
            notes: serde_json::Map::new(),
        }
    }

    fn note(&mut self, key: &str, value: serde_json::Value) {
        self.notes.insert(key.into(), value);
    }

    /// Opens `name` for writing; stdout when the run has no output directory.
    fn create(&mut self, name: &str) -> Result<Box<dyn Write>> {
        let Some(dir) = &self.dir else {
            return Ok(Box::new(std::io::stdout().lock()));
        };
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(name);
        if let Ok(canon) = path.canonicalize() {
            if self.inputs.contains(&canon) {
                return Err(Error::config("out", format!("{} would overwrite an input", path.display())));
            }
        }
        let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
        self.written.push(name.to_string());
        Ok(Box::new(BufWriter::new(f)))
    }

    fn path(&self, name: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(name))
    }

    /// Writes `manifest.json` next to the outputs.
    fn finish(self, run: &RunConfig) -> Result<()> {
        let Some(dir) = &self.dir else {
            return Ok(());
        };
        let s = &run.settings;
        let created = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        let manifest = json!({
            "tool": "review-rating",
            "version": env!("CARGO_PKG_VERSION"),
            "command": run.command.as_str(),
            "created_unix": created,
            "seed": s.seed,
            "sub_seeds": {
                seeds::FOLD: seeds::derive(s.seed, seeds::FOLD),
                seeds::EMBEDDING: seeds::derive(s.seed, seeds::EMBEDDING),
                seeds::MLR: seeds::derive(s.seed, seeds::MLR),
                seeds::SYNTH: seeds::derive(s.seed, seeds::SYNTH),
            },
            "components": {
                "tagger": s.tagger.as_ref().map_or("bundled".into(), |p| p.display().to_string()),
                "lexicon": s.lexicon_positive.as_ref().map_or("bundled".into(), |p| p.display().to_string()),
            },
            "config": s,
            "outputs": self.written,
            "details": self.notes,
        });
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Internal(e.to_string()))?;
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::Internal(format!("write failed: {e}"))
}

fn load(run: &RunConfig, out: &mut Outputs) -> Result<ReviewSet> {
    let s = &run.settings;
    let opts = LoadOptions {
        domains: s.domains.as_ref().map(|d| d.iter().cloned().collect()),
        min_length: s.min_length,
    };
    let report = load_reviews(run.data(), &opts)?;
    if !report.rejections.is_empty() {
        eprintln!(
            "warning: {} of {} lines rejected (first: line {}: {})",
            report.rejections.len(),
            report.total_lines,
            report.rejections[0].line,
            report.rejections[0].reason
        );
    }
    out.note("reviews", json!(report.set.len()));
    out.note("rejected_lines", json!(report.rejections.len()));
    if report.set.is_empty() {
        return Err(Error::InvalidInput(format!("{}: no valid reviews", run.data().display())));
    }
    Ok(report.set)
}

fn lexicon(run: &RunConfig) -> Result<Cow<'static, SentimentLexicon>> {
    match (&run.settings.lexicon_positive, &run.settings.lexicon_negative) {
        (Some(p), Some(n)) => Ok(Cow::Owned(SentimentLexicon::load(p, n)?)),
        _ => Ok(Cow::Borrowed(SentimentLexicon::shared())),
    }
}

fn tagger_model(run: &RunConfig) -> Result<Cow<'static, PerceptronTagger>> {
    match &run.settings.tagger {
        Some(p) => Ok(Cow::Owned(PerceptronTagger::load(p)?)),
        None => Ok(Cow::Borrowed(PerceptronTagger::shared())),
    }
}

fn extract(run: &RunConfig, set: &ReviewSet) -> Result<Vec<Vec<AspectPhrase>>> {
    let lex = lexicon(run)?;
    let tagger = tagger_model(run)?;
    Ok(AspectExtractor::new(&lex, tagger.as_ref())
        .with_max_distance(run.settings.max_distance)
        .extract_all(set))
}

fn csv_writer(w: Box<dyn Write>) -> csv::Writer<Box<dyn Write>> {
    csv::Writer::from_writer(w)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Internal(format!("csv write failed: {e}"))
}

fn ingest(run: &RunConfig, extras: &Extras, out: &mut Outputs) -> Result<()> {
    let s = &run.settings;
    let opts = LoadOptions {
        domains: s.domains.as_ref().map(|d| d.iter().cloned().collect()),
        min_length: s.min_length,
    };
    let report = load_reviews(run.data(), &opts)?;
    let mut w = out.create("reviews.jsonl")?;
    report.set.write_jsonl(&mut w).map_err(io_err)?;
    w.flush().map_err(io_err)?;
    report.write_rejections_csv(out.create("rejections.csv")?)?;
    out.note("reviews", json!(report.set.len()));
    out.note("rejected_lines", json!(report.rejections.len()));
    out.note("total_lines", json!(report.total_lines));
    eprintln!(
        "{} reviews accepted, {} lines rejected",
        report.set.len(),
        report.rejections.len()
    );
    if extras.strict {
        if let Some(r) = report.rejections.first() {
            return Err(Error::Record {
                line: r.line,
                reason: r.reason.clone(),
            });
        }
    }
    Ok(())
}

fn stats(run: &RunConfig, out: &mut Outputs) -> Result<()> {
    let set = load(run, out)?;
    set.star_distribution().write_csv(out.create("star_distribution.csv")?)
}

fn phrases(run: &RunConfig, extras: &Extras, out: &mut Outputs) -> Result<()> {
    let set = load(run, out)?;
    let phrases = extract(run, &set)?;
    rank_phrases(&set, &phrases, run.settings.top_phrases).write_csv(out.create("salient_phrases.csv")?)?;
    if extras.dump {
        let rows = set.iter().zip(&phrases).map(|(r, p)| (r.id.as_str(), p.as_slice()));
        write_phrase_dump(out.create("phrases.csv")?, rows)?;
    }
    out.note("phrases", json!(phrases.iter().map(Vec::len).sum::<usize>()));
    Ok(())
}

fn write_embeddings(model: &EmbeddingModel, out: &mut Outputs) -> Result<()> {
    let mut w = out.create("embeddings.txt")?;
    model.write_text(&mut w).map_err(io_err)?;
    w.flush().map_err(io_err)?;
    let mut w = csv_writer(out.create("embedding_loss.csv")?);
    w.write_record(["epoch", "loss"]).map_err(csv_err)?;
    for (i, l) in model.epoch_losses.iter().enumerate() {
        w.write_record([(i + 1).to_string(), format!("{l:.6}")]).map_err(csv_err)?;
    }
    w.flush().map_err(io_err)?;
    out.note("vocabulary", json!(model.len()));
    Ok(())
}

fn train_embeddings(run: &RunConfig, out: &mut Outputs) -> Result<()> {
    let set = load(run, out)?;
    let model = train_word2vec(&set, &run.settings.embedding)?;
    write_embeddings(&model, out)
}

/// Feature rows for `set` under `scheme`.
fn feature_rows(
    run: &RunConfig,
    set: &ReviewSet,
    scheme: Scheme,
    vocab: Option<&UnigramVocab>,
    embeddings: Option<&EmbeddingModel>,
) -> Result<Vec<Vec<f64>>> {
    let tokens: Vec<Vec<String>> = set.iter().map(|r| training_tokens(&r.text)).collect();
    if scheme == Scheme::Bl {
        let vocab = vocab.expect("bl rows need a vocabulary");
        return Ok(tokens.iter().map(|t| bl_featurize_tokens(t, vocab).to_dense()).collect());
    }
    let model = embeddings.expect("embedding rows need vectors");
    let phrases = if scheme == Scheme::W2v {
        vec![Vec::new(); set.len()]
    } else {
        extract(run, set)?
    };
    tokens
        .iter()
        .zip(&phrases)
        .map(|(t, p)| Ok(featurize_tokens(model, t, p, scheme)?.to_dense()))
        .collect()
}

fn featurize(run: &RunConfig, out: &mut Outputs) -> Result<()> {
    let set = load(run, out)?;
    let scheme = run.scheme();
    let (vocab, embeddings) = if scheme == Scheme::Bl {
        let vocab = select_top_k_unigrams(&set, run.settings.top_k)?;
        let mut w = out.create("vocab.txt")?;
        for word in vocab.words() {
            writeln!(w, "{word}").map_err(io_err)?;
        }
        w.flush().map_err(io_err)?;
        (Some(vocab), None)
    } else {
        let path = run.settings.embeddings.as_deref().expect("validated");
        (None, Some(EmbeddingModel::load(path)?))
    };
    let rows = feature_rows(run, &set, scheme, vocab.as_ref(), embeddings.as_ref())?;
    let dim = rows.first().map_or(0, Vec::len);
    let mut w = csv_writer(out.create("features.csv")?);
    let mut header = vec!["review_id".to_string(), "domain".into(), "stars".into()];
    header.extend((1..=dim).map(|i| format!("f{i}")));
    w.write_record(&header).map_err(csv_err)?;
    for (r, row) in set.iter().zip(&rows) {
        let mut rec = vec![r.id.clone(), r.domain.clone(), r.stars.to_string()];
        rec.extend(row.iter().map(|x| x.to_string()));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(io_err)?;
    out.note("feature_dim", json!(dim));
    Ok(())
}

fn train(run: &RunConfig, out: &mut Outputs) -> Result<()> {
    let set = load(run, out)?;
    let scheme = run.scheme();
    let s = &run.settings;
    let (vocab, embeddings, reference) = if scheme == Scheme::Bl {
        (Some(select_top_k_unigrams(&set, s.top_k)?), None, None)
    } else if let Some(path) = &s.embeddings {
        (None, Some(EmbeddingModel::load(path)?), Some(path.display().to_string()))
    } else {
        let model = train_word2vec(&set, &s.embedding)?;
        write_embeddings(&model, out)?;
        (None, Some(model), Some("embeddings.txt".to_string()))
    };
    let rows = feature_rows(run, &set, scheme, vocab.as_ref(), embeddings.as_ref())?;
    let labels: Vec<Stars> = set.iter().map(|r| r.stars).collect();
    let model = train_mlr(&rows, &labels, &s.mlr)?;
    let saved = SavedModel::new(scheme, model, vocab, reference)?;
    let mut w = out.create("model.json")?;
    w.write_all(saved.to_json().as_bytes()).map_err(io_err)?;
    w.flush().map_err(io_err)?;
    out.note("feature_dim", json!(saved.feature_dim));
    Ok(())
}

fn evaluate(run: &RunConfig, out: &mut Outputs) -> Result<()> {
    let set = load(run, out)?;
    let model_path = run.settings.model.as_deref().expect("validated");
    let predictor = match &run.settings.embeddings {
        Some(p) => Predictor::new(SavedModel::load(model_path)?, Some(EmbeddingModel::load(p)?))?,
        None => Predictor::load(model_path)?,
    };
    let phrases = if matches!(predictor.scheme(), Scheme::W2vApe | Scheme::W2vPape) {
        extract(run, &set)?
    } else {
        vec![Vec::new(); set.len()]
    };
    let preds: Vec<Stars> = set
        .iter()
        .zip(&phrases)
        .map(|(r, p)| predictor.predict(&training_tokens(&r.text), p))
        .collect::<Result<_>>()?;

    let mut w = csv_writer(out.create("predictions.csv")?);
    w.write_record(["review_id", "domain", "stars", "predicted"]).map_err(csv_err)?;
    for (r, p) in set.iter().zip(&preds) {
        w.write_record([r.id.as_str(), &r.domain, &r.stars.to_string(), &p.to_string()])
            .map_err(csv_err)?;
    }
    w.flush().map_err(io_err)?;

    let mut groups: BTreeMap<&str, (Vec<Stars>, Vec<Stars>)> = BTreeMap::new();
    for (r, &p) in set.iter().zip(&preds) {
        let g = groups.entry(r.domain.as_str()).or_default();
        g.0.push(p);
        g.1.push(r.stars);
    }
    let truths: Vec<Stars> = set.iter().map(|r| r.stars).collect();
    let mut w = csv_writer(out.create("metrics.csv")?);
    w.write_record(["domain", "n", "mae", "rmse"]).map_err(csv_err)?;
    let all = [("all", (&preds, &truths))];
    let rows = groups.iter().map(|(d, (p, t))| (*d, (p, t))).chain(all);
    for (domain, (p, t)) in rows {
        w.write_record([
            domain,
            &p.len().to_string(),
            &format!("{:.6}", mae(p, t)?),
            &format!("{:.6}", rmse(p, t)?),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(io_err)
}

fn experiment(run: &RunConfig, out: &mut Outputs) -> Result<()> {
    let set = load(run, out)?;
    let s = &run.settings;
    let plan = make_fold_plan_with(
        &set,
        s.folds,
        seeds::derive(s.seed, seeds::FOLD),
        FoldOptions { stratify: s.stratify },
    )?;
    let lex = lexicon(run)?;
    let tagger = tagger_model(run)?;
    let report = run_experiment(&set, &plan, &run.experiment_config(), &lex, tagger.as_ref())?;
    plan.write_csv(out.create("fold_plan.csv")?)?;
    report.write_folds_csv(out.create("folds.csv")?)?;
    report.write_aggregate_csv(out.create("aggregate.csv")?)?;
    if s.settings.contains(&Setting::InDomain) {
        report.write_bid_csv(out.create("bid.csv")?)?;
    }
    for r in &report.aggregates {
        eprintln!(
            "{:<20} {:<12} {:<9} mae {:.4} rmse {:.4}",
            r.domain,
            r.setting.as_str(),
            r.scheme.as_str(),
            r.mae,
            r.rmse
        );
    }
    Ok(())
}

fn synth(run: &RunConfig, out: &mut Outputs) -> Result<()> {
    let seed = seeds::derive(run.settings.seed, seeds::SYNTH);
    let set = synth_corpus(&run.settings.synth, seed)?;
    let mut w = out.create("corpus.jsonl")?;
    set.write_jsonl(&mut w).map_err(io_err)?;
    w.flush().map_err(io_err)?;
    out.note("reviews", json!(set.len()));
    if let Some(p) = out.path("corpus.jsonl") {
        eprintln!("wrote {} reviews to {}", set.len(), p.display());
    }
    Ok(())
}

fn tagger(run: &RunConfig, extras: &Extras, out: &mut Outputs) -> Result<()> {
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| Error::io(p, e));
    let training = match &extras.tagger_train {
        Some(p) => Cow::Owned(read(p)?),
        None => Cow::Borrowed(BUNDLED_TRAINING),
    };
    let dictionary = match &extras.tagger_dictionary {
        Some(p) => Cow::Owned(read(p)?),
        None => Cow::Borrowed(BUNDLED_DICTIONARY),
    };
    if extras.tagger_iterations == 0 {
        return Err(Error::config("iterations", "must be at least 1"));
    }
    let config = TaggerTrainConfig {
        iterations: extras.tagger_iterations,
        seed: seeds::derive(run.settings.seed, "tagger"),
    };
    let sentences = parse_tagged_corpus(&training)?;
    let model = train_tagger(&sentences, &dictionary, &config)?;
    let mut w = out.create("tagger.model")?;
    w.write_all(model.to_model_string().as_bytes()).map_err(io_err)?;
    w.flush().map_err(io_err)?;
    out.note("sentences", json!(sentences.len()));
    Ok(())
}
