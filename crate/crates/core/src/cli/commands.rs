use std::collections::BTreeSet;
use std::fmt::{Display, Write as _};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::report;
use super::{CliError, EvalArgs, ExtractArgs, PredictArgs, PretrainArgs, TrainArgs};
use crate::atomic::write_atomic;
use crate::bitext::{
    extract_examples, read_bitext, read_examples, read_word_list, write_examples, BitextError, ForeignPrepInventory,
    SentencePair,
};
use crate::corpus::{
    apply_embeddings, build_vocab, read_conllu, read_embeddings, read_sense_annotations, read_spans, split_train_dev,
    CorpusError, EmbeddingFile, Namespace, PrepInstance, SenseInventory, Sentence,
};
use crate::models::{foreign_labels, Ensemble, ModelError, PretrainModel, SenseModel, SenseSpec};
use crate::training::{
    apply_external_embeddings, evaluate, pretrain as run_pretrain, train_sense, EmbeddingPlacement, TrainError,
    UNKNOWN_PREP,
};
use crate::Real;

fn data(e: impl Display) -> CliError {
    CliError::Data(e.to_string())
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        data(e)
    }
}

impl From<BitextError> for CliError {
    fn from(e: BitextError) -> Self {
        match e {
            BitextError::UnknownLanguage(_) => CliError::Usage(e.to_string()),
            e => data(e),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::MissingPretrained(_) | ModelError::InventoryMode => CliError::Usage(e.to_string()),
            ModelError::Nn(_) => CliError::Internal(e.to_string()),
            e => data(e),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Config(_) => CliError::Usage(e.to_string()),
            TrainError::Model(m) => m.into(),
            e => data(e),
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    write_atomic(path, bytes).map_err(|e| data(format!("{}: {e}", path.display())))
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, CliError> {
    ExperimentConfig::load(path).map_err(CliError::Usage)
}

fn load_sentences(path: &Path) -> Result<Vec<Arc<Sentence>>, CliError> {
    Ok(read_conllu(path)?.into_iter().map(Arc::new).collect())
}

fn external_embeddings(config: &ExperimentConfig) -> Result<Option<(EmbeddingFile, EmbeddingPlacement)>, CliError> {
    config
        .embeddings
        .as_ref()
        .map(|e| Ok((read_embeddings(&e.path)?, e.placement)))
        .transpose()
}

fn uses_encoder(p: EmbeddingPlacement) -> bool {
    matches!(p, EmbeddingPlacement::Encoder | EmbeddingPlacement::Both)
}

fn uses_features(p: EmbeddingPlacement) -> bool {
    matches!(p, EmbeddingPlacement::Features | EmbeddingPlacement::Both)
}

pub fn extract(a: &ExtractArgs) -> Result<(), CliError> {
    let mut inventory = ForeignPrepInventory::default();
    for item in &a.inventories {
        let (lang, path) = item
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--inventory expects LANG=PATH, got `{item}`")))?;
        inventory.insert(lang, read_word_list(path)?);
    }
    if inventory.get(&a.lang).is_none() {
        return Err(CliError::Usage(format!(
            "language `{}` has no --inventory entry",
            a.lang
        )));
    }
    let preps = read_word_list(&a.preps)?;
    let pairs = read_bitext(&a.en, &a.foreign, &a.align, &a.lang)?.collect::<Result<Vec<SentencePair>, _>>()?;
    let (examples, stats) = extract_examples(&pairs, &preps, &inventory, &a.lang)?;

    let mut tsv = Vec::new();
    write_examples(&mut tsv, &examples).map_err(data)?;
    let mut csv = String::from("english_prep,foreign,candidates,kept\n");
    for l in &stats.labels {
        let _ = writeln!(csv, "{},{},{},{}", l.english_prep, l.foreign, l.candidates, l.kept);
    }
    let stats_path = a.stats.clone().unwrap_or_else(|| {
        let mut p = a.out.clone().into_os_string();
        p.push(".stats.csv");
        PathBuf::from(p)
    });
    write_file(&stats_path, csv.as_bytes())?;
    write_file(&a.out, &tsv)?;
    eprintln!(
        "pairs={} occurrences={} candidates={} kept={}",
        pairs.len(),
        stats.occurrences,
        stats.candidates,
        stats.kept
    );
    Ok(())
}

pub fn pretrain(a: &PretrainArgs) -> Result<(), CliError> {
    let config = load_config(a.config.as_deref())?;
    let mut examples = Vec::new();
    for p in &a.examples {
        examples.extend(read_examples(p)?);
    }
    let languages = &config.pretraining.languages;
    if !languages.is_empty() {
        examples.retain(|ex| languages.contains(&ex.language));
    }
    if examples.is_empty() {
        return Err(data("empty pretraining set"));
    }
    let k = config.pretraining.heldout_every;
    let (mut train, mut heldout) = (Vec::new(), Vec::new());
    for (i, ex) in examples.into_iter().enumerate() {
        if k > 1 && i % k == k - 1 {
            heldout.push(ex);
        } else {
            train.push(ex);
        }
    }

    let mut dims = config.model_dims();
    let embeddings = external_embeddings(&config)?.filter(|(_, p)| uses_encoder(*p));
    if let Some((file, _)) = &embeddings {
        dims.encoder.word = file.dim.unwrap_or(dims.encoder.word);
    }
    let vocab = build_vocab([], &[], &train);
    let mut model = PretrainModel::<Real>::new(vocab, dims, config.seed, &foreign_labels(&train))?;
    if let Some((file, _)) = &embeddings {
        let id = model.encoder.word;
        apply_embeddings(file, &model.vocab, Namespace::Wordform, model.store.get_mut(id))?;
    }
    run_pretrain(&mut model, &train, &heldout, &config.pretrain_config())?;
    model.save(&a.out_model)?;
    Ok(())
}

pub fn train(a: &TrainArgs) -> Result<(), CliError> {
    let config = load_config(a.config.as_deref())?;
    let sentences_path = a
        .sentences
        .clone()
        .or_else(|| config.data.sentences.clone())
        .ok_or_else(|| CliError::Usage("no sentences: pass --sentences or set data.sentences".into()))?;
    let sentences = load_sentences(&sentences_path)?;
    let inventory = match &config.data.inventory {
        Some(p) => SenseInventory::read(p)?,
        None => SenseInventory::coarse(),
    };
    let annotated = read_sense_annotations(&a.train, &sentences, &inventory)?;
    let (train, dev) = match &a.dev {
        Some(p) => (annotated, read_sense_annotations(p, &sentences, &inventory)?),
        None => split_train_dev(&annotated),
    };
    if train.is_empty() {
        return Err(data("empty training set"));
    }
    if dev.is_empty() {
        return Err(data("empty development set"));
    }

    let pretrained = if config.variant.needs_pretrained() {
        let path = a
            .pretrained_encoder
            .as_ref()
            .ok_or_else(|| CliError::Usage(format!("the {:?} variant needs --pretrained-encoder", config.variant)))?;
        Some(PretrainModel::<Real>::load(path)?)
    } else {
        None
    };

    let mut dims = config.model_dims();
    let embeddings = external_embeddings(&config)?;
    if let Some((file, placement)) = &embeddings {
        if let Some(d) = file.dim {
            if uses_encoder(*placement) {
                dims.encoder.word = d;
            }
            if uses_features(*placement) {
                dims.features.lemma = d;
            }
        }
    }
    let spec = SenseSpec {
        variant: config.variant,
        mode: config.mode,
        dims,
        seed: config.seed,
    };
    let vocab = build_vocab(train.iter().map(|i| &*i.sentence), &train, &[]);
    let preps: BTreeSet<String> = train.iter().map(PrepInstance::preposition).collect();
    let mut model = SenseModel::new(spec, vocab, inventory, &preps, pretrained.as_ref())?;
    if let Some((file, placement)) = &embeddings {
        apply_external_embeddings(&mut model, file, *placement)?;
    }
    let outcome = train_sense(model, &train, &dev, &config.sense_config())?;
    println!(
        "best_epoch={} dev_acc={:.4}",
        outcome.best_epoch, outcome.best_dev_accuracy
    );
    outcome.model.save(&a.out_model)?;
    Ok(())
}

pub fn eval(a: &EvalArgs) -> Result<(), CliError> {
    let models = a
        .models
        .par_iter()
        .map(SenseModel::<Real>::load)
        .collect::<Result<Vec<_>, _>>()?;
    let sentences = load_sentences(&a.sentences)?;
    let test = read_sense_annotations(&a.test, &sentences, &models[0].inventory)?;
    if test.is_empty() {
        return Err(data("empty test set"));
    }
    let count = models.len();
    let report = if count == 1 {
        evaluate(&models[0], &test)?
    } else {
        evaluate(&Ensemble::new(models)?, &test)?
    };
    std::fs::create_dir_all(&a.report_dir).map_err(|e| data(format!("{}: {e}", a.report_dir.display())))?;
    let summary = report::summary(&report, count);
    for (name, body) in [
        ("per_preposition.csv", report::tally_csv(&report.per_preposition)),
        ("per_sense.csv", report::tally_csv(&report.per_sense)),
        ("confusion.csv", report::confusion_csv(&report)),
        ("summary.txt", summary.clone()),
    ] {
        write_file(&a.report_dir.join(name), body.as_bytes())?;
    }
    print!("{summary}");
    Ok(())
}

pub fn predict(a: &PredictArgs) -> Result<(), CliError> {
    let model = SenseModel::<Real>::load(&a.model)?;
    let sentences = load_sentences(&a.input_conllu)?;
    let spans = read_spans(&a.spans, &sentences)?;
    let labels = spans
        .par_iter()
        .map(|inst| match model.predict(inst) {
            Ok(l) => Ok(l.to_string()),
            Err(ModelError::UnknownPreposition(_)) => Ok(UNKNOWN_PREP.to_string()),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = String::new();
    for (inst, label) in spans.iter().zip(&labels) {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            inst.sentence.id,
            inst.span.start,
            inst.span.end,
            inst.preposition(),
            label
        );
    }
    match &a.out {
        Some(p) => write_file(p, out.as_bytes()),
        None => std::io::stdout().lock().write_all(out.as_bytes()).map_err(data),
    }
}
