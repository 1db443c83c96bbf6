//! SGD loops, early stopping, evaluation and multi-seed experiments.

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitext::TranslationExample;
use crate::corpus::{
    accuracy_ratio, apply_embeddings, CorpusError, EmbeddingFile, MostFrequentSense, Namespace, PrepInstance,
};
use crate::encoder::CONTEXT_PREFIX;
use crate::models::{Ensemble, ModelError, PretrainModel, SenseModel};
use crate::scalar::Scalar;

/// Prediction written for instances whose preposition has no classifier.
pub const UNKNOWN_PREP: &str = "UNKNOWN_PREP";

/// Stream of the seeded generator reserved for example shuffling.
const SHUFFLE_STREAM: u64 = 1;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("empty {0}")]
    EmptyData(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Print one progress line per epoch to standard output.
    pub verbose: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 5,
            learning_rate: 0.1,
            seed: 1,
            verbose: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.epochs == 0 {
            return Err(TrainError::Config("epochs must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(TrainError::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }

    fn shuffler(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(SHUFFLE_STREAM);
        rng
    }
}

/// Statistics of one finished epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochStats {
    /// 1-based.
    pub epoch: usize,
    /// Mean per-example loss over the epoch.
    pub train_loss: f64,
    pub dev_accuracy: Option<f64>,
}

impl EpochStats {
    pub fn progress_line(&self) -> String {
        match self.dev_accuracy {
            Some(acc) => format!(
                "epoch={} train_loss={:.6} dev_acc={:.4}",
                self.epoch, self.train_loss, acc
            ),
            None => format!("epoch={} train_loss={:.6}", self.epoch, self.train_loss),
        }
    }
}

fn report(config: &TrainConfig, stats: &EpochStats) {
    if config.verbose {
        let mut out = std::io::stdout().lock();
        let _ = writeln!(out, "{}", stats.progress_line());
    }
}

/// Per-example visiting order of every epoch; depends only on the seed.
pub fn epoch_orders(config: &TrainConfig, n: usize) -> Vec<Vec<usize>> {
    let mut rng = config.shuffler();
    let mut order: Vec<usize> = (0..n).collect();
    (0..config.epochs)
        .map(|_| {
            order.shuffle(&mut rng);
            order.clone()
        })
        .collect()
}

/// Accuracy of foreign-preposition prediction; unseen labels or languages count as wrong.
pub fn pretrain_accuracy<T: Scalar>(model: &PretrainModel<T>, examples: &[TranslationExample]) -> f64 {
    let correct = examples
        .par_iter()
        .filter(|ex| {
            model
                .prepare(ex)
                .ok()
                .and_then(|p| Some(model.predict_index(&p).ok()? == p.label?))
                .unwrap_or(false)
        })
        .count();
    accuracy_ratio(correct, examples.len())
}

/// Multi-task pretraining over all languages. No early stopping; `heldout`
/// is only measured.
pub fn pretrain<T: Scalar>(
    model: &mut PretrainModel<T>,
    examples: &[TranslationExample],
    heldout: &[TranslationExample],
    config: &TrainConfig,
) -> Result<Vec<EpochStats>, TrainError> {
    config.validate()?;
    if examples.is_empty() {
        return Ok(Vec::new());
    }
    let prepared = examples
        .iter()
        .map(|ex| model.prepare(ex))
        .collect::<Result<Vec<_>, _>>()?;
    let lr = T::from_f64_lossy(config.learning_rate);
    let mut stats = Vec::with_capacity(config.epochs);
    for (k, order) in epoch_orders(config, prepared.len()).into_iter().enumerate() {
        let mut total = 0.0;
        for i in order {
            total += model.train_step(&prepared[i], lr)?.as_f64();
        }
        let s = EpochStats {
            epoch: k + 1,
            train_loss: total / prepared.len() as f64,
            dev_accuracy: (!heldout.is_empty()).then(|| pretrain_accuracy(model, heldout)),
        };
        report(config, &s);
        stats.push(s);
    }
    Ok(stats)
}

/// The model of the best dev epoch and the full curve.
#[derive(Clone, Debug)]
pub struct TrainOutcome<T> {
    pub model: SenseModel<T>,
    pub epochs: Vec<EpochStats>,
    /// 1-based epoch whose parameters `model` holds.
    pub best_epoch: usize,
    pub best_dev_accuracy: f64,
}

/// Sense fine-tuning with early stopping on `dev`.
pub fn train_sense<T: Scalar>(
    model: SenseModel<T>,
    train: &[PrepInstance],
    dev: &[PrepInstance],
    config: &TrainConfig,
) -> Result<TrainOutcome<T>, TrainError> {
    if dev.is_empty() {
        return Err(TrainError::EmptyData("development set"));
    }
    train_sense_with(model, train, config, |m, _| Ok(evaluate(m, dev)?.accuracy()))
}

/// As [`train_sense`], with the per-epoch dev score supplied by `dev_score`
/// (called with the model and the 1-based epoch).
pub fn train_sense_with<T, F>(
    mut model: SenseModel<T>,
    train: &[PrepInstance],
    config: &TrainConfig,
    mut dev_score: F,
) -> Result<TrainOutcome<T>, TrainError>
where
    T: Scalar,
    F: FnMut(&SenseModel<T>, usize) -> Result<f64, TrainError>,
{
    config.validate()?;
    if train.is_empty() {
        return Err(TrainError::EmptyData("training set"));
    }
    let prepared = train
        .iter()
        .map(|inst| {
            let p = model.prepare(inst)?;
            match p.gold {
                Some(_) => Ok(p),
                None => Err(ModelError::MissingGold(p.prep)),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let lr = T::from_f64_lossy(config.learning_rate);
    let mut stats = Vec::with_capacity(config.epochs);
    let mut best: Option<(usize, f64, crate::nn::ParamStore<T>)> = None;
    for (k, order) in epoch_orders(config, prepared.len()).into_iter().enumerate() {
        let mut total = 0.0;
        for i in order {
            total += model.train_step(&prepared[i], lr)?.as_f64();
        }
        let acc = dev_score(&model, k + 1)?;
        let s = EpochStats {
            epoch: k + 1,
            train_loss: total / prepared.len() as f64,
            dev_accuracy: Some(acc),
        };
        report(config, &s);
        stats.push(s);
        if best.as_ref().is_none_or(|(_, b, _)| acc > *b) {
            best = Some((k + 1, acc, model.store.clone()));
        }
    }
    let (best_epoch, best_dev_accuracy, store) = best.expect("at least one epoch");
    model.store = store;
    Ok(TrainOutcome {
        model,
        epochs: stats,
        best_epoch,
        best_dev_accuracy,
    })
}

/// Anything that assigns a sense label to an instance.
pub trait Predictor: Sync {
    fn predict_label(&self, inst: &PrepInstance) -> Result<String, ModelError>;
}

impl<T: Scalar> Predictor for SenseModel<T> {
    fn predict_label(&self, inst: &PrepInstance) -> Result<String, ModelError> {
        self.predict(inst).map(str::to_string)
    }
}

impl<T: Scalar> Predictor for Ensemble<T> {
    fn predict_label(&self, inst: &PrepInstance) -> Result<String, ModelError> {
        self.predict(inst).map(str::to_string)
    }
}

impl Predictor for MostFrequentSense {
    fn predict_label(&self, inst: &PrepInstance) -> Result<String, ModelError> {
        Ok(self.predict(inst).to_string())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Tally {
    pub correct: usize,
    pub total: usize,
}

impl Tally {
    pub fn incorrect(&self) -> usize {
        self.total - self.correct
    }

    fn add(&mut self, correct: bool) {
        self.total += 1;
        self.correct += usize::from(correct);
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalReport {
    pub overall: Tally,
    pub per_preposition: BTreeMap<String, Tally>,
    /// Grouped by each instance's first gold sense.
    pub per_sense: BTreeMap<String, Tally>,
    /// `(first gold sense, prediction) -> count`.
    pub confusion: BTreeMap<(String, String), usize>,
    /// Predicted label per instance, in input order.
    pub predictions: Vec<String>,
}

impl EvalReport {
    pub fn accuracy(&self) -> f64 {
        accuracy_ratio(self.overall.correct, self.overall.total)
    }
}

/// Correct iff the prediction is one of the gold senses. Prepositions
/// without a classifier are predicted as [`UNKNOWN_PREP`] and counted wrong.
pub fn evaluate<P: Predictor + ?Sized>(model: &P, data: &[PrepInstance]) -> Result<EvalReport, TrainError> {
    let predictions = data
        .par_iter()
        .map(|inst| {
            if inst.gold.as_ref().is_none_or(|g| g.is_empty()) {
                return Err(ModelError::MissingGold(inst.preposition()));
            }
            match model.predict_label(inst) {
                Err(ModelError::UnknownPreposition(_)) => Ok(UNKNOWN_PREP.to_string()),
                other => other,
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut report = EvalReport::default();
    for (inst, pred) in data.iter().zip(&predictions) {
        let ok = inst.is_correct(pred);
        let gold = inst.primary_sense().expect("checked above").to_string();
        report.overall.add(ok);
        report.per_preposition.entry(inst.preposition()).or_default().add(ok);
        report.per_sense.entry(gold.clone()).or_default().add(ok);
        *report.confusion.entry((gold, pred.clone())).or_default() += 1;
    }
    report.predictions = predictions;
    Ok(report)
}

/// Where external word vectors are loaded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingPlacement {
    /// Word tables of the context encoders.
    Encoder,
    /// The lemma feature table.
    Features,
    Both,
}

/// Copies external vectors into the tables chosen by `placement`; returns
/// rows copied. A transferred pretrained encoder keeps its own word table.
pub fn apply_external_embeddings<T: Scalar>(
    model: &mut SenseModel<T>,
    file: &EmbeddingFile,
    placement: EmbeddingPlacement,
) -> Result<usize, TrainError> {
    let mut copied = 0;
    if matches!(placement, EmbeddingPlacement::Encoder | EmbeddingPlacement::Both) {
        let pretrained = model.spec.variant.needs_pretrained();
        let tables: Vec<_> = model
            .encoders
            .iter()
            .filter(|e| !(pretrained && e.prefix == CONTEXT_PREFIX))
            .map(|e| e.word)
            .collect();
        for id in tables {
            copied += apply_embeddings(file, &model.vocab, Namespace::Wordform, model.store.get_mut(id))?;
        }
    }
    if matches!(placement, EmbeddingPlacement::Features | EmbeddingPlacement::Both) {
        let id = model.features.lemma;
        copied += apply_embeddings(file, &model.vocab, Namespace::Lemma, model.store.get_mut(id))?;
    }
    Ok(copied)
}

#[derive(Clone, Debug)]
pub struct SeedRun<T> {
    pub seed: u64,
    pub outcome: TrainOutcome<T>,
    pub test_accuracy: f64,
}

#[derive(Clone, Debug)]
pub struct SeedSummary<T> {
    pub runs: Vec<SeedRun<T>>,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub ensemble_accuracy: f64,
}

/// Trains one model per seed (in parallel), evaluates each on `test` and
/// the majority-vote ensemble of all of them.
pub fn run_seeds<T, F>(seeds: &[u64], test: &[PrepInstance], train_one: F) -> Result<SeedSummary<T>, TrainError>
where
    T: Scalar,
    F: Fn(u64) -> Result<TrainOutcome<T>, TrainError> + Sync,
{
    if seeds.is_empty() {
        return Err(TrainError::Config("at least one seed is required".into()));
    }
    if test.is_empty() {
        return Err(TrainError::EmptyData("test set"));
    }
    let runs = seeds
        .par_iter()
        .map(|&seed| {
            let outcome = train_one(seed)?;
            let test_accuracy = evaluate(&outcome.model, test)?.accuracy();
            Ok(SeedRun {
                seed,
                outcome,
                test_accuracy,
            })
        })
        .collect::<Result<Vec<_>, TrainError>>()?;
    let accs: Vec<f64> = runs.iter().map(|r| r.test_accuracy).collect();
    let ensemble = Ensemble::new(runs.iter().map(|r| r.outcome.model.clone()).collect())?;
    let ensemble_accuracy = evaluate(&ensemble, test)?.accuracy();
    Ok(SeedSummary {
        mean: accs.iter().sum::<f64>() / accs.len() as f64,
        min: accs.iter().copied().fold(f64::INFINITY, f64::min),
        max: accs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ensemble_accuracy,
        runs,
    })
}
