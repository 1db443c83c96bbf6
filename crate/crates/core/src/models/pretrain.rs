use std::collections::{BTreeMap, BTreeSet};

use super::mlp::{matrix, Mlp};
use super::{ModelDims, ModelError};
use crate::bitext::TranslationExample;
use crate::corpus::{Span, VocabIndex};
use crate::encoder::{ContextEncoder, CONTEXT_PREFIX};
use crate::nn::{argmax, sgd_step, ActivationKind, Graph, NodeId, ParamStore};
use crate::scalar::Scalar;

/// Foreign-preposition classifier of one language: `U tanh(W ctx)`, no biases.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LanguageHead {
    pub language: String,
    /// Output labels in index order.
    pub labels: Vec<String>,
    pub mlp: Mlp,
}

/// Sorted foreign labels per language.
pub fn foreign_labels(examples: &[TranslationExample]) -> BTreeMap<String, Vec<String>> {
    let mut sets: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for ex in examples {
        sets.entry(ex.language.clone()).or_default().insert(ex.label.clone());
    }
    sets.into_iter().map(|(l, s)| (l, s.into_iter().collect())).collect()
}

/// A translation example with ids resolved against a model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreparedExample {
    pub tokens: Vec<usize>,
    pub span: Span,
    pub language: String,
    pub label_text: String,
    /// `None` when the label is not an output of the language's head.
    pub label: Option<usize>,
}

/// Shared context encoder with one head per language.
#[derive(Clone, Debug)]
pub struct PretrainModel<T> {
    pub vocab: VocabIndex,
    pub dims: ModelDims,
    pub seed: u64,
    pub store: ParamStore<T>,
    pub encoder: ContextEncoder,
    pub heads: BTreeMap<String, LanguageHead>,
}

fn head_names(language: &str) -> (String, String) {
    (format!("head.{language}.hidden"), format!("head.{language}.output"))
}

impl<T: Scalar> PretrainModel<T> {
    pub fn new(
        vocab: VocabIndex,
        dims: ModelDims,
        seed: u64,
        labels: &BTreeMap<String, Vec<String>>,
    ) -> Result<Self, ModelError> {
        let mut store = ParamStore::new();
        let encoder = ContextEncoder::new(&mut store, CONTEXT_PREFIX, &vocab, dims.encoder, seed)?;
        let ctx_dim = encoder.output_dim();
        let mut heads = BTreeMap::new();
        for (language, labels) in labels {
            if labels.is_empty() {
                return Err(ModelError::NoLabels(language.clone()));
            }
            let (hidden, output) = head_names(language);
            let mlp = Mlp {
                w: matrix(&mut store, &hidden, dims.foreign_hidden, ctx_dim, seed)?,
                b1: None,
                u: matrix(&mut store, &output, labels.len(), dims.foreign_hidden, seed)?,
                b2: None,
                activation: ActivationKind::Tanh,
            };
            heads.insert(
                language.clone(),
                LanguageHead {
                    language: language.clone(),
                    labels: labels.clone(),
                    mlp,
                },
            );
        }
        Ok(Self {
            vocab,
            dims,
            seed,
            store,
            encoder,
            heads,
        })
    }

    pub fn languages(&self) -> BTreeMap<String, Vec<String>> {
        self.heads.iter().map(|(l, h)| (l.clone(), h.labels.clone())).collect()
    }

    pub fn prepare(&self, ex: &TranslationExample) -> Result<PreparedExample, ModelError> {
        let head = self
            .heads
            .get(&ex.language)
            .ok_or_else(|| ModelError::UnknownLanguage(ex.language.clone()))?;
        Ok(PreparedExample {
            tokens: ContextEncoder::token_ids(&self.vocab, &ex.tokens),
            span: ex.span,
            language: ex.language.clone(),
            label_text: ex.label.clone(),
            label: head.labels.iter().position(|l| *l == ex.label),
        })
    }

    fn probs(&self, graph: &mut Graph<T>, ex: &PreparedExample) -> Result<NodeId, ModelError> {
        let head = self
            .heads
            .get(&ex.language)
            .ok_or_else(|| ModelError::UnknownLanguage(ex.language.clone()))?;
        let ctx = self.encoder.encode_ids(graph, &self.store, &ex.tokens, ex.span)?;
        let logits = head.mlp.logits(graph, &self.store, ctx)?;
        Ok(graph.softmax(logits)?)
    }

    fn gold(&self, ex: &PreparedExample) -> Result<usize, ModelError> {
        ex.label.ok_or_else(|| ModelError::UnknownLabel {
            head: ex.language.clone(),
            label: ex.label_text.clone(),
        })
    }

    /// Cross-entropy loss and the predicted label index.
    pub fn forward(&self, ex: &PreparedExample) -> Result<(T, usize), ModelError> {
        let mut g = Graph::new();
        let probs = self.probs(&mut g, ex)?;
        let loss = g.cross_entropy_multi(probs, &[self.gold(ex)?])?;
        Ok((g.value(loss)[0], argmax(g.value(probs)).unwrap_or(0)))
    }

    /// Predicted foreign label index; ties go to the lowest index.
    pub fn predict_index(&self, ex: &PreparedExample) -> Result<usize, ModelError> {
        let mut g = Graph::new();
        let probs = self.probs(&mut g, ex)?;
        Ok(argmax(g.value(probs)).unwrap_or(0))
    }

    pub fn predict(&self, ex: &TranslationExample) -> Result<&str, ModelError> {
        let idx = self.predict_index(&self.prepare(ex)?)?;
        Ok(&self.heads[&ex.language].labels[idx])
    }

    /// Accumulates the gradient of the example's loss; returns the loss.
    pub fn accumulate_gradients(&mut self, ex: &PreparedExample) -> Result<T, ModelError> {
        let mut g = Graph::new();
        let probs = self.probs(&mut g, ex)?;
        let loss = g.cross_entropy_multi(probs, &[self.gold(ex)?])?;
        g.backward(loss, &mut self.store)?;
        Ok(g.value(loss)[0])
    }

    /// One SGD update on a single example.
    pub fn train_step(&mut self, ex: &PreparedExample, learning_rate: T) -> Result<T, ModelError> {
        let loss = self.accumulate_gradients(ex)?;
        sgd_step(&mut self.store, learning_rate)?;
        Ok(loss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Namespace, VocabBuilder};
    use crate::encoder::EncoderDims;

    fn example(language: &str, label: &str) -> TranslationExample {
        TranslationExample {
            tokens: ["the", "cat", "on", "the", "mat"].map(String::from).to_vec(),
            span: Span::single(3),
            language: language.into(),
            label: label.into(),
        }
    }

    fn model(labels: &[(&str, &[&str])]) -> PretrainModel<f64> {
        let mut b = VocabBuilder::new();
        for w in ["the", "cat", "on", "mat"] {
            b.add(Namespace::Wordform, w);
        }
        let dims = ModelDims {
            encoder: EncoderDims { word: 3, hidden: 2 },
            foreign_hidden: 3,
            ..ModelDims::default()
        };
        let labels = labels
            .iter()
            .map(|(l, ls)| (l.to_string(), ls.iter().map(|s| s.to_string()).collect()))
            .collect();
        PretrainModel::new(b.build(), dims, 5, &labels).unwrap()
    }

    fn zero(m: &mut PretrainModel<f64>, name: &str) {
        m.store.by_name_mut(name).unwrap().values_mut().fill(0.0);
    }

    #[test]
    fn zero_head_gives_uniform_loss() {
        let mut m = model(&[("fr", &["a", "b", "c", "d"])]);
        zero(&mut m, "head.fr.output");
        let (loss, pred) = m.forward(&m.prepare(&example("fr", "c")).unwrap()).unwrap();
        assert!((loss - 4f64.ln()).abs() < 1e-12);
        assert_eq!(pred, 0);
    }

    #[test]
    fn single_label_loss_is_zero() {
        let m = model(&[("fr", &["dans"])]);
        let (loss, _) = m.forward(&m.prepare(&example("fr", "dans")).unwrap()).unwrap();
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn hand_weights_two_labels() {
        let mut m = model(&[("fr", &["a", "b"])]);
        let ex = m.prepare(&example("fr", "b")).unwrap();
        let mut g = Graph::new();
        let ctx = m.encoder.encode_ids(&mut g, &m.store, &ex.tokens, ex.span).unwrap();
        let ctx = g.value(ctx).to_vec();
        let w: Vec<f64> = (0..3 * ctx.len()).map(|k| 0.1 * (k as f64 + 1.0)).collect();
        m.store
            .by_name_mut("head.fr.hidden")
            .unwrap()
            .values_mut()
            .copy_from_slice(&w);
        let u = [1.0, -1.0, 0.5, 0.0, 2.0, -0.5];
        m.store
            .by_name_mut("head.fr.output")
            .unwrap()
            .values_mut()
            .copy_from_slice(&u);
        let h: Vec<f64> = (0..3)
            .map(|r| {
                (0..ctx.len())
                    .map(|c| w[r * ctx.len() + c] * ctx[c])
                    .sum::<f64>()
                    .tanh()
            })
            .collect();
        let z: Vec<f64> = (0..2).map(|r| (0..3).map(|c| u[r * 3 + c] * h[c]).sum()).collect();
        let expected = -(z[1].exp() / (z[0].exp() + z[1].exp())).ln();
        let (loss, _) = m.forward(&ex).unwrap();
        assert!((loss - expected).abs() < 1e-12);
    }

    #[test]
    fn step_on_one_language_leaves_other_head() {
        let mut m = model(&[("de", &["in", "auf"]), ("fr", &["dans", "sur"])]);
        let before = m.store.clone();
        let ex = m.prepare(&example("fr", "sur")).unwrap();
        m.train_step(&ex, 0.5).unwrap();
        for name in ["head.de.hidden", "head.de.output"] {
            assert_eq!(
                m.store.by_name(name).unwrap().values(),
                before.by_name(name).unwrap().values()
            );
        }
        assert_ne!(
            m.store.by_name("head.fr.output").unwrap().values(),
            before.by_name("head.fr.output").unwrap().values()
        );
        assert_ne!(
            m.store.by_name("ctx.fwd.w_input").unwrap().values(),
            before.by_name("ctx.fwd.w_input").unwrap().values()
        );
    }

    #[test]
    fn unknown_language_and_label() {
        let m = model(&[("fr", &["dans"])]);
        assert!(matches!(
            m.prepare(&example("es", "en")),
            Err(ModelError::UnknownLanguage(_))
        ));
        let ex = m.prepare(&example("fr", "sur")).unwrap();
        assert_eq!(ex.label, None);
        assert!(m.forward(&ex).is_err());
    }

    #[test]
    fn labels_collected_per_language() {
        let ex = [
            example("fr", "sur"),
            example("fr", "dans"),
            example("de", "in"),
            example("fr", "sur"),
        ];
        let labels = foreign_labels(&ex);
        assert_eq!(labels["fr"], vec!["dans", "sur"]);
        assert_eq!(labels["de"], vec!["in"]);
    }
}
