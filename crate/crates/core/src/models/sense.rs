use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::mlp::{bias, matrix, Mlp};
use super::pretrain::PretrainModel;
use super::{Mode, ModelDims, ModelError, Variant, FRESH_CONTEXT_PREFIX};
use crate::corpus::{InventoryMode, Namespace, PrepInstance, SenseInventory, Span, VocabIndex};
use crate::encoder::{ContextEncoder, CONTEXT_PREFIX};
use crate::features::{extract_features, FeatureEmbeddings, FeatureIds};
use crate::nn::{argmax, sgd_step, ActivationKind, Graph, NnError, NodeId, ParamStore};
use crate::scalar::Scalar;

/// Everything needed to rebuild a sense model's parameter layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SenseSpec {
    pub variant: Variant,
    pub mode: Mode,
    pub dims: ModelDims,
    pub seed: u64,
}

/// Output layer for one preposition (or for all of them in single-inventory mode).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SenseHead {
    pub labels: Vec<String>,
    pub mlp: Mlp,
}

#[derive(Clone, Debug)]
enum Heads {
    Single(SenseHead),
    PerPreposition(BTreeMap<String, SenseHead>),
}

/// An annotated instance with ids resolved against a model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreparedInstance {
    pub prep: String,
    pub features: FeatureIds,
    pub tokens: Vec<usize>,
    pub span: Span,
    /// Indices of the gold senses in the head's label list.
    pub gold: Option<Vec<usize>>,
}

#[derive(Clone, Debug)]
pub struct SenseModel<T> {
    pub spec: SenseSpec,
    pub vocab: VocabIndex,
    pub inventory: SenseInventory,
    pub store: ParamStore<T>,
    pub features: FeatureEmbeddings,
    /// Encoders in input order: fresh before pretrained.
    pub encoders: Vec<ContextEncoder>,
    heads: Heads,
}

fn encoder_prefixes(variant: Variant) -> &'static [&'static str] {
    match variant {
        Variant::Base => &[],
        Variant::Context | Variant::Multilingual => &[CONTEXT_PREFIX],
        Variant::BothContexts => &[FRESH_CONTEXT_PREFIX, CONTEXT_PREFIX],
    }
}

impl<T: Scalar> SenseModel<T> {
    /// A model with heads for `prepositions` (ignored in single-inventory
    /// mode). Variants built on pretraining take their encoder and wordform
    /// vocabulary from `pretrained`.
    pub fn new(
        spec: SenseSpec,
        vocab: VocabIndex,
        inventory: SenseInventory,
        prepositions: &BTreeSet<String>,
        pretrained: Option<&PretrainModel<T>>,
    ) -> Result<Self, ModelError> {
        if !spec.variant.needs_pretrained() {
            return Self::skeleton(spec, vocab, inventory, prepositions);
        }
        let pre = pretrained.ok_or(ModelError::MissingPretrained(spec.variant))?;
        let spec = SenseSpec {
            dims: ModelDims {
                encoder: pre.dims.encoder,
                ..spec.dims
            },
            ..spec
        };
        let vocab = vocab.with_namespace_from(Namespace::Wordform, &pre.vocab);
        let mut model = Self::skeleton(spec, vocab, inventory, prepositions)?;
        model.transfer_encoder(pre)?;
        Ok(model)
    }

    /// Parameter layout with fresh initial values.
    pub(crate) fn skeleton(
        spec: SenseSpec,
        vocab: VocabIndex,
        inventory: SenseInventory,
        prepositions: &BTreeSet<String>,
    ) -> Result<Self, ModelError> {
        let seed = spec.seed;
        let mut store = ParamStore::new();
        let features = FeatureEmbeddings::new(&mut store, &vocab, spec.dims.features, seed)?;
        let encoders = encoder_prefixes(spec.variant)
            .iter()
            .map(|p| ContextEncoder::new(&mut store, p, &vocab, spec.dims.encoder, seed))
            .collect::<Result<Vec<_>, _>>()?;
        let input = spec.dims.features.output_dim() + encoders.iter().map(ContextEncoder::output_dim).sum::<usize>();
        let hidden = spec.dims.sense_hidden;

        let layer = |store: &mut ParamStore<T>, prefix: &str, labels: usize| -> Result<(_, _), NnError> {
            Ok((
                matrix(store, &format!("{prefix}.u"), labels, hidden, seed)?,
                bias(store, &format!("{prefix}.b2"), labels)?,
            ))
        };
        let labels_for = |p: &str| {
            inventory
                .labels_for(p)
                .filter(|l| !l.is_empty())
                .map(<[String]>::to_vec)
                .ok_or_else(|| ModelError::NoLabels(p.to_string()))
        };

        let heads = match spec.mode {
            Mode::SingleInventory => {
                let SenseInventory::Unified(labels) = &inventory else {
                    return Err(ModelError::InventoryMode);
                };
                if labels.is_empty() {
                    return Err(ModelError::NoLabels("*".into()));
                }
                let w = matrix(&mut store, "sense.w", hidden, input, seed)?;
                let b1 = bias(&mut store, "sense.b1", hidden)?;
                let (u, b2) = layer(&mut store, "sense", labels.len())?;
                Heads::Single(SenseHead {
                    labels: labels.clone(),
                    mlp: relu_mlp(w, b1, u, b2),
                })
            }
            Mode::Unified => {
                let w = matrix(&mut store, "sense.w", hidden, input, seed)?;
                let b1 = bias(&mut store, "sense.b1", hidden)?;
                let mut map = BTreeMap::new();
                for p in prepositions {
                    let labels = labels_for(p)?;
                    let (u, b2) = layer(&mut store, &format!("sense.{p}"), labels.len())?;
                    map.insert(
                        p.clone(),
                        SenseHead {
                            labels,
                            mlp: relu_mlp(w, b1, u, b2),
                        },
                    );
                }
                Heads::PerPreposition(map)
            }
            Mode::Disjoint => {
                let mut map = BTreeMap::new();
                for p in prepositions {
                    let labels = labels_for(p)?;
                    let w = matrix(&mut store, &format!("sense.{p}.w"), hidden, input, seed)?;
                    let b1 = bias(&mut store, &format!("sense.{p}.b1"), hidden)?;
                    let (u, b2) = layer(&mut store, &format!("sense.{p}"), labels.len())?;
                    map.insert(
                        p.clone(),
                        SenseHead {
                            labels,
                            mlp: relu_mlp(w, b1, u, b2),
                        },
                    );
                }
                Heads::PerPreposition(map)
            }
        };
        Ok(Self {
            spec,
            vocab,
            inventory,
            store,
            features,
            encoders,
            heads,
        })
    }

    /// Copies every pretrained `ctx.*` block into this model; returns the copied names.
    pub fn transfer_encoder(&mut self, pre: &PretrainModel<T>) -> Result<Vec<String>, ModelError> {
        let prefix = format!("{CONTEXT_PREFIX}.");
        let mut copied = Vec::new();
        for src in pre.store.iter().filter(|p| p.name().starts_with(&prefix)) {
            let dst = self
                .store
                .by_name_mut(src.name())
                .ok_or_else(|| NnError::UnknownParameter(src.name().to_string()))?;
            if dst.shape() != src.shape() {
                return Err(NnError::DimensionMismatch {
                    op: "encoder transfer",
                    expected: dst.shape().len(),
                    found: src.shape().len(),
                }
                .into());
            }
            dst.values_mut().copy_from_slice(src.values());
            copied.push(src.name().to_string());
        }
        Ok(copied)
    }

    /// Prepositions with a dedicated head; empty in single-inventory mode.
    pub fn prepositions(&self) -> Vec<String> {
        match &self.heads {
            Heads::Single(_) => Vec::new(),
            Heads::PerPreposition(map) => map.keys().cloned().collect(),
        }
    }

    pub fn head(&self, prep: &str) -> Result<&SenseHead, ModelError> {
        match &self.heads {
            Heads::Single(h) => Ok(h),
            Heads::PerPreposition(map) => map
                .get(prep)
                .ok_or_else(|| ModelError::UnknownPreposition(prep.to_string())),
        }
    }

    pub fn prepare(&self, inst: &PrepInstance) -> Result<PreparedInstance, ModelError> {
        let prep = inst.preposition();
        let head = self.head(&prep)?;
        let gold = match &inst.gold {
            None => None,
            Some(labels) => Some(
                labels
                    .iter()
                    .map(|l| {
                        head.labels
                            .iter()
                            .position(|h| h == l)
                            .ok_or_else(|| ModelError::UnknownLabel {
                                head: prep.clone(),
                                label: l.clone(),
                            })
                    })
                    .collect::<Result<Vec<_>, _>>()?,
            ),
        };
        let tokens = if self.encoders.is_empty() {
            Vec::new()
        } else {
            let forms: Vec<&str> = inst.sentence.forms().collect();
            ContextEncoder::token_ids(&self.vocab, &forms)
        };
        Ok(PreparedInstance {
            features: extract_features(&inst.sentence, inst.span).ids(&self.vocab),
            prep,
            tokens,
            span: inst.span,
            gold,
        })
    }

    /// Classifier input: fresh ctx ∘ pretrained ctx ∘ φ, as present.
    pub fn input(&self, graph: &mut Graph<T>, p: &PreparedInstance) -> Result<NodeId, ModelError> {
        let mut parts = Vec::with_capacity(self.encoders.len() + 1);
        for enc in &self.encoders {
            parts.push(enc.encode_ids(graph, &self.store, &p.tokens, p.span)?);
        }
        parts.push(self.features.embed(graph, &self.store, &p.features)?);
        Ok(if parts.len() == 1 {
            parts[0]
        } else {
            graph.concat(&parts)
        })
    }

    fn probs_node(&self, graph: &mut Graph<T>, p: &PreparedInstance) -> Result<NodeId, ModelError> {
        let head = self.head(&p.prep)?;
        let x = self.input(graph, p)?;
        let logits = head.mlp.logits(graph, &self.store, x)?;
        Ok(graph.softmax(logits)?)
    }

    /// Distribution over the labels of the instance's head.
    pub fn probabilities(&self, p: &PreparedInstance) -> Result<Vec<T>, ModelError> {
        let mut g = Graph::new();
        let probs = self.probs_node(&mut g, p)?;
        Ok(g.value(probs).to_vec())
    }

    /// Distribution and the labels it ranges over.
    pub fn sense_forward(&self, inst: &PrepInstance) -> Result<(Vec<T>, &[String]), ModelError> {
        let p = self.prepare(&PrepInstance {
            gold: None,
            ..inst.clone()
        })?;
        Ok((self.probabilities(&p)?, &self.head(&p.prep)?.labels))
    }

    pub fn predict_index(&self, p: &PreparedInstance) -> Result<usize, ModelError> {
        Ok(argmax(&self.probabilities(p)?).unwrap_or(0))
    }

    pub fn predict(&self, inst: &PrepInstance) -> Result<&str, ModelError> {
        let (probs, labels) = self.sense_forward(inst)?;
        Ok(&labels[argmax(&probs).unwrap_or(0)])
    }

    fn loss_node(&self, graph: &mut Graph<T>, p: &PreparedInstance) -> Result<NodeId, ModelError> {
        let gold = p
            .gold
            .as_deref()
            .ok_or_else(|| ModelError::MissingGold(p.prep.clone()))?;
        let probs = self.probs_node(graph, p)?;
        Ok(graph.cross_entropy_multi(probs, gold)?)
    }

    /// `-log Σ_{i∈C} p_i` over the instance's gold set C.
    pub fn loss(&self, p: &PreparedInstance) -> Result<T, ModelError> {
        let mut g = Graph::new();
        let loss = self.loss_node(&mut g, p)?;
        Ok(g.value(loss)[0])
    }

    pub fn accumulate_gradients(&mut self, p: &PreparedInstance) -> Result<T, ModelError> {
        let mut g = Graph::new();
        let loss = self.loss_node(&mut g, p)?;
        g.backward(loss, &mut self.store)?;
        Ok(g.value(loss)[0])
    }

    pub fn train_step(&mut self, p: &PreparedInstance, learning_rate: T) -> Result<T, ModelError> {
        let loss = self.accumulate_gradients(p)?;
        sgd_step(&mut self.store, learning_rate)?;
        Ok(loss)
    }

    pub fn inventory_mode(&self) -> InventoryMode {
        self.inventory.mode()
    }
}

fn relu_mlp(w: crate::nn::ParamId, b1: crate::nn::ParamId, u: crate::nn::ParamId, b2: crate::nn::ParamId) -> Mlp {
    Mlp {
        w,
        b1: Some(b1),
        u,
        b2: Some(b2),
        activation: ActivationKind::Relu,
    }
}
