//! The 19 symbolic features of a preposition occurrence and their dense
//! embedding.
//!
//! Slots, in order:
//!
//! * the preposition itself;
//! * lemmas of the words at i-2, i-1, i+1, i+2, the preposition's head and
//!   its first modifier;
//! * POS tags of those six words, of the preposition and of the head's head;
//! * dependency labels of the edges preposition->head, head->head's head and
//!   first modifier->preposition;
//! * whether one of the two following words is capitalized.

use serde::{Deserialize, Serialize};

use crate::corpus::{preposition_key, Namespace, Sentence, Span, VocabIndex, BOUNDARY, NONE};
use crate::nn::{init_parameter, Graph, InitScheme, NnError, NodeId, ParamId, ParamStore, Shape};
use crate::scalar::Scalar;

pub const LEMMA_SLOTS: usize = 6;
pub const POS_SLOTS: usize = 8;
pub const DEPREL_SLOTS: usize = 3;
/// Number of atomic features in a bundle.
pub const FEATURE_COUNT: usize = 1 + LEMMA_SLOTS + POS_SLOTS + DEPREL_SLOTS + 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureBundle {
    pub prep: String,
    pub lemmas: [String; LEMMA_SLOTS],
    pub pos: [String; POS_SLOTS],
    pub deplabels: [String; DEPREL_SLOTS],
    pub cap: bool,
}

/// Token in the span whose head lies outside it; the last token if none does.
pub fn span_head(sentence: &Sentence, span: Span) -> usize {
    (span.start..=span.end)
        .find(|&i| {
            let h = sentence.tokens[i - 1].head;
            h == 0 || !span.contains(h)
        })
        .unwrap_or(span.end)
}

fn starts_upper(s: &str) -> bool {
    s.chars().next().is_some_and(char::is_uppercase)
}

pub fn extract_features(sentence: &Sentence, span: Span) -> FeatureBundle {
    let n = sentence.len();
    let at = |pos: isize| -> Option<&crate::corpus::Token> {
        if pos >= 1 && (pos as usize) <= n {
            sentence.token(pos as usize)
        } else {
            None
        }
    };
    let (start, end) = (span.start as isize, span.end as isize);
    let window = [start - 2, start - 1, end + 1, end + 2].map(at);

    let prep_tok = &sentence.tokens[span_head(sentence, span) - 1];
    let head = sentence.token(prep_tok.head);
    let head_head = head.and_then(|h| sentence.token(h.head));
    let modifier = sentence
        .tokens
        .iter()
        .find(|t| !span.contains(t.index) && t.head != 0 && span.contains(t.head));

    let lemma =
        |t: Option<&crate::corpus::Token>, missing: &str| t.map_or_else(|| missing.to_string(), |t| t.lemma.clone());
    let pos =
        |t: Option<&crate::corpus::Token>, missing: &str| t.map_or_else(|| missing.to_string(), |t| t.upos.clone());

    let lemmas = [
        lemma(window[0], BOUNDARY),
        lemma(window[1], BOUNDARY),
        lemma(window[2], BOUNDARY),
        lemma(window[3], BOUNDARY),
        lemma(head, NONE),
        lemma(modifier, NONE),
    ];
    let pos = [
        pos(window[0], BOUNDARY),
        pos(window[1], BOUNDARY),
        pos(window[2], BOUNDARY),
        pos(window[3], BOUNDARY),
        pos(head, NONE),
        pos(modifier, NONE),
        prep_tok.upos.clone(),
        pos(head_head, NONE),
    ];
    let deplabels = [
        head.map_or_else(|| NONE.to_string(), |_| prep_tok.deprel.clone()),
        head.zip(head_head)
            .map_or_else(|| NONE.to_string(), |(h, _)| h.deprel.clone()),
        modifier.map_or_else(|| NONE.to_string(), |m| m.deprel.clone()),
    ];
    let cap = window[2..].iter().flatten().any(|t| starts_upper(&t.form));
    FeatureBundle {
        prep: preposition_key(
            sentence.tokens[span.start - 1..span.end]
                .iter()
                .map(|t| t.form.as_str()),
        ),
        lemmas,
        pos,
        deplabels,
        cap,
    }
}

/// Vocabulary ids of a bundle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureIds {
    pub prep: usize,
    pub lemmas: [usize; LEMMA_SLOTS],
    pub pos: [usize; POS_SLOTS],
    pub deplabels: [usize; DEPREL_SLOTS],
    pub cap: bool,
}

impl FeatureBundle {
    pub fn ids(&self, vocab: &VocabIndex) -> FeatureIds {
        FeatureIds {
            prep: vocab.lookup(Namespace::Preposition, &self.prep),
            lemmas: std::array::from_fn(|k| vocab.lookup(Namespace::Lemma, &self.lemmas[k])),
            pos: std::array::from_fn(|k| vocab.lookup(Namespace::Pos, &self.pos[k])),
            deplabels: std::array::from_fn(|k| vocab.lookup(Namespace::Deprel, &self.deplabels[k])),
            cap: self.cap,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureDims {
    pub prep: usize,
    pub lemma: usize,
    pub pos: usize,
    pub deprel: usize,
}

impl Default for FeatureDims {
    fn default() -> Self {
        Self {
            prep: 200,
            lemma: 50,
            pos: 4,
            deprel: 4,
        }
    }
}

impl FeatureDims {
    /// Length of the embedded feature vector, including the capitalization scalar.
    pub fn output_dim(&self) -> usize {
        self.prep + LEMMA_SLOTS * self.lemma + POS_SLOTS * self.pos + DEPREL_SLOTS * self.deprel + 1
    }
}

/// Trainable lookup tables for the symbolic features.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureEmbeddings {
    pub prep: ParamId,
    pub lemma: ParamId,
    pub pos: ParamId,
    pub deprel: ParamId,
}

pub const PREFIX: &str = "features";

impl FeatureEmbeddings {
    pub fn new<T: Scalar>(
        store: &mut ParamStore<T>,
        vocab: &VocabIndex,
        dims: FeatureDims,
        seed: u64,
    ) -> Result<Self, NnError> {
        let mut table = |name: &str, ns: Namespace, dim: usize| {
            store.add(init_parameter(
                &format!("{PREFIX}.{name}"),
                Shape::Matrix(vocab.size(ns), dim),
                seed,
                InitScheme::Lookup,
            )?)
        };
        Ok(Self {
            prep: table("prep", Namespace::Preposition, dims.prep)?,
            lemma: table("lemma", Namespace::Lemma, dims.lemma)?,
            pos: table("pos", Namespace::Pos, dims.pos)?,
            deprel: table("deprel", Namespace::Deprel, dims.deprel)?,
        })
    }

    pub fn find<T: Scalar>(store: &ParamStore<T>) -> Result<Self, NnError> {
        let get = |name: &str| {
            let full = format!("{PREFIX}.{name}");
            store.id(&full).ok_or(NnError::UnknownParameter(full))
        };
        Ok(Self {
            prep: get("prep")?,
            lemma: get("lemma")?,
            pos: get("pos")?,
            deprel: get("deprel")?,
        })
    }

    /// φ: prep ∘ 6 lemmas ∘ 8 POS ∘ 3 labels ∘ capitalization scalar.
    pub fn embed<T: Scalar>(
        &self,
        graph: &mut Graph<T>,
        store: &ParamStore<T>,
        ids: &FeatureIds,
    ) -> Result<NodeId, NnError> {
        let mut parts = Vec::with_capacity(FEATURE_COUNT);
        parts.push(graph.lookup(store, self.prep, ids.prep)?);
        for id in ids.lemmas {
            parts.push(graph.lookup(store, self.lemma, id)?);
        }
        for id in ids.pos {
            parts.push(graph.lookup(store, self.pos, id)?);
        }
        for id in ids.deplabels {
            parts.push(graph.lookup(store, self.deprel, id)?);
        }
        parts.push(graph.constant(vec![if ids.cap { T::one() } else { T::zero() }]));
        Ok(graph.concat(&parts))
    }

    pub fn embed_bundle<T: Scalar>(
        &self,
        graph: &mut Graph<T>,
        store: &ParamStore<T>,
        vocab: &VocabIndex,
        bundle: &FeatureBundle,
    ) -> Result<NodeId, NnError> {
        self.embed(graph, store, &bundle.ids(vocab))
    }

    pub fn output_dim<T: Scalar>(&self, store: &ParamStore<T>) -> usize {
        let cols = |id| store.get(id).shape().cols();
        cols(self.prep)
            + LEMMA_SLOTS * cols(self.lemma)
            + POS_SLOTS * cols(self.pos)
            + DEPREL_SLOTS * cols(self.deprel)
            + 1
    }
}
