//! Bidirectional context encoder: one LSTM reads the words left of the
//! preposition left-to-right, another reads the words right of it
//! right-to-left. The preposition itself is never read.

use crate::corpus::{Namespace, Span, VocabIndex};
use crate::nn::{init_parameter, Graph, InitScheme, LstmDims, LstmParams, NnError, NodeId, ParamId, ParamStore, Shape};
use crate::scalar::Scalar;

/// Parameter prefix of the encoder shared between pretraining and sense models.
pub const CONTEXT_PREFIX: &str = "ctx";

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct EncoderDims {
    pub word: usize,
    pub hidden: usize,
}

impl Default for EncoderDims {
    fn default() -> Self {
        Self { word: 128, hidden: 100 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContextEncoder {
    pub prefix: String,
    pub word: ParamId,
    pub forward: LstmParams,
    pub backward: LstmParams,
}

impl ContextEncoder {
    /// Registers `{prefix}.word`, `{prefix}.fwd.*` and `{prefix}.bwd.*`.
    pub fn new<T: Scalar>(
        store: &mut ParamStore<T>,
        prefix: &str,
        vocab: &VocabIndex,
        dims: EncoderDims,
        seed: u64,
    ) -> Result<Self, NnError> {
        let word = store.add(init_parameter(
            &format!("{prefix}.word"),
            Shape::Matrix(vocab.size(Namespace::Wordform), dims.word),
            seed,
            InitScheme::Lookup,
        )?)?;
        let lstm = LstmDims {
            input: dims.word,
            hidden: dims.hidden,
        };
        Ok(Self {
            prefix: prefix.to_string(),
            word,
            forward: LstmParams::new(store, &format!("{prefix}.fwd"), lstm, seed)?,
            backward: LstmParams::new(store, &format!("{prefix}.bwd"), lstm, seed)?,
        })
    }

    pub fn find<T: Scalar>(store: &ParamStore<T>, prefix: &str) -> Result<Self, NnError> {
        let name = format!("{prefix}.word");
        Ok(Self {
            prefix: prefix.to_string(),
            word: store.id(&name).ok_or(NnError::UnknownParameter(name))?,
            forward: LstmParams::find(store, &format!("{prefix}.fwd"))?,
            backward: LstmParams::find(store, &format!("{prefix}.bwd"))?,
        })
    }

    pub fn dims<T: Scalar>(&self, store: &ParamStore<T>) -> EncoderDims {
        EncoderDims {
            word: store.get(self.word).shape().cols(),
            hidden: self.forward.dims.hidden,
        }
    }

    pub fn output_dim(&self) -> usize {
        self.forward.dims.hidden + self.backward.dims.hidden
    }

    /// Wordform ids of `tokens`, lowercased.
    pub fn token_ids<S: AsRef<str>>(vocab: &VocabIndex, tokens: &[S]) -> Vec<usize> {
        tokens
            .iter()
            .map(|t| vocab.lookup(Namespace::Wordform, &t.as_ref().to_lowercase()))
            .collect()
    }

    /// `[h_left ; h_right]` for the span `span` (1-based) over pre-looked-up ids.
    pub fn encode_ids<T: Scalar>(
        &self,
        graph: &mut Graph<T>,
        store: &ParamStore<T>,
        ids: &[usize],
        span: Span,
    ) -> Result<NodeId, NnError> {
        let mut left = Vec::with_capacity(span.start - 1);
        for &id in &ids[..span.start - 1] {
            left.push(graph.lookup(store, self.word, id)?);
        }
        let mut right = Vec::with_capacity(ids.len() - span.end);
        for &id in ids[span.end..].iter().rev() {
            right.push(graph.lookup(store, self.word, id)?);
        }
        let l = graph.lstm(store, &self.forward, &left)?;
        let r = graph.lstm(store, &self.backward, &right)?;
        Ok(graph.concat(&[l, r]))
    }

    pub fn encode<T: Scalar, S: AsRef<str>>(
        &self,
        graph: &mut Graph<T>,
        store: &ParamStore<T>,
        vocab: &VocabIndex,
        tokens: &[S],
        span: Span,
    ) -> Result<NodeId, NnError> {
        self.encode_ids(graph, store, &Self::token_ids(vocab, tokens), span)
    }
}
