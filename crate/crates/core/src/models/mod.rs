//! Pretraining and sense-classification models, ensembles, and the model
//! container format.

mod container;
mod ensemble;
mod mlp;
mod pretrain;
mod sense;

use std::io;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoder::EncoderDims;
use crate::features::FeatureDims;
use crate::nn::NnError;

pub use container::{load_model, LoadedModel, ModelHeader, FORMAT_VERSION, MAGIC};
pub use ensemble::{vote, Ensemble};
pub use mlp::Mlp;
pub use pretrain::{foreign_labels, LanguageHead, PreparedExample, PretrainModel};
pub use sense::{PreparedInstance, SenseHead, SenseModel, SenseSpec};

/// Prefix of the encoder that is trained from scratch next to a pretrained one.
pub const FRESH_CONTEXT_PREFIX: &str = "ctx_fresh";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Features only.
    Base,
    /// Features plus a context encoder trained from scratch.
    Context,
    /// Features plus the pretrained context encoder.
    Multilingual,
    /// Features plus a fresh and a pretrained encoder.
    BothContexts,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Base,
        Variant::Context,
        Variant::Multilingual,
        Variant::BothContexts,
    ];

    pub fn needs_pretrained(self) -> bool {
        matches!(self, Variant::Multilingual | Variant::BothContexts)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// One classifier over a single label list shared by all prepositions.
    SingleInventory,
    /// An independent classifier per preposition.
    Disjoint,
    /// Per-preposition output layers over a shared hidden layer.
    Unified,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDims {
    pub features: FeatureDims,
    pub encoder: EncoderDims,
    pub sense_hidden: usize,
    pub foreign_hidden: usize,
}

impl Default for ModelDims {
    fn default() -> Self {
        Self {
            features: FeatureDims::default(),
            encoder: EncoderDims::default(),
            sense_hidden: 500,
            foreign_hidden: 32,
        }
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("no classifier for preposition `{0}`")]
    UnknownPreposition(String),
    #[error("no pretraining head for language `{0}`")]
    UnknownLanguage(String),
    #[error("`{label}` is not an output of the `{head}` head")]
    UnknownLabel { head: String, label: String },
    #[error("instance of `{0}` has no gold senses")]
    MissingGold(String),
    #[error("the {0:?} variant needs a pretrained encoder")]
    MissingPretrained(Variant),
    #[error("the single-inventory mode needs a unified sense inventory")]
    InventoryMode,
    #[error("no sense labels for preposition `{0}`")]
    NoLabels(String),
    #[error("an ensemble needs at least one member")]
    EmptyEnsemble,
    #[error("ensemble members differ in {0}")]
    InconsistentEnsemble(&'static str),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("not a model file (bad magic bytes)")]
    BadMagic,
    #[error("unsupported model format version {found} (expected {FORMAT_VERSION})")]
    VersionMismatch { found: u32 },
    #[error("model file is truncated")]
    Truncated,
    #[error("invalid model header: {0}")]
    Header(String),
    #[error("parameter blocks do not match the header: {0}")]
    BlockMismatch(String),
    #[error("expected a {expected} model, found a {found} model")]
    WrongKind {
        expected: &'static str,
        found: &'static str,
    },
}

impl ModelError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        ModelError::Io {
            path: path.into(),
            source,
        }
    }
}
