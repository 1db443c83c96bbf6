//! Parsed English sentences, sense annotations and the resources built
//! from them.

mod annotations;
mod conllu;
mod embeddings;
mod inventory;
mod split;
mod vocab;

use std::io;
use std::path::PathBuf;
use std::sync::Arc;

use thiserror::Error;

pub use annotations::{parse_sense_annotations, parse_spans, read_sense_annotations, read_spans};
pub use conllu::{parse_conllu, read_conllu, write_conllu};
pub use embeddings::{apply_embeddings, load_embeddings, parse_embeddings, read_embeddings, EmbeddingFile};
pub use inventory::{InventoryMode, SenseInventory, COARSE_SUPERSENSES};
pub use split::{accuracy_ratio, most_frequent_sense, split_train_dev, MostFrequentSense};
pub use vocab::{build_vocab, Namespace, VocabBuilder, VocabIndex, BOUNDARY, BOUNDARY_ID, NONE, NONE_ID, UNK_ID};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{source_name}:{line}: {message}")]
    Format {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("{source_name}:{line}: unknown sentence id `{id}`")]
    UnknownSentence {
        source_name: String,
        line: usize,
        id: String,
    },
    #[error("{source_name}:{line}: label `{label}` is not in the sense inventory for `{preposition}`")]
    UnknownLabel {
        source_name: String,
        line: usize,
        label: String,
        preposition: String,
    },
    #[error("{source_name}:{line}: empty sense label list")]
    EmptyLabels { source_name: String, line: usize },
    #[error("embedding table has {table} columns but the file has dimension {file}")]
    EmbeddingDim { table: usize, file: usize },
    #[error(transparent)]
    Nn(#[from] crate::nn::NnError),
}

impl CorpusError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CorpusError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(source_name: &str, line: usize, message: impl Into<String>) -> Self {
        CorpusError::Format {
            source_name: source_name.to_string(),
            line,
            message: message.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    /// 1-based position in the sentence.
    pub index: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    /// Index of the dependency head, 0 for the root.
    pub head: usize,
    pub deprel: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sentence {
    pub id: String,
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Token at a 1-based position.
    pub fn token(&self, index: usize) -> Option<&Token> {
        index.checked_sub(1).and_then(|i| self.tokens.get(i))
    }

    pub fn forms(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.form.as_str())
    }
}

/// Contiguous 1-based inclusive token range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn single(index: usize) -> Self {
        Self::new(index, index)
    }

    pub fn is_valid_for(&self, len: usize) -> bool {
        self.start >= 1 && self.start <= self.end && self.end <= len
    }

    pub fn contains(&self, index: usize) -> bool {
        self.start <= index && index <= self.end
    }

    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Preposition string for a span: lowercased forms joined by `_`.
pub fn preposition_key<'a>(forms: impl IntoIterator<Item = &'a str>) -> String {
    forms.into_iter().map(str::to_lowercase).collect::<Vec<_>>().join("_")
}

/// A preposition occurrence, optionally with its set of gold senses.
#[derive(Clone, Debug, PartialEq)]
pub struct PrepInstance {
    pub sentence: Arc<Sentence>,
    pub span: Span,
    /// Gold senses in annotation order; the first one is the primary sense.
    pub gold: Option<Vec<String>>,
}

impl PrepInstance {
    pub fn preposition(&self) -> String {
        preposition_key(
            self.sentence.tokens[self.span.start - 1..self.span.end]
                .iter()
                .map(|t| t.form.as_str()),
        )
    }

    pub fn primary_sense(&self) -> Option<&str> {
        self.gold.as_ref().and_then(|g| g.first()).map(String::as_str)
    }

    pub fn is_correct(&self, label: &str) -> bool {
        self.gold.as_ref().is_some_and(|g| g.iter().any(|l| l == label))
    }
}
