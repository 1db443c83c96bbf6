use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::{CorpusError, Namespace, VocabIndex};
use crate::nn::Parameter;
use crate::scalar::Scalar;

/// Pretrained vectors read from the text format `token v1 ... vd`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EmbeddingFile {
    /// `None` for an empty file.
    pub dim: Option<usize>,
    pub rows: Vec<(String, Vec<f64>)>,
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingFile, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    parse_embeddings(BufReader::new(file), &path.display().to_string())
}

pub fn parse_embeddings<R: BufRead>(reader: R, source_name: &str) -> Result<EmbeddingFile, CorpusError> {
    let mut out = EmbeddingFile::default();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| CorpusError::io(source_name, e))?;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else { continue };
        let values = fields
            .map(|f| f.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CorpusError::format(source_name, lineno, format!("invalid component: {e}")))?;
        if values.is_empty() {
            return Err(CorpusError::format(source_name, lineno, "row has no vector components"));
        }
        match out.dim {
            None => out.dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(CorpusError::format(
                    source_name,
                    lineno,
                    format!("expected {d} components, found {}", values.len()),
                ))
            }
            Some(_) => {}
        }
        out.rows.push((token.to_string(), values));
    }
    Ok(out)
}

/// Overwrites the rows of `table` whose tokens appear in the file.
/// Returns the number of rows copied.
pub fn apply_embeddings<T: Scalar>(
    file: &EmbeddingFile,
    vocab: &VocabIndex,
    ns: Namespace,
    table: &mut Parameter<T>,
) -> Result<usize, CorpusError> {
    let Some(dim) = file.dim else { return Ok(0) };
    let cols = table.shape().cols();
    if cols != dim {
        return Err(CorpusError::EmbeddingDim { table: cols, file: dim });
    }
    let mut copied = 0;
    for (token, values) in &file.rows {
        if let Some(id) = vocab.get(ns, token) {
            for (dst, v) in table.row_mut(id).iter_mut().zip(values) {
                *dst = T::from_f64_lossy(*v);
            }
            copied += 1;
        }
    }
    Ok(copied)
}

/// Reads `path` into `table`; returns the vector dimension (the table's own
/// when the file is empty).
pub fn load_embeddings<T: Scalar>(
    path: impl AsRef<Path>,
    vocab: &VocabIndex,
    ns: Namespace,
    table: &mut Parameter<T>,
) -> Result<usize, CorpusError> {
    let file = read_embeddings(path)?;
    apply_embeddings(&file, vocab, ns, table)?;
    Ok(file.dim.unwrap_or(table.shape().cols()))
}
