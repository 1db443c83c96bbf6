//! Model files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "PSNS"  u32 version  u32 header_len  header (UTF-8 JSON)
//! u32 block_count
//! per block, sorted by name:
//!     u32 name_len  name (UTF-8)  u32 ndims  u64 dims[ndims]  f64 values[prod(dims)]
//! ```
//!
//! Values are stored row-major.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ModelDims, ModelError, PretrainModel, SenseModel, SenseSpec};
use crate::atomic::write_atomic;
use crate::corpus::{SenseInventory, VocabIndex};
use crate::nn::ParamStore;
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 4] = b"PSNS";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelHeader {
    Sense {
        spec: SenseSpec,
        vocab: VocabIndex,
        inventory: SenseInventory,
        prepositions: Vec<String>,
    },
    Pretrain {
        dims: ModelDims,
        seed: u64,
        vocab: VocabIndex,
        languages: BTreeMap<String, Vec<String>>,
    },
}

struct Block {
    name: String,
    dims: Vec<usize>,
    values: Vec<f64>,
}

fn encode<T: Scalar>(header: &ModelHeader, store: &ParamStore<T>) -> Vec<u8> {
    let json = serde_json::to_vec(header).expect("model header is serializable");
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&(store.len() as u32).to_le_bytes());
    for name in store.names() {
        let p = store.by_name(name).expect("listed name exists");
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        let dims = p.shape().dims();
        out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
        for d in dims {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in p.values() {
            out.extend_from_slice(&v.as_f64().to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelError> {
        let end = self.pos.checked_add(n).ok_or(ModelError::Truncated)?;
        let s = self.bytes.get(self.pos..end).ok_or(ModelError::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, ModelError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, ModelError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn decode(bytes: &[u8]) -> Result<(ModelHeader, Vec<Block>), ModelError> {
    let mut r = Reader { bytes, pos: 0 };
    if bytes.len() < MAGIC.len() || r.take(MAGIC.len())? != MAGIC {
        return Err(ModelError::BadMagic);
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(ModelError::VersionMismatch { found: version });
    }
    let len = r.u32()? as usize;
    let header: ModelHeader = serde_json::from_slice(r.take(len)?).map_err(|e| ModelError::Header(e.to_string()))?;
    let count = r.u32()? as usize;
    let mut blocks = Vec::new();
    for _ in 0..count {
        let len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(len)?)
            .map_err(|e| ModelError::BlockMismatch(format!("block name is not UTF-8: {e}")))?
            .to_string();
        let ndims = r.u32()? as usize;
        if !(1..=2).contains(&ndims) {
            return Err(ModelError::BlockMismatch(format!("`{name}` has {ndims} dimensions")));
        }
        let dims = (0..ndims)
            .map(|_| r.u64().map(|d| d as usize))
            .collect::<Result<Vec<_>, _>>()?;
        let n = dims
            .iter()
            .try_fold(1usize, |acc, d| acc.checked_mul(*d))
            .ok_or(ModelError::Truncated)?;
        let raw = r.take(n.checked_mul(8).ok_or(ModelError::Truncated)?)?;
        let values = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        blocks.push(Block { name, dims, values });
    }
    if r.pos != bytes.len() {
        return Err(ModelError::BlockMismatch(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }
    Ok((header, blocks))
}

/// Copies `blocks` into a freshly built `store`; both must hold exactly the same names and shapes.
fn fill<T: Scalar>(store: &mut ParamStore<T>, blocks: Vec<Block>) -> Result<(), ModelError> {
    let expected: BTreeSet<&str> = store.names().collect();
    let found: BTreeSet<&str> = blocks.iter().map(|b| b.name.as_str()).collect();
    if found.len() != blocks.len() {
        return Err(ModelError::BlockMismatch("duplicate block names".into()));
    }
    if let Some(missing) = expected.difference(&found).next() {
        return Err(ModelError::BlockMismatch(format!("missing block `{missing}`")));
    }
    if let Some(extra) = found.difference(&expected).next() {
        return Err(ModelError::BlockMismatch(format!("unexpected block `{extra}`")));
    }
    for b in blocks {
        let p = store.by_name_mut(&b.name).expect("checked above");
        if p.shape().dims() != b.dims {
            return Err(ModelError::BlockMismatch(format!(
                "`{}` has shape {:?}, header implies {:?}",
                b.name,
                b.dims,
                p.shape().dims()
            )));
        }
        for (dst, v) in p.values_mut().iter_mut().zip(&b.values) {
            *dst = T::from_f64_lossy(*v);
        }
    }
    Ok(())
}

/// Either kind of model file.
#[derive(Clone, Debug)]
pub enum LoadedModel<T> {
    Sense(SenseModel<T>),
    Pretrain(PretrainModel<T>),
}

impl<T: Scalar> LoadedModel<T> {
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ModelError> {
        let (header, blocks) = decode(bytes)?;
        match header {
            ModelHeader::Sense {
                spec,
                vocab,
                inventory,
                prepositions,
            } => {
                let preps = prepositions.into_iter().collect();
                let mut m = SenseModel::skeleton(spec, vocab, inventory, &preps)?;
                fill(&mut m.store, blocks)?;
                Ok(LoadedModel::Sense(m))
            }
            ModelHeader::Pretrain {
                dims,
                seed,
                vocab,
                languages,
            } => {
                let mut m = PretrainModel::new(vocab, dims, seed, &languages)?;
                fill(&mut m.store, blocks)?;
                Ok(LoadedModel::Pretrain(m))
            }
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            LoadedModel::Sense(_) => "sense",
            LoadedModel::Pretrain(_) => "pretrain",
        }
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, ModelError> {
    std::fs::read(path).map_err(|e| ModelError::io(path, e))
}

pub fn load_model<T: Scalar>(path: impl AsRef<Path>) -> Result<LoadedModel<T>, ModelError> {
    LoadedModel::from_bytes(&read_file(path.as_ref())?)
}

impl<T: Scalar> SenseModel<T> {
    pub fn header(&self) -> ModelHeader {
        ModelHeader::Sense {
            spec: self.spec,
            vocab: self.vocab.clone(),
            inventory: self.inventory.clone(),
            prepositions: self.prepositions(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        encode(&self.header(), &self.store)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ModelError> {
        match LoadedModel::from_bytes(bytes)? {
            LoadedModel::Sense(m) => Ok(m),
            other => Err(ModelError::WrongKind {
                expected: "sense",
                found: other.kind(),
            }),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        let path = path.as_ref();
        write_atomic(path, &self.to_bytes()).map_err(|e| ModelError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        Self::from_bytes(&read_file(path.as_ref())?)
    }
}

impl<T: Scalar> PretrainModel<T> {
    pub fn header(&self) -> ModelHeader {
        ModelHeader::Pretrain {
            dims: self.dims,
            seed: self.seed,
            vocab: self.vocab.clone(),
            languages: self.languages(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        encode(&self.header(), &self.store)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ModelError> {
        match LoadedModel::from_bytes(bytes)? {
            LoadedModel::Pretrain(m) => Ok(m),
            other => Err(ModelError::WrongKind {
                expected: "pretrain",
                found: other.kind(),
            }),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        let path = path.as_ref();
        write_atomic(path, &self.to_bytes()).map_err(|e| ModelError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        Self::from_bytes(&read_file(path.as_ref())?)
    }
}
