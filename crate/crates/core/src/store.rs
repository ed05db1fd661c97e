//! Versioned binary persistence for corpora and indexes.
//!
//! Layout: 8-byte magic, little-endian `u32` format version, bincode payload.
//! All maps are ordered, so identical values produce identical bytes.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::index::Index;

pub const CORPUS_MAGIC: &[u8; 8] = b"ENTRCORP";
pub const INDEX_MAGIC: &[u8; 8] = b"ENTRINDX";
pub const FORMAT_VERSION: u32 = 1;

const HEADER_LEN: usize = 12;

fn encode<T: Serialize>(magic: &[u8; 8], value: &T) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(1024);
    bytes.extend_from_slice(magic);
    bytes.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    bincode::serialize_into(&mut bytes, value).expect("in-memory serialization cannot fail");
    bytes
}

fn decode<T: DeserializeOwned>(magic: &[u8; 8], bytes: &[u8], path: &Path) -> Result<T> {
    let store_error = |message: String| Error::Store {
        path: path.to_path_buf(),
        message,
    };
    if bytes.len() < HEADER_LEN || &bytes[..8] != magic {
        return Err(store_error(format!(
            "not a {} file (bad magic header)",
            String::from_utf8_lossy(magic)
        )));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(store_error(format!(
            "format version {version} is not supported (expected {FORMAT_VERSION})"
        )));
    }
    bincode::deserialize(&bytes[HEADER_LEN..])
        .map_err(|e| store_error(format!("corrupt payload: {e}")))
}

/// True when the file starts with the corpus store magic.
pub fn is_corpus_store(path: &Path) -> bool {
    use std::io::Read;
    let mut head = [0u8; 8];
    std::fs::File::open(path)
        .and_then(|mut f| f.read_exact(&mut head))
        .map(|_| &head == CORPUS_MAGIC)
        .unwrap_or(false)
}

pub fn corpus_to_bytes(corpus: &Corpus) -> Vec<u8> {
    encode(CORPUS_MAGIC, corpus)
}

pub fn corpus_from_bytes(bytes: &[u8], path: &Path) -> Result<Corpus> {
    decode(CORPUS_MAGIC, bytes, path)
}

pub fn index_to_bytes(index: &Index) -> Vec<u8> {
    encode(INDEX_MAGIC, index)
}

pub fn index_from_bytes(bytes: &[u8], path: &Path) -> Result<Index> {
    decode(INDEX_MAGIC, bytes, path)
}

pub fn persist_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    std::fs::write(path, corpus_to_bytes(corpus)).map_err(|e| Error::io(path, e))
}

pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    corpus_from_bytes(&bytes, path)
}

pub fn persist_index(index: &Index, path: &Path) -> Result<()> {
    std::fs::write(path, index_to_bytes(index)).map_err(|e| Error::io(path, e))
}

pub fn load_index(path: &Path) -> Result<Index> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    index_from_bytes(&bytes, path)
}
