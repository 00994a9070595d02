//! Binary checkpoint: magic, format version, dimensions, seed, then the flat
//! parameter vector as little-endian `f64`. Round-trips bit for bit.

use std::fs;
use std::path::Path;

use super::{LstmLanguageModel, ModelDims};
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"SNLSTM\0\0";
const VERSION: u32 = 1;
const HEADER: usize = 8 + 4 + 8 * 5;

impl LstmLanguageModel {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER + 8 * self.params.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        for x in [
            self.vocab_size as u64,
            self.embed_dim as u64,
            self.hidden_dim as u64,
            self.seed,
            self.params.len() as u64,
        ] {
            out.extend_from_slice(&x.to_le_bytes());
        }
        for p in &self.params {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER || &bytes[..8] != MAGIC {
            return Err(Error::Checkpoint("not an LSTM checkpoint".into()));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let word = |i: usize| u64::from_le_bytes(bytes[12 + 8 * i..20 + 8 * i].try_into().expect("8 bytes"));
        let (vocab, embed, hidden, seed, count) =
            (word(0) as usize, word(1) as usize, word(2) as usize, word(3), word(4) as usize);
        let body = &bytes[HEADER..];
        if body.len() != count * 8 {
            return Err(Error::Checkpoint(format!(
                "expected {count} parameters, found {} bytes",
                body.len()
            )));
        }
        let params = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        LstmLanguageModel::from_params(
            vocab,
            ModelDims {
                embed_dim: embed,
                hidden_dim: hidden,
            },
            seed,
            params,
        )
        .map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}
