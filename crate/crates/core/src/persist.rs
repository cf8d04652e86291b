//! Binary model files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic     8 bytes  "SMIXMDL\0"
//! version   u32
//! arch      u32 length + UTF-8 name
//! config    6 x u64  vocab_size seq_len embedding_dim lstm_units conv_filters dense_hidden
//! params    u32 count, then per tensor:
//!             u32 length + UTF-8 name, u32 rank, rank x u64 dims, f64 payload
//! checksum  SHA-256 of every preceding byte
//! ```
//!
//! Payloads are always `f64`, so `f32` models round-trip exactly too.

use std::io::{Read, Write};

use sha2::{Digest, Sha256};

use crate::arch::{ArchId, Model, ModelConfig};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 8] = b"SMIXMDL\0";
pub const FORMAT_VERSION: u32 = 1;
const CHECKSUM_LEN: usize = 32;

fn put_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(buf: &mut Vec<u8>, v: u64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_str(buf: &mut Vec<u8>, s: &str) {
    put_u32(buf, s.len() as u32);
    buf.extend_from_slice(s.as_bytes());
}

/// Serializes `model`; the bytes depend only on its arch, config and parameters.
pub fn encode_model<T: Scalar>(model: &Model<T>) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    put_u32(&mut buf, FORMAT_VERSION);
    put_str(&mut buf, model.arch().name());
    let c = model.config();
    for v in [c.vocab_size, c.seq_len, c.embedding_dim, c.lstm_units, c.conv_filters, c.dense_hidden] {
        put_u64(&mut buf, v as u64);
    }
    let params = model.parameters();
    put_u32(&mut buf, params.len() as u32);
    for (name, t) in params {
        put_str(&mut buf, &name);
        put_u32(&mut buf, t.ndim() as u32);
        for &d in t.shape() {
            put_u64(&mut buf, d as u64);
        }
        for &x in t.data() {
            buf.extend_from_slice(&x.as_f64().to_le_bytes());
        }
    }
    let digest = Sha256::digest(&buf);
    buf.extend_from_slice(&digest);
    buf
}

pub fn save_model<T: Scalar, W: Write>(model: &Model<T>, mut out: W) -> Result<()> {
    out.write_all(&encode_model(model))?;
    out.flush()?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format("unexpected end of model data".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Format("dimension does not fit in memory".into()))
    }

    fn str(&mut self) -> Result<&'a str> {
        let n = self.u32()? as usize;
        std::str::from_utf8(self.take(n)?).map_err(|_| Error::Format("name is not UTF-8".into()))
    }
}

/// Inverse of [`encode_model`]. Checks the magic, then the version, then
/// the checksum, before looking at anything else.
pub fn decode_model<T: Scalar>(bytes: &[u8]) -> Result<Model<T>> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::BadMagic);
    }
    if bytes.len() < MAGIC.len() + 4 {
        return Err(Error::Checksum);
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    if bytes.len() < 12 + CHECKSUM_LEN {
        return Err(Error::Checksum);
    }
    let (body, stored) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
    if Sha256::digest(body).as_slice() != stored {
        return Err(Error::Checksum);
    }

    let mut cur = Cursor { bytes: body, pos: 12 };
    let arch: ArchId = cur.str()?.parse()?;
    let config = ModelConfig {
        vocab_size: cur.usize()?,
        seq_len: cur.usize()?,
        embedding_dim: cur.usize()?,
        lstm_units: cur.usize()?,
        conv_filters: cur.usize()?,
        dense_hidden: cur.usize()?,
    };
    let mut model = Model::<T>::zeros(arch, config)?;
    let names: Vec<(String, Vec<usize>)> =
        model.parameters().into_iter().map(|(n, t)| (n, t.shape().to_vec())).collect();
    let count = cur.u32()? as usize;
    if count != names.len() {
        return Err(Error::Format(format!("{arch} has {} tensors, file has {count}", names.len())));
    }
    for ((name, shape), tensor) in names.iter().zip(model.parameters_mut()) {
        let found = cur.str()?;
        if found != name {
            return Err(Error::Format(format!("expected tensor {name}, found {found}")));
        }
        let rank = cur.u32()? as usize;
        let dims = (0..rank).map(|_| cur.usize()).collect::<Result<Vec<_>>>()?;
        if &dims != shape {
            return Err(Error::Format(format!("tensor {name}: shape {dims:?}, expected {shape:?}")));
        }
        let payload = cur.take(tensor.len() * 8)?;
        for (slot, chunk) in tensor.data_mut().iter_mut().zip(payload.chunks_exact(8)) {
            *slot = T::lit(f64::from_le_bytes(chunk.try_into().expect("8 bytes")));
        }
    }
    if cur.pos != body.len() {
        return Err(Error::Format("trailing bytes after the last tensor".into()));
    }
    Ok(model)
}

/// Lowercase hex SHA-256 of `bytes`, for artifact manifests.
pub fn content_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn load_model<T: Scalar, R: Read>(mut reader: R) -> Result<Model<T>> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    decode_model(&bytes)
}
