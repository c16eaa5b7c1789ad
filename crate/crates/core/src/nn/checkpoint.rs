//! Binary checkpoint format.
//!
//! ```text
//! "MBNN"                      4 bytes magic
//! version                     u32 LE (currently 1)
//! spec length, spec           u32 LE + UTF-8 JSON of the ModelSpec
//! entry count                 u32 LE
//! per entry:
//!   layer name                u16 LE length + UTF-8
//!   param name                u16 LE length + UTF-8
//!   role                      u8 (0 trainable, 1 statistic)
//!   rank, dims                u8 + rank x u32 LE
//!   element count, values     u32 LE + count x f32 LE
//! ```
//!
//! Every length is validated before it is used to slice, so a corrupted file
//! yields an error and never a partially populated model.

use std::fs;
use std::path::Path;

use thiserror::Error;

use super::model::{LayerParams, ModelSpec, Param, ParamRole, ParamSet};
use super::tensor::Tensor;

pub const MAGIC: &[u8; 4] = b"MBNN";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint (bad magic bytes)")]
    BadMagic,
    #[error("unsupported checkpoint version {found} (expected {FORMAT_VERSION})")]
    VersionMismatch { found: u32 },
    #[error("checkpoint truncated while reading {what} at byte {offset}")]
    Truncated { what: &'static str, offset: usize },
    #[error("checkpoint has {0} unexpected trailing bytes")]
    TrailingBytes(usize),
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error("checkpoint parameters inconsistent with model: {0}")]
    ShapeInconsistent(String),
}

pub fn encode(model: &ModelSpec, params: &ParamSet<f32>) -> Result<Vec<u8>, CheckpointError> {
    params
        .check_against(model)
        .map_err(|e| CheckpointError::ShapeInconsistent(e.to_string()))?;
    let spec = serde_json::to_vec(model).map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(spec.len() as u32).to_le_bytes());
    out.extend_from_slice(&spec);
    let count = params.iter().count() as u32;
    out.extend_from_slice(&count.to_le_bytes());
    for (layer, p) in params.iter() {
        for s in [layer, p.name.as_str()] {
            out.extend_from_slice(&(s.len() as u16).to_le_bytes());
            out.extend_from_slice(s.as_bytes());
        }
        out.push(match p.role {
            ParamRole::Trainable => 0,
            ParamRole::Statistic => 1,
        });
        out.push(p.value.rank() as u8);
        for &d in p.value.shape() {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        out.extend_from_slice(&(p.value.len() as u32).to_le_bytes());
        for v in p.value.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], CheckpointError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or(CheckpointError::Truncated {
                what,
                offset: self.pos,
            })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self, what: &'static str) -> Result<u8, CheckpointError> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &'static str) -> Result<u16, CheckpointError> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn string(&mut self, what: &'static str) -> Result<String, CheckpointError> {
        let len = self.u16(what)? as usize;
        let bytes = self.take(len, what)?;
        String::from_utf8(bytes.to_vec())
            .map_err(|_| CheckpointError::Corrupt(format!("{what} is not UTF-8")))
    }
}

pub fn decode(bytes: &[u8]) -> Result<(ModelSpec, ParamSet<f32>), CheckpointError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4, "magic").map_err(|_| CheckpointError::BadMagic)? != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = r.u32("version")?;
    if version != FORMAT_VERSION {
        return Err(CheckpointError::VersionMismatch { found: version });
    }
    let spec_len = r.u32("model spec length")? as usize;
    let spec: ModelSpec = serde_json::from_slice(r.take(spec_len, "model spec")?)
        .map_err(|e| CheckpointError::Corrupt(format!("model spec: {e}")))?;
    spec.validate()
        .map_err(|e| CheckpointError::Corrupt(format!("model spec: {e}")))?;

    let count = r.u32("entry count")? as usize;
    let mut layers: Vec<LayerParams<f32>> = Vec::new();
    for _ in 0..count {
        let layer = r.string("layer name")?;
        let name = r.string("param name")?;
        let role = match r.u8("param role")? {
            0 => ParamRole::Trainable,
            1 => ParamRole::Statistic,
            other => return Err(CheckpointError::Corrupt(format!("unknown role tag {other}"))),
        };
        let rank = r.u8("rank")? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(r.u32("dimension")? as usize);
        }
        let declared = r.u32("element count")? as usize;
        let expected = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| CheckpointError::Corrupt("shape overflows".into()))?;
        if declared != expected {
            return Err(CheckpointError::Corrupt(format!(
                "{layer}/{name}: element count {declared} does not match shape {shape:?}"
            )));
        }
        let raw = r.take(
            declared
                .checked_mul(4)
                .ok_or_else(|| CheckpointError::Corrupt("length overflows".into()))?,
            "tensor data",
        )?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let value = Tensor::new(shape, data)
            .map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
        let p = Param { name, role, value };
        match layers.last_mut() {
            Some(l) if l.layer == layer => l.params.push(p),
            _ => layers.push(LayerParams {
                layer,
                params: vec![p],
            }),
        }
    }
    if r.pos != bytes.len() {
        return Err(CheckpointError::TrailingBytes(bytes.len() - r.pos));
    }
    let params = ParamSet { layers };
    params
        .check_against(&spec)
        .map_err(|e| CheckpointError::ShapeInconsistent(e.to_string()))?;
    Ok((spec, params))
}

pub fn save_checkpoint(
    model: &ModelSpec,
    params: &ParamSet<f32>,
    path: impl AsRef<Path>,
) -> Result<(), CheckpointError> {
    fs::write(path, encode(model, params)?)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(ModelSpec, ParamSet<f32>), CheckpointError> {
    decode(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::build_baseline_model;

    fn fixture() -> (ModelSpec, ParamSet<f32>) {
        let model = build_baseline_model([16, 16, 3], 2).unwrap();
        let params = ParamSet::init(&model, 9).unwrap();
        (model, params)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let (model, params) = fixture();
        let bytes = encode(&model, &params).unwrap();
        let (m2, p2) = decode(&bytes).unwrap();
        assert_eq!(m2, model);
        assert_eq!(encode(&m2, &p2).unwrap(), bytes);
    }

    #[test]
    fn corrupted_length_field_is_rejected() {
        let (model, params) = fixture();
        let mut bytes = encode(&model, &params).unwrap();
        // Spec length lives right after magic + version.
        bytes[8..12].copy_from_slice(&u32::MAX.to_le_bytes());
        assert!(matches!(decode(&bytes), Err(CheckpointError::Truncated { .. })));
    }

    #[test]
    fn distinct_errors() {
        let (model, params) = fixture();
        let bytes = encode(&model, &params).unwrap();

        let mut wrong_version = bytes.clone();
        wrong_version[4..8].copy_from_slice(&7u32.to_le_bytes());
        assert!(matches!(
            decode(&wrong_version),
            Err(CheckpointError::VersionMismatch { found: 7 })
        ));

        assert!(matches!(
            decode(&bytes[..bytes.len() - 3]),
            Err(CheckpointError::Truncated { .. })
        ));
        assert!(matches!(decode(b"PNG\x00rest"), Err(CheckpointError::BadMagic)));

        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(decode(&extra), Err(CheckpointError::TrailingBytes(1))));

        // Parameters from a different architecture.
        let other = build_baseline_model([16, 16, 1], 2).unwrap();
        let other_params = ParamSet::<f32>::init(&other, 1).unwrap();
        let mut mixed = encode(&other, &other_params).unwrap();
        let spec = serde_json::to_vec(&model).unwrap();
        let old_len = u32::from_le_bytes(mixed[8..12].try_into().unwrap()) as usize;
        mixed.splice(12..12 + old_len, spec.iter().copied());
        mixed[8..12].copy_from_slice(&(spec.len() as u32).to_le_bytes());
        assert!(matches!(
            decode(&mixed),
            Err(CheckpointError::ShapeInconsistent(_))
        ));
    }
}
