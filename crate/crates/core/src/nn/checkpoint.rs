//! Binary parameter files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic      4 bytes  "SSNN"
//! version    u32      1
//! networks   u32
//! per network:
//!   layers   u32
//!   per layer:
//!     inputs      u32
//!     outputs     u32
//!     activation  u8   (0 identity, 1 tanh, 2 relu)
//!     weights     outputs*inputs f64, row-major
//!     bias        outputs f64
//! crc32      u32      over every preceding byte
//! ```

use std::path::Path;

use super::{Dense, Mlp};
use crate::config::Activation;
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"SSNN";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn encode_networks(nets: &[&Mlp]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(nets.len() as u32).to_le_bytes());
    for net in nets {
        out.extend_from_slice(&(net.layers.len() as u32).to_le_bytes());
        for layer in &net.layers {
            out.extend_from_slice(&(layer.inputs as u32).to_le_bytes());
            out.extend_from_slice(&(layer.outputs as u32).to_le_bytes());
            out.push(layer.activation.code());
            for x in layer.weights.iter().chain(&layer.bias) {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| Error::Checkpoint("size overflow".into()))?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn decode_networks(bytes: &[u8]) -> Result<Vec<Mlp>> {
    if bytes.len() < 16 {
        return Err(Error::Checkpoint("file too short".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    let actual = crc32fast::hash(body);
    if stored != actual {
        return Err(Error::Checkpoint(format!(
            "checksum mismatch: stored {stored:08x}, computed {actual:08x}"
        )));
    }
    let mut r = Reader { bytes: body, pos: 0 };
    if r.take(4)? != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let count = r.u32()?;
    let mut nets = Vec::new();
    for _ in 0..count {
        let layers = r.u32()?;
        let mut dense = Vec::new();
        for _ in 0..layers {
            let inputs = r.u32()? as usize;
            let outputs = r.u32()? as usize;
            let code = r.take(1)?[0];
            let activation = Activation::from_code(code)
                .ok_or_else(|| Error::Checkpoint(format!("unknown activation code {code}")))?;
            let weights = r.f64s(inputs * outputs)?;
            let bias = r.f64s(outputs)?;
            dense.push(Dense {
                inputs,
                outputs,
                weights,
                bias,
                activation,
            });
        }
        nets.push(Mlp::from_layers(dense)?);
    }
    if r.pos != body.len() {
        return Err(Error::Checkpoint(format!(
            "{} trailing bytes",
            body.len() - r.pos
        )));
    }
    Ok(nets)
}

pub fn save_networks(path: impl AsRef<Path>, nets: &[&Mlp]) -> Result<()> {
    std::fs::write(path, encode_networks(nets))?;
    Ok(())
}

pub fn load_networks(path: impl AsRef<Path>) -> Result<Vec<Mlp>> {
    decode_networks(&std::fs::read(path)?)
}
