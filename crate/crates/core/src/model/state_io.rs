//! `model.bin`: `"HLMD"`, `version: u32`, `d_f: u32`, `d: u32`,
//! `activation: u32` (0 elu, 1 linear), `step: u64`, then the parameters,
//! Adam first moments and second moments, each as every tensor in
//! declaration order, little-endian `f64`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::nn::Activation;
use super::{ModelState, Params};

pub const MODEL_MAGIC: &[u8; 4] = b"HLMD";
const VERSION: u32 = 1;

pub fn encode_state(s: &ModelState) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + 24 * s.params.num_values());
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(s.params.feature_dim() as u32).to_le_bytes());
    out.extend_from_slice(&(s.params.dim() as u32).to_le_bytes());
    let act: u32 = match s.activation {
        Activation::Elu => 0,
        Activation::Linear => 1,
    };
    out.extend_from_slice(&act.to_le_bytes());
    out.extend_from_slice(&s.step.to_le_bytes());
    for p in [&s.params, &s.m, &s.v] {
        for t in p.tensors() {
            for v in t {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    out
}

pub fn decode_state(bytes: &[u8], path: &Path) -> Result<ModelState> {
    let err = |msg: &str| Error::Format {
        path: path.to_path_buf(),
        msg: msg.to_string(),
    };
    if bytes.len() < 28 || &bytes[..4] != MODEL_MAGIC {
        return Err(err("bad magic"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    if u32_at(4) != VERSION {
        return Err(err("unsupported version"));
    }
    let d_f = u32_at(8) as usize;
    let d = u32_at(12) as usize;
    let activation = match u32_at(16) {
        0 => Activation::Elu,
        1 => Activation::Linear,
        _ => return Err(err("unknown activation")),
    };
    let step = u64::from_le_bytes(bytes[20..28].try_into().expect("8 bytes"));
    let mut sets = [Params::zeros(d_f, d), Params::zeros(d_f, d), Params::zeros(d_f, d)];
    let need = 28 + 24 * sets[0].num_values();
    if bytes.len() != need {
        return Err(err(&format!("expected {need} bytes, found {}", bytes.len())));
    }
    let mut pos = 28;
    for p in &mut sets {
        for t in p.tensors_mut() {
            for v in t.iter_mut() {
                *v = f64::from_le_bytes(bytes[pos..pos + 8].try_into().expect("8 bytes"));
                pos += 8;
            }
        }
    }
    let [params, m, v] = sets;
    Ok(ModelState {
        params,
        m,
        v,
        step,
        activation,
    })
}

pub fn write_state(path: impl AsRef<Path>, s: &ModelState) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_state(s)).map_err(|e| Error::io(path, e))
}

pub fn read_state(path: impl AsRef<Path>) -> Result<ModelState> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_state(&bytes, path)
}
