//! Binary checkpoint container.
//!
//! ```text
//! magic      8 bytes   "RNCKPT01"
//! header_len u64 LE
//! header     canonical JSON {format_version, params:[{name, shape}], spec, step_count}
//! payload_len u64 LE   (bytes)
//! payload    f64 LE, parameters in declaration order
//! checksum   32 bytes  SHA-256 of payload
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::spec::ModelSpec;
use super::state::ModelState;
use crate::autodiff::Tensor;
use crate::canon::to_canonical_string;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"RNCKPT01";
const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ParamEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    format_version: u32,
    spec: ModelSpec,
    step_count: u64,
    params: Vec<ParamEntry>,
}

pub fn encode_checkpoint(state: &ModelState) -> Result<Vec<u8>> {
    let header = Header {
        format_version: FORMAT_VERSION,
        spec: state.spec.clone(),
        step_count: state.step_count,
        params: state
            .names
            .iter()
            .zip(&state.params)
            .map(|(n, p)| ParamEntry {
                name: n.clone(),
                shape: p.shape().to_vec(),
            })
            .collect(),
    };
    let header = to_canonical_string(&header)?.into_bytes();
    let mut payload = Vec::with_capacity(8 * state.param_count());
    for p in &state.params {
        for v in p.data() {
            payload.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut out = Vec::with_capacity(8 + 16 + header.len() + payload.len() + 32);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&payload);
    out.extend_from_slice(&Sha256::digest(&payload));
    Ok(out)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<ModelState> {
    let bad = |m: &str| Error::Checkpoint(m.to_string());
    let take = |pos: usize, n: usize| bytes.get(pos..pos + n).ok_or_else(|| bad("truncated container"));
    let u64_at = |pos: usize| -> Result<usize> {
        let b: [u8; 8] = take(pos, 8)?.try_into().expect("8 bytes");
        Ok(u64::from_le_bytes(b) as usize)
    };
    if take(0, 8)? != MAGIC {
        return Err(bad("bad magic"));
    }
    let hlen = u64_at(8)?;
    let header: Header = serde_json::from_slice(take(16, hlen)?)?;
    if header.format_version != FORMAT_VERSION {
        return Err(bad("unsupported format version"));
    }
    let plen = u64_at(16 + hlen)?;
    let payload = take(24 + hlen, plen)?;
    let checksum = take(24 + hlen + plen, 32)?;
    if Sha256::digest(payload).as_slice() != checksum {
        return Err(bad("payload checksum mismatch"));
    }
    if bytes.len() != 24 + hlen + plen + 32 {
        return Err(bad("trailing bytes"));
    }
    let mut values = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    let mut names = Vec::new();
    let mut params = Vec::new();
    for e in header.params {
        let n: usize = e.shape.iter().product();
        let data: Vec<f64> = values.by_ref().take(n).collect();
        if data.len() != n {
            return Err(bad("payload shorter than declared shapes"));
        }
        params.push(Tensor::new(e.shape, data)?);
        names.push(e.name);
    }
    if values.next().is_some() {
        return Err(bad("payload longer than declared shapes"));
    }
    let state = ModelState {
        spec: header.spec,
        names,
        params,
        step_count: header.step_count,
    };
    let fresh = super::state::init_parameters(&state.spec, 0)?;
    let layout_ok = fresh.names == state.names
        && fresh.params.iter().zip(&state.params).all(|(a, b)| a.shape() == b.shape());
    if !layout_ok {
        return Err(bad("parameter layout does not match spec"));
    }
    Ok(state)
}

pub fn save_checkpoint(state: &ModelState, path: &Path) -> Result<()> {
    std::fs::write(path, encode_checkpoint(state)?)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<ModelState> {
    decode_checkpoint(&std::fs::read(path)?)
}
