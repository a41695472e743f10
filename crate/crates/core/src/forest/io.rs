//! Bit-exact model serialization.
//!
//! Layout (little-endian, no padding):
//!   magic "DDFABC01" (8 bytes)
//!   u32: tree count K, depth d, feature count M, loss-kind code
//!   per feature: f64 mean, f64 std
//!   per tree: per internal node M f64 weights then 1 f64 threshold,
//!             then 2^d f64 leaf responses
//!
//! Values are stored as f64 regardless of the in-memory scalar type. A
//! sidecar text file (`<model>.meta`, `key=value` lines) carries the
//! provenance a plain parameter dump cannot: the stencil the features came
//! from, the teacher setup and the recommended prediction clamp.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::{cast, Scalar};

use super::{Forest, LossKind};

pub const MODEL_MAGIC: &[u8; 8] = b"DDFABC01";

pub fn model_to_bytes<S: Scalar>(forest: &Forest<S>) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + forest.params().len() * 8);
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&(forest.n_trees() as u32).to_le_bytes());
    out.extend_from_slice(&(forest.depth() as u32).to_le_bytes());
    out.extend_from_slice(&(forest.n_features() as u32).to_le_bytes());
    out.extend_from_slice(&forest.loss_kind().code().to_le_bytes());
    let (mean, std) = forest.feature_stats();
    for (m, s) in mean.iter().zip(std) {
        out.extend_from_slice(&m.to_f64().unwrap().to_le_bytes());
        out.extend_from_slice(&s.to_f64().unwrap().to_le_bytes());
    }
    for p in forest.params() {
        out.extend_from_slice(&p.to_f64().unwrap().to_le_bytes());
    }
    out
}

pub fn model_from_bytes<S: Scalar>(bytes: &[u8]) -> Result<Forest<S>> {
    if bytes.len() < 24 {
        return Err(Error::format("model file shorter than its header"));
    }
    if &bytes[..8] != MODEL_MAGIC {
        return Err(Error::format(format!(
            "bad magic {:?}, expected {:?}",
            &bytes[..8.min(bytes.len())],
            MODEL_MAGIC
        )));
    }
    let u32_at = |off: usize| u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
    let k = u32_at(8) as usize;
    let d = u32_at(12) as usize;
    let m = u32_at(16) as usize;
    let loss = LossKind::from_code(u32_at(20))?;
    if k == 0 || d == 0 || d > 24 || m == 0 || m > 1_000_000 {
        return Err(Error::format(format!("implausible model dimensions K={k} d={d} M={m}")));
    }
    let n_nodes = (1usize << d) - 1;
    let stride = n_nodes * (m + 1) + (1usize << d);
    let expect = 24 + 8 * (2 * m + k * stride);
    if bytes.len() != expect {
        return Err(Error::format(format!(
            "model file is {} bytes, layout requires {expect}",
            bytes.len()
        )));
    }
    let f64_at = |off: usize| f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
    let mut off = 24;
    let mut mean = Vec::with_capacity(m);
    let mut std = Vec::with_capacity(m);
    for _ in 0..m {
        mean.push(cast::<S>(f64_at(off)));
        std.push(cast::<S>(f64_at(off + 8)));
        off += 16;
    }
    let mut params = Vec::with_capacity(k * stride);
    for _ in 0..k * stride {
        params.push(cast::<S>(f64_at(off)));
        off += 8;
    }
    Forest::new(k, d, m, loss, mean, std, params)
        .map_err(|e| Error::format(format!("model file holds invalid parameters: {e}")))
}

pub fn save_model<S: Scalar>(forest: &Forest<S>, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&model_to_bytes(forest))?;
    Ok(())
}

pub fn load_model<S: Scalar>(path: &Path) -> Result<Forest<S>> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    model_from_bytes(&bytes)
}

/// Key-value sidecar describing how a model was produced and how to use it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ModelMeta {
    pub entries: BTreeMap<String, String>,
}

impl ModelMeta {
    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key)?.parse().ok()
    }

    pub fn get_usize(&self, key: &str) -> Option<usize> {
        self.get(key)?.parse().ok()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(v);
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::format(format!("metadata line {} has no '='", lineno + 1)))?;
            entries.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Self { entries })
    }
}

pub fn meta_path(model_path: &Path) -> std::path::PathBuf {
    let mut os = model_path.as_os_str().to_os_string();
    os.push(".meta");
    std::path::PathBuf::from(os)
}

pub fn save_model_meta(meta: &ModelMeta, model_path: &Path) -> Result<()> {
    std::fs::write(meta_path(model_path), meta.to_text())?;
    Ok(())
}

pub fn load_model_meta(model_path: &Path) -> Result<Option<ModelMeta>> {
    let p = meta_path(model_path);
    if !p.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(p)?;
    Ok(Some(ModelMeta::from_text(&text)?))
}
