//! Versioned binary checkpoints.
//!
//! All integers and floats are little-endian:
//!
//! ```text
//! magic        8 bytes   b"PRISMCKP"
//! version      u32       1
//! config_len   u64       byte length of the config text
//! config       config_len bytes of UTF-8 TOML (the model config)
//! n_params     u64
//! per parameter, in store order:
//!   name_len   u32
//!   name       name_len bytes of UTF-8
//!   ndim       u32
//!   dims       ndim × u64
//!   values     prod(dims) × f64
//! ```
//!
//! The file must end exactly after the last value.

use std::path::Path;

use crate::error::{PrismError, Result};
use crate::model::{Prism, PrismConfig};
use crate::params::ParamStore;
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 8] = b"PRISMCKP";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub config: PrismConfig,
    pub params: ParamStore,
}

impl Checkpoint {
    pub fn new(config: PrismConfig, params: ParamStore) -> Self {
        Checkpoint { config, params }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let config =
            toml::to_string(&self.config).map_err(|e| PrismError::Checkpoint(format!("cannot encode config: {e}")))?;
        let mut out = Vec::with_capacity(64 + config.len() + self.params.scalar_count() * 8);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(config.len() as u64).to_le_bytes());
        out.extend_from_slice(config.as_bytes());
        out.extend_from_slice(&(self.params.len() as u64).to_le_bytes());
        for (_, name, t) in self.params.iter() {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
            for &d in t.shape() {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8, "magic")? != MAGIC {
            return Err(PrismError::Checkpoint("not a checkpoint file (bad magic)".into()));
        }
        let version = r.u32("version")?;
        if version != VERSION {
            return Err(PrismError::Checkpoint(format!(
                "unsupported version {version}, expected {VERSION}"
            )));
        }
        let config_len = r.len("config length")?;
        let config_text = std::str::from_utf8(r.take(config_len, "config")?)
            .map_err(|_| PrismError::Checkpoint("config is not UTF-8".into()))?;
        let config: PrismConfig =
            toml::from_str(config_text).map_err(|e| PrismError::Checkpoint(format!("bad config: {e}")))?;
        let n_params = r.len("parameter count")?;
        let mut params = ParamStore::new();
        for i in 0..n_params {
            let name_len = r.u32("name length")? as usize;
            let name = std::str::from_utf8(r.take(name_len, "name")?)
                .map_err(|_| PrismError::Checkpoint(format!("parameter {i} name is not UTF-8")))?
                .to_string();
            let ndim = r.u32("rank")? as usize;
            let mut shape = Vec::with_capacity(ndim);
            for _ in 0..ndim {
                shape.push(r.len("dimension")?);
            }
            let count = shape
                .iter()
                .try_fold(1usize, |acc, &d| acc.checked_mul(d))
                .filter(|&n| n <= bytes.len() / 8)
                .ok_or_else(|| PrismError::Checkpoint(format!("{name}: implausible shape {shape:?}")))?;
            let raw = r.take(count * 8, &name)?;
            let data = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            let t = Tensor::new(shape, data).map_err(|e| PrismError::Checkpoint(format!("{name}: {e}")))?;
            params.push(name, t);
        }
        if r.pos != bytes.len() {
            return Err(PrismError::Checkpoint(format!(
                "{} trailing bytes after the last parameter",
                bytes.len() - r.pos
            )));
        }
        Ok(Checkpoint { config, params })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes =
            std::fs::read(path).map_err(|e| PrismError::Checkpoint(format!("cannot read {}: {e}", path.display())))?;
        Checkpoint::from_bytes(&bytes)
    }

    /// Rebuilds the model, checking the parameters against the config.
    pub fn model(&self) -> Result<Prism> {
        Prism::from_params(&self.config, &self.params)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                PrismError::Checkpoint(format!("truncated file while reading {what} at byte {}", self.pos))
            })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn len(&mut self, what: &str) -> Result<usize> {
        let v = u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes"));
        usize::try_from(v).map_err(|_| PrismError::Checkpoint(format!("{what} {v} too large")))
    }
}

/// Fails with the dotted path of the first field where the checkpoint's
/// config differs from `expected`.
pub fn check_compatible(found: &PrismConfig, expected: &PrismConfig) -> Result<()> {
    let to_value = |c: &PrismConfig| {
        toml::Value::try_from(c).map_err(|e| PrismError::Internal(format!("cannot encode config: {e}")))
    };
    match first_difference(&to_value(found)?, &to_value(expected)?, "") {
        None => Ok(()),
        Some((path, a, b)) => Err(PrismError::Checkpoint(format!(
            "config mismatch at {path}: checkpoint has {a}, spec has {b}"
        ))),
    }
}

fn first_difference(a: &toml::Value, b: &toml::Value, path: &str) -> Option<(String, String, String)> {
    use toml::Value;
    let show = |v: Option<&Value>| v.map_or("nothing".to_string(), |v| v.to_string());
    match (a, b) {
        (Value::Table(ta), Value::Table(tb)) => {
            let mut keys: Vec<&String> = ta.keys().chain(tb.keys()).collect();
            keys.sort();
            keys.dedup();
            keys.into_iter().find_map(|k| {
                let sub = if path.is_empty() {
                    k.clone()
                } else {
                    format!("{path}.{k}")
                };
                match (ta.get(k), tb.get(k)) {
                    (Some(x), Some(y)) => first_difference(x, y, &sub),
                    (x, y) => Some((sub, show(x), show(y))),
                }
            })
        }
        _ if a == b => None,
        _ => Some((path.to_string(), a.to_string(), b.to_string())),
    }
}
