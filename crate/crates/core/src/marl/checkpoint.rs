//! Binary checkpoint container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic "HRTMCKPT" | version u32 | config hash [32] | entry count u32
//! entry: name length u32 | name UTF-8 | rank u32 | dims u32 × rank | values f64 × product(dims)
//! ```

use std::fs;
use std::path::Path;

use super::learner::LearnerSet;
use crate::numcore::Tensor;
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"HRTMCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub config_hash: [u8; 32],
    pub entries: Vec<(String, Tensor)>,
}

impl Checkpoint {
    pub fn capture(set: &LearnerSet, config_hash: [u8; 32]) -> Self {
        let entries = set.named_params().into_iter().map(|(n, p)| (n, p.value.clone())).collect();
        Self { config_hash, entries }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.config_hash);
        out.extend_from_slice(&(self.entries.len() as u32).to_le_bytes());
        for (name, t) in &self.entries {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(t.ndim() as u32).to_le_bytes());
            for &d in t.shape() {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, at: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Checkpoint("not a checkpoint file".into()));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported checkpoint version {version}")));
        }
        let config_hash: [u8; 32] = r.take(32)?.try_into().expect("32 bytes");
        let count = r.u32()? as usize;
        let mut entries = Vec::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            let len = r.u32()? as usize;
            let name = String::from_utf8(r.take(len)?.to_vec()).map_err(|_| Error::Checkpoint("entry name is not UTF-8".into()))?;
            let rank = r.u32()? as usize;
            let shape = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
            let n: usize = shape.iter().product();
            let raw = r.take(n.checked_mul(8).ok_or_else(|| Error::Checkpoint("entry too large".into()))?)?;
            let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
            let t = Tensor::new(&shape, data).map_err(|e| Error::Checkpoint(format!("entry `{name}`: {e}")))?;
            entries.push((name, t));
        }
        if r.at != bytes.len() {
            return Err(Error::Checkpoint("trailing bytes after last entry".into()));
        }
        Ok(Self { config_hash, entries })
    }

    /// Copies every entry into `set`. Names and shapes must match exactly;
    /// a differing config hash is an error unless `force` is set.
    pub fn restore(&self, set: &mut LearnerSet, expected_hash: [u8; 32], force: bool) -> Result<()> {
        if self.config_hash != expected_hash && !force {
            return Err(Error::Checkpoint("checkpoint was written for a different configuration".into()));
        }
        let mut targets = set.named_params_mut();
        if targets.len() != self.entries.len() {
            return Err(Error::Checkpoint(format!("checkpoint has {} entries, model has {}", self.entries.len(), targets.len())));
        }
        for ((name, p), (ename, t)) in targets.iter_mut().zip(&self.entries) {
            if name != ename || p.shape() != t.shape() {
                return Err(Error::Checkpoint(format!("entry `{ename}` {:?} does not match `{name}` {:?}", t.shape(), p.shape())));
            }
        }
        for ((_, p), (_, t)) in targets.into_iter().zip(&self.entries) {
            p.value = t.clone();
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| Error::Checkpoint("truncated checkpoint".into()))?;
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}
