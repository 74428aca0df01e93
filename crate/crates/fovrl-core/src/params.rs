//! Named parameter collections and their flat binary serialization.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::tensor::{Tensor, TensorError};

/// Checkpoint magic bytes.
pub const CHECKPOINT_MAGIC: &[u8; 4] = b"FVRL";
/// Checkpoint format version.
pub const CHECKPOINT_VERSION: u32 = 1;

/// An ordered collection of uniquely named parameter tensors with a fixed
/// flat layout. Worker threads synchronize whole vectors of these from the
/// shared global copy; the tape writes gradients into the same flat layout.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamVector {
    entries: Vec<(String, Tensor)>,
    offsets: Vec<usize>,
    total: usize,
    version: u64,
}

impl Default for ParamVector {
    fn default() -> Self {
        Self::new()
    }
}

impl ParamVector {
    pub fn new() -> ParamVector {
        ParamVector {
            entries: Vec::new(),
            offsets: Vec::new(),
            total: 0,
        version: 0,
        }
    }

    /// Appends a named tensor. Names must be unique.
    pub fn push(&mut self, name: &str, tensor: Tensor) -> Result<usize, TensorError> {
        if self.entries.iter().any(|(n, _)| n == name) {
            return Err(TensorError::DuplicateName(name.to_string()));
        }
        self.offsets.push(self.total);
        self.total += tensor.len();
        self.entries.push((name.to_string(), tensor));
        Ok(self.entries.len() - 1)
    }

    pub fn count(&self) -> usize {
        self.entries.len()
    }

    /// Total number of scalar parameters.
    pub fn len_flat(&self) -> usize {
        self.total
    }

    pub fn name(&self, index: usize) -> &str {
        &self.entries[index].0
    }

    pub fn tensor(&self, index: usize) -> &Tensor {
        &self.entries[index].1
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|(n, _)| n == name)
    }

    /// Flat offset of parameter `index` within the concatenated layout.
    pub fn offset(&self, index: usize) -> usize {
        self.offsets[index]
    }

    /// Flat range `[offset, offset + len)` of a named parameter.
    pub fn range_of(&self, name: &str) -> Option<core::ops::Range<usize>> {
        let i = self.index_of(name)?;
        Some(self.offsets[i]..self.offsets[i] + self.entries[i].1.len())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    /// Concatenation of all tensors in registration order.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.total);
        for (_, t) in &self.entries {
            out.extend_from_slice(t.data());
        }
        out
    }

    /// Overwrites all values from a flat vector with the same layout.
    pub fn copy_from_flat(&mut self, flat: &[f64]) -> Result<(), TensorError> {
        if flat.len() != self.total {
            return Err(TensorError::ShapeMismatch(format!(
                "flat vector has {} values, layout wants {}",
                flat.len(),
                self.total
            )));
        }
        let mut start = 0;
        for (_, t) in &mut self.entries {
            let n = t.len();
            t.data_mut().copy_from_slice(&flat[start..start + n]);
            start += n;
        }
        self.version += 1;
        Ok(())
    }

    pub fn get_flat(&self, i: usize) -> f64 {
        let k = match self.offsets.binary_search(&i) {
            Ok(k) => k,
            Err(k) => k - 1,
        };
        self.entries[k].1.data()[i - self.offsets[k]]
    }

    pub fn set_flat(&mut self, i: usize, v: f64) {
        let k = match self.offsets.binary_search(&i) {
            Ok(k) => k,
            Err(k) => k - 1,
        };
        let off = self.offsets[k];
        self.entries[k].1.data_mut()[i - off] = v;
        self.version += 1;
    }

    /// Monotone counter bumped on every bulk value update.
    pub fn version(&self) -> u64 {
        self.version
    }

    /// Serializes to the flat binary checkpoint format: magic `FVRL`,
    /// format version `u32`, tensor count `u64`, then per tensor the name
    /// length (`u32`), name bytes, rank (`u32`), dims (`u64` each) and
    /// `f64` values. Everything little-endian.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.entries.len() as u64).to_le_bytes());
        for (name, t) in &self.entries {
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
        out
    }

    /// Parses the checkpoint format produced by [`ParamVector::encode`].
    pub fn decode(bytes: &[u8]) -> Result<ParamVector, TensorError> {
        let mut cur = Cursor { bytes, pos: 0 };
        let magic = cur.take(4)?;
        if magic != CHECKPOINT_MAGIC {
            return Err(TensorError::BadCheckpoint(String::from(
                "missing FVRL magic",
            )));
        }
        let version = cur.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(TensorError::BadCheckpoint(format!(
                "unsupported format version {version}"
            )));
        }
        let count = cur.u64()?;
        let mut params = ParamVector::new();
        for _ in 0..count {
            let name_len = cur.u32()? as usize;
            let name_bytes = cur.take(name_len)?;
            let name = core::str::from_utf8(name_bytes)
                .map_err(|_| TensorError::BadCheckpoint(String::from("name is not UTF-8")))?
                .to_string();
            let rank = cur.u32()? as usize;
            if rank > 8 {
                return Err(TensorError::BadCheckpoint(format!(
                    "implausible rank {rank}"
                )));
            }
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                shape.push(cur.u64()? as usize);
            }
            let n: usize = shape.iter().product();
            let mut data = Vec::with_capacity(n);
            for _ in 0..n {
                data.push(cur.f64()?);
            }
            let tensor = Tensor::new(shape, data)
                .map_err(|e| TensorError::BadCheckpoint(format!("tensor {name}: {e}")))?;
            params.push(&name, tensor)?;
        }
        if cur.pos != bytes.len() {
            return Err(TensorError::BadCheckpoint(format!(
                "{} trailing bytes",
                bytes.len() - cur.pos
            )));
        }
        Ok(params)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], TensorError> {
        if self.pos + n > self.bytes.len() {
            return Err(TensorError::BadCheckpoint(String::from("truncated data")));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, TensorError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, TensorError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, TensorError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Central-difference gradient verification: returns the maximum over all
/// coordinates of `|analytic - fd| / max(1, |analytic|)` where
/// `fd = (f(theta + eps e_i) - f(theta - eps e_i)) / (2 eps)`.
///
/// `f` must be a deterministic function of the parameter values. Inputs
/// should be nudged away from non-differentiable points (the relu kink at
/// exactly zero) before calling.
pub fn finite_diff_check<F: FnMut(&ParamVector) -> f64>(
    mut f: F,
    params: &ParamVector,
    analytic: &[f64],
    eps: f64,
) -> f64 {
    assert!(eps > 0.0, "finite difference step must be positive");
    assert_eq!(analytic.len(), params.len_flat());
    let mut work = params.clone();
    let mut worst = 0.0f64;
    for i in 0..params.len_flat() {
        let orig = work.get_flat(i);
        work.set_flat(i, orig + eps);
        let up = f(&work);
        work.set_flat(i, orig - eps);
        let down = f(&work);
        work.set_flat(i, orig);
        let fd = (up - down) / (2.0 * eps);
        let rel = (analytic[i] - fd).abs() / analytic[i].abs().max(1.0);
        if rel > worst {
            worst = rel;
        }
    }
    worst
}
