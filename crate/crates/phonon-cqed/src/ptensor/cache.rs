//! Binary cache for built process tensors.
//!
//! Layout (little-endian): magic `PCQPT`, format version (u32), dt (f64),
//! steps, memory steps (u64 each), svd cutoff (f64), then the left boundary,
//! the four cores and the right boundary, each preceded by its dimensions
//! (two u64) and stored as interleaved (re, im) f64 pairs in column-major
//! order.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use sha2::{Digest, Sha256};

use super::{BuildStats, ProcessTensor, CLASSES};
use crate::bath::BathSpec;
use crate::error::{Error, Result};

const MAGIC: &[u8; 5] = b"PCQPT";
pub const FORMAT_VERSION: u32 = 1;

/// Hex digest identifying a process tensor by everything it depends on.
pub fn cache_key(spec: &BathSpec, dt: f64, steps: usize, svd_cutoff: f64, memory_tolerance: f64) -> String {
    let mut h = Sha256::new();
    h.update(FORMAT_VERSION.to_le_bytes());
    for x in [spec.alpha, spec.xi, spec.temperature, spec.nu_max, dt, svd_cutoff, memory_tolerance] {
        h.update(x.to_le_bytes());
    }
    h.update((spec.n_quad as u64).to_le_bytes());
    h.update((steps as u64).to_le_bytes());
    hex::encode(h.finalize())
}

/// Path of the cache entry for `key` inside `dir`.
pub fn cache_path(dir: &Path, key: &str) -> PathBuf {
    dir.join(format!("{key}.pt"))
}

fn put_matrix(out: &mut Vec<u8>, rows: usize, cols: usize, data: &[Complex64]) {
    out.extend_from_slice(&(rows as u64).to_le_bytes());
    out.extend_from_slice(&(cols as u64).to_le_bytes());
    for z in data {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
}

pub fn to_bytes(pt: &ProcessTensor) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&pt.dt.to_le_bytes());
    out.extend_from_slice(&(pt.steps as u64).to_le_bytes());
    out.extend_from_slice(&(pt.memory_steps as u64).to_le_bytes());
    out.extend_from_slice(&pt.svd_cutoff.to_le_bytes());
    put_matrix(&mut out, pt.left.len(), 1, pt.left.as_slice());
    for core in &pt.cores {
        put_matrix(&mut out, core.nrows(), core.ncols(), core.as_slice());
    }
    put_matrix(&mut out, pt.right.len(), 1, pt.right.as_slice());
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Usage("truncated process-tensor cache file".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<usize> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()) as usize)
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn matrix(&mut self) -> Result<DMatrix<Complex64>> {
        let rows = self.u64()?;
        let cols = self.u64()?;
        let count = rows
            .checked_mul(cols)
            .filter(|&c| c.saturating_mul(16) <= self.buf.len())
            .ok_or_else(|| Error::Usage("corrupt process-tensor cache dimensions".into()))?;
        let mut data = Vec::with_capacity(count);
        for _ in 0..count {
            let re = self.f64()?;
            let im = self.f64()?;
            data.push(Complex64::new(re, im));
        }
        Ok(DMatrix::from_vec(rows, cols, data))
    }
}

pub fn from_bytes(buf: &[u8]) -> Result<ProcessTensor> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(MAGIC.len())? != MAGIC {
        return Err(Error::Usage("not a process-tensor cache file".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Usage(format!(
            "process-tensor cache version {version} unsupported (expected {FORMAT_VERSION})"
        )));
    }
    let dt = r.f64()?;
    let steps = r.u64()?;
    let memory_steps = r.u64()?;
    let svd_cutoff = r.f64()?;
    let left = r.matrix()?;
    let mut cores = Vec::with_capacity(CLASSES);
    for _ in 0..CLASSES {
        cores.push(r.matrix()?);
    }
    let right = r.matrix()?;
    let d = left.nrows();
    if right.nrows() != d || cores.iter().any(|c| c.nrows() != d || c.ncols() != d) {
        return Err(Error::Usage("inconsistent dimensions in process-tensor cache".into()));
    }
    let cores: [DMatrix<Complex64>; CLASSES] = cores.try_into().expect("four cores");
    Ok(ProcessTensor {
        dt,
        steps,
        memory_steps,
        svd_cutoff,
        left: DVector::from_column_slice(left.as_slice()),
        cores,
        right: DVector::from_column_slice(right.as_slice()),
        stats: BuildStats::default(),
    })
}

pub fn save(pt: &ProcessTensor, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&to_bytes(pt))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<ProcessTensor> {
    let mut buf = Vec::new();
    fs::File::open(path)?.read_to_end(&mut buf)?;
    from_bytes(&buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::memory_kernel;
    use crate::ptensor::build_process_tensor;
    use crate::system::Basis;

    #[test]
    fn round_trip() {
        let spec = BathSpec::new(0.025, 2.23, 4.0);
        let kernel = memory_kernel(0.1, 5, &spec).unwrap();
        let pt = build_process_tensor(&kernel, &Basis::default(), 7, 1e-8).unwrap();
        let back = from_bytes(&to_bytes(&pt)).unwrap();
        assert_eq!(back.cores, pt.cores);
        assert_eq!(back.left, pt.left);
        assert_eq!(back.right, pt.right);
        assert_eq!((back.dt, back.steps, back.memory_steps), (pt.dt, pt.steps, pt.memory_steps));
        assert!(from_bytes(&to_bytes(&pt)[..20]).is_err());
        let k1 = cache_key(&spec, 0.1, 7, 1e-8, 1e-7);
        assert_eq!(k1, cache_key(&spec, 0.1, 7, 1e-8, 1e-7));
        assert_ne!(k1, cache_key(&spec, 0.05, 7, 1e-8, 1e-7));
    }
}
