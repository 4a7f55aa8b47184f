//! Little-endian binary artifacts.
//!
//! * `.f64` matrices: `rows: u32, cols: u32`, then row-major `f64` values.
//! * latent graphs: `"LATG"`, `version: u32`, `N, K, k_pos: u32`, the CSR
//!   dumps of `A^S` and `A^W` (`nnz: u32`, `N+1` offsets, `nnz` column
//!   indices as `u32`, `nnz` values as `f64`), then per node a `u32` count
//!   followed by that many positive ids. A trailing section with the raw
//!   top-K lists (same count-prefixed encoding, homophilic then
//!   heterophilic) is written and read when present.

use std::fs;
use std::path::Path;

use crate::dense::Dense;
use crate::error::{Error, Result};
use crate::latent::LatentGraphPair;
use crate::sparse::SparseAdjacency;

pub const LATENT_MAGIC: &[u8; 4] = b"LATG";
pub const LATENT_VERSION: u32 = 1;

fn u32_of(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Config(format!("{what}={v} does not fit in u32")))
}

pub fn encode_matrix(m: &Dense) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(8 + m.data().len() * 8);
    out.extend_from_slice(&u32_of(m.rows(), "rows")?.to_le_bytes());
    out.extend_from_slice(&u32_of(m.cols(), "cols")?.to_le_bytes());
    for v in m.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn write_matrix(path: impl AsRef<Path>, m: &Dense) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_matrix(m)?).map_err(|e| Error::io(path, e))
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<Dense> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut r = Reader::new(&bytes, path);
    let rows = r.u32()? as usize;
    let cols = r.u32()? as usize;
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        data.push(r.f64()?);
    }
    r.finish()?;
    Dense::from_vec(rows, cols, data)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8], path: &'a Path) -> Self {
        Reader { bytes, pos: 0, path }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Format {
            path: self.path.to_path_buf(),
            msg: msg.into(),
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(self.err(format!("truncated at byte {}", self.pos)));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn at_end(&self) -> bool {
        self.pos == self.bytes.len()
    }

    fn finish(&self) -> Result<()> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.err(format!("{} trailing bytes", self.bytes.len() - self.pos)))
        }
    }
}

fn put_u32(out: &mut Vec<u8>, v: usize) -> Result<()> {
    out.extend_from_slice(&u32_of(v, "value")?.to_le_bytes());
    Ok(())
}

fn put_csr(out: &mut Vec<u8>, a: &SparseAdjacency) -> Result<()> {
    put_u32(out, a.nnz())?;
    for &o in a.offsets() {
        put_u32(out, o)?;
    }
    for &j in a.indices() {
        put_u32(out, j)?;
    }
    for v in a.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(())
}

fn put_lists(out: &mut Vec<u8>, lists: &[Vec<usize>]) -> Result<()> {
    for l in lists {
        put_u32(out, l.len())?;
        for &j in l {
            put_u32(out, j)?;
        }
    }
    Ok(())
}

fn get_csr(r: &mut Reader, n: usize) -> Result<SparseAdjacency> {
    let nnz = r.u32()? as usize;
    let offsets = (0..=n).map(|_| r.u32().map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
    let indices = (0..nnz).map(|_| r.u32().map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
    let values = (0..nnz).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let a = SparseAdjacency::from_csr(n, offsets, indices, values)?;
    a.into_symmetric()
}

fn get_lists(r: &mut Reader, n: usize) -> Result<Vec<Vec<usize>>> {
    (0..n)
        .map(|_| {
            let len = r.u32()? as usize;
            let l = (0..len)
                .map(|_| r.u32().map(|v| v as usize))
                .collect::<Result<Vec<_>>>()?;
            if l.iter().any(|&j| j >= n) {
                return Err(r.err("node id out of range"));
            }
            Ok(l)
        })
        .collect()
}

pub fn encode_latent(pair: &LatentGraphPair) -> Result<Vec<u8>> {
    let n = pair.n();
    let mut out = Vec::new();
    out.extend_from_slice(LATENT_MAGIC);
    out.extend_from_slice(&LATENT_VERSION.to_le_bytes());
    put_u32(&mut out, n)?;
    put_u32(&mut out, pair.k)?;
    put_u32(&mut out, pair.k_pos)?;
    put_csr(&mut out, &pair.homophilic)?;
    put_csr(&mut out, &pair.heterophilic)?;
    put_lists(&mut out, &pair.positives)?;
    if pair.homophilic_lists.len() == n && pair.heterophilic_lists.len() == n {
        put_lists(&mut out, &pair.homophilic_lists)?;
        put_lists(&mut out, &pair.heterophilic_lists)?;
    }
    Ok(out)
}

pub fn decode_latent(bytes: &[u8], path: &Path) -> Result<LatentGraphPair> {
    let mut r = Reader::new(bytes, path);
    if r.take(4)? != LATENT_MAGIC {
        return Err(r.err("bad magic"));
    }
    let version = r.u32()?;
    if version != LATENT_VERSION {
        return Err(r.err(format!("unsupported version {version}")));
    }
    let n = r.u32()? as usize;
    let k = r.u32()? as usize;
    let k_pos = r.u32()? as usize;
    let homophilic = get_csr(&mut r, n)?;
    let heterophilic = get_csr(&mut r, n)?;
    let positives = get_lists(&mut r, n)?;
    let (homophilic_lists, heterophilic_lists) = if r.at_end() {
        (Vec::new(), Vec::new())
    } else {
        (get_lists(&mut r, n)?, get_lists(&mut r, n)?)
    };
    r.finish()?;
    Ok(LatentGraphPair {
        homophilic,
        heterophilic,
        homophilic_lists,
        heterophilic_lists,
        positives,
        k,
        k_pos,
    })
}

pub fn write_latent(path: impl AsRef<Path>, pair: &LatentGraphPair) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_latent(pair)?).map_err(|e| Error::io(path, e))
}

pub fn read_latent(path: impl AsRef<Path>) -> Result<LatentGraphPair> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_latent(&bytes, path)
}
