//! Low-pass `(Ã_sym)^r` and high-pass `(L̃_sym)^r` graph filters, and the
//! pre-filtered feature cache used by mini-batch training.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::binio::{read_matrix, write_matrix};
use crate::dataset::hex;
use crate::dense::Dense;
use crate::error::{Error, Result};
use crate::graph::HeteroGraph;
use crate::latent::LatentGraphPair;
use crate::sparse::{renorm_adj_sym, renorm_lap_sym, SparseAdjacency};

/// Renormalized adjacency and Laplacian of one graph, built once.
#[derive(Clone, Debug)]
pub struct FilterPair {
    pub low: SparseAdjacency,
    pub high: SparseAdjacency,
}

impl FilterPair {
    pub fn new(a: &SparseAdjacency) -> Self {
        FilterPair {
            low: renorm_adj_sym(a),
            high: renorm_lap_sym(a),
        }
    }

    pub fn apply_low(&self, h: &Dense, r: usize) -> Result<Dense> {
        apply_power(&self.low, h, r)
    }

    pub fn apply_high(&self, h: &Dense, r: usize) -> Result<Dense> {
        apply_power(&self.high, h, r)
    }
}

/// `r` successive products with `op`; `r = 0` returns a copy of `h`.
pub fn apply_power(op: &SparseAdjacency, h: &Dense, r: usize) -> Result<Dense> {
    if op.n() != h.rows() {
        return Err(Error::DimensionMismatch(format!(
            "filter of size {} on {} rows",
            op.n(),
            h.rows()
        )));
    }
    let mut out = h.clone();
    for _ in 0..r {
        out = op.spmm(&out)?;
    }
    Ok(out)
}

pub fn low_pass(a: &SparseAdjacency, h: &Dense, r: usize) -> Result<Dense> {
    apply_power(&renorm_adj_sym(a), h, r)
}

pub fn high_pass(a: &SparseAdjacency, h: &Dense, r: usize) -> Result<Dense> {
    apply_power(&renorm_lap_sym(a), h, r)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FilteredFeatures {
    pub r: usize,
    pub metapaths: Vec<String>,
    pub low: Vec<Dense>,
    pub high: Vec<Dense>,
    /// `(Ã^S_sym)^r X` and `(L̃^W_sym)^r X`, when latent graphs were supplied.
    pub latent: Option<(Dense, Dense)>,
}

pub fn pre_filter(g: &HeteroGraph, r: usize) -> Result<FilteredFeatures> {
    let x = g.features();
    let mut low = Vec::new();
    let mut high = Vec::new();
    for a in g.subgraphs()? {
        let f = FilterPair::new(a);
        low.push(f.apply_low(x, r)?);
        high.push(f.apply_high(x, r)?);
    }
    Ok(FilteredFeatures {
        r,
        metapaths: g.metapaths().iter().map(|m| m.name.clone()).collect(),
        low,
        high,
        latent: None,
    })
}

/// Low-pass over `A^S` and high-pass over `A^W` applied to `x`.
pub fn latent_prefilter(pair: &LatentGraphPair, x: &Dense, r: usize) -> Result<(Dense, Dense)> {
    Ok((
        low_pass(&pair.homophilic, x, r)?,
        high_pass(&pair.heterophilic, x, r)?,
    ))
}

fn hash_csr(h: &mut Sha256, a: &SparseAdjacency) {
    h.update((a.n() as u64).to_le_bytes());
    for &o in a.offsets() {
        h.update((o as u64).to_le_bytes());
    }
    for &j in a.indices() {
        h.update((j as u64).to_le_bytes());
    }
    for v in a.values() {
        h.update(v.to_le_bytes());
    }
}

/// Content hash of the features, meta-path subgraphs and filter order.
pub fn graph_checksum(g: &HeteroGraph, r: usize) -> Result<String> {
    let mut h = Sha256::new();
    h.update((r as u64).to_le_bytes());
    let x = g.features();
    h.update((x.rows() as u64).to_le_bytes());
    h.update((x.cols() as u64).to_le_bytes());
    for v in x.data() {
        h.update(v.to_le_bytes());
    }
    for (mp, a) in g.metapaths().iter().zip(g.subgraphs()?) {
        h.update(mp.name.as_bytes());
        hash_csr(&mut h, a);
    }
    Ok(hex(&h.finalize()))
}

pub fn latent_checksum(pair: &LatentGraphPair, r: usize) -> String {
    let mut h = Sha256::new();
    h.update((r as u64).to_le_bytes());
    hash_csr(&mut h, &pair.homophilic);
    hash_csr(&mut h, &pair.heterophilic);
    hex(&h.finalize())
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FilterManifest {
    pub r: usize,
    pub rows: usize,
    pub cols: usize,
    pub metapaths: Vec<String>,
    pub checksum: String,
    pub files: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latent_checksum: Option<String>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

fn low_name(mp: &str) -> String {
    format!("X_{mp}_low.f64")
}

fn high_name(mp: &str) -> String {
    format!("X_{mp}_high.f64")
}

const LATENT_LOW: &str = "X_latent_low.f64";
const LATENT_HIGH: &str = "X_latent_high.f64";

impl FilteredFeatures {
    pub fn save(
        &self,
        dir: impl AsRef<Path>,
        checksum: &str,
        latent_checksum: Option<&str>,
    ) -> Result<FilterManifest> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut files = Vec::new();
        for (p, mp) in self.metapaths.iter().enumerate() {
            write_matrix(dir.join(low_name(mp)), &self.low[p])?;
            write_matrix(dir.join(high_name(mp)), &self.high[p])?;
            files.push(low_name(mp));
            files.push(high_name(mp));
        }
        if let Some((l, h)) = &self.latent {
            write_matrix(dir.join(LATENT_LOW), l)?;
            write_matrix(dir.join(LATENT_HIGH), h)?;
            files.push(LATENT_LOW.to_string());
            files.push(LATENT_HIGH.to_string());
        }
        let (rows, cols) = self.low.first().map_or((0, 0), Dense::shape);
        let manifest = FilterManifest {
            r: self.r,
            rows,
            cols,
            metapaths: self.metapaths.clone(),
            checksum: checksum.to_string(),
            files,
            latent_checksum: self.latent.as_ref().and(latent_checksum.map(str::to_string)),
        };
        let p = dir.join(MANIFEST_FILE);
        let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
        Ok(manifest)
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<(Self, FilterManifest)> {
        let dir = dir.as_ref();
        let manifest = read_manifest(dir)?;
        let mut low = Vec::new();
        let mut high = Vec::new();
        for mp in &manifest.metapaths {
            low.push(read_matrix(dir.join(low_name(mp)))?);
            high.push(read_matrix(dir.join(high_name(mp)))?);
        }
        let latent = if manifest.latent_checksum.is_some() {
            Some((
                read_matrix(dir.join(LATENT_LOW))?,
                read_matrix(dir.join(LATENT_HIGH))?,
            ))
        } else {
            None
        };
        Ok((
            FilteredFeatures {
                r: manifest.r,
                metapaths: manifest.metapaths.clone(),
                low,
                high,
                latent,
            },
            manifest,
        ))
    }
}

pub fn read_manifest(dir: &Path) -> Result<FilterManifest> {
    let p = dir.join(MANIFEST_FILE);
    if !p.exists() {
        return Err(Error::MissingFile(p));
    }
    let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        path: p,
        msg: e.to_string(),
    })
}

/// Loads the cache in `dir` when its checksums match, recomputing and
/// rewriting it otherwise. Returns whether a recompute happened.
pub fn pre_filter_cached(
    g: &HeteroGraph,
    r: usize,
    latent: Option<&LatentGraphPair>,
    dir: impl AsRef<Path>,
) -> Result<(FilteredFeatures, bool)> {
    let dir = dir.as_ref();
    let checksum = graph_checksum(g, r)?;
    let lat_sum = latent.map(|p| latent_checksum(p, r));
    if let Ok(m) = read_manifest(dir) {
        if m.checksum == checksum && m.r == r && m.latent_checksum == lat_sum {
            if let Ok((f, _)) = FilteredFeatures::load(dir) {
                return Ok((f, false));
            }
        }
    }
    let mut f = pre_filter(g, r)?;
    if let Some(p) = latent {
        f.latent = Some(latent_prefilter(p, g.features(), r)?);
    }
    f.save(dir, &checksum, lat_sum.as_deref())?;
    Ok((f, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::sqrt_degree_vector;

    fn single_edge() -> SparseAdjacency {
        SparseAdjacency::from_triplets(2, [(0, 1, 1.0), (1, 0, 1.0)])
    }

    #[test]
    fn order_zero_is_identity() {
        let h = Dense::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(low_pass(&single_edge(), &h, 0).unwrap(), h);
        assert_eq!(high_pass(&single_edge(), &h, 0).unwrap(), h);
    }

    #[test]
    fn single_edge_hand_values() {
        let h = Dense::from_rows(&[vec![1.0], vec![0.0]]);
        let l = low_pass(&single_edge(), &h, 1).unwrap();
        assert!((l.get(0, 0) - 0.5).abs() < 1e-15 && (l.get(1, 0) - 0.5).abs() < 1e-15);
        let hp = high_pass(&single_edge(), &h, 1).unwrap();
        assert!((hp.get(0, 0) - 0.5).abs() < 1e-15 && (hp.get(1, 0) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn constant_signal_on_regular_graph() {
        // 4-cycle
        let a = SparseAdjacency::from_triplets(
            4,
            (0..4).flat_map(|i| [(i, (i + 1) % 4, 1.0), ((i + 1) % 4, i, 1.0)]),
        );
        let h = Dense::from_rows(&vec![vec![2.5]; 4]);
        for r in 1..4 {
            assert!(low_pass(&a, &h, r).unwrap().max_abs_diff(&h) < 1e-12);
        }
    }

    #[test]
    fn high_pass_kills_sqrt_degree() {
        let a = SparseAdjacency::from_triplets(
            4,
            [(0, 1, 1.), (1, 0, 1.), (1, 2, 1.), (2, 1, 1.), (1, 3, 1.), (3, 1, 1.)],
        );
        let v = sqrt_degree_vector(&a);
        let h = Dense::from_vec(4, 1, v).unwrap();
        for r in 1..3 {
            let out = high_pass(&a, &h, r).unwrap();
            assert!(out.data().iter().all(|x| x.abs() < 1e-12));
        }
    }

    #[test]
    fn mismatch_rejected() {
        assert!(low_pass(&single_edge(), &Dense::zeros(3, 1), 1).is_err());
    }
}
