//! Homophilic and heterophilic latent graphs mined from coupled
//! structure/feature similarity.
//!
//! Structure similarity is the cosine between rows of the diffusion matrix
//! `M`, the mean of the random-walk normalized meta-path adjacencies.
//! Feature similarity is the cosine between raw feature rows. Their product
//! ranks homophilic neighbors; the product of their complements ranks
//! heterophilic ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense::Dense;
use crate::error::{Error, Result};
use crate::homophily::edge_hr;
use crate::sparse::{rw_normalize, SparseAdjacency};
use crate::topk::{top_k, top_k_scored};

pub const DEFAULT_DENSE_CAP: usize = 20_000;

/// `M = (1/P) Σ_p D̃_p^{-1}(A_p + I)`.
pub fn diffusion_matrix(subgraphs: &[&SparseAdjacency]) -> Result<SparseAdjacency> {
    let first = subgraphs
        .first()
        .ok_or_else(|| Error::Config("diffusion matrix needs at least one subgraph".into()))?;
    let n = first.n();
    let mut acc = SparseAdjacency::zeros(n);
    for a in subgraphs {
        if a.n() != n {
            return Err(Error::DimensionMismatch(format!(
                "subgraph of size {} among size {n}",
                a.n()
            )));
        }
        acc = acc.add(&rw_normalize(a))?;
    }
    Ok(acc.scaled(1.0 / subgraphs.len() as f64))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoupledSim {
    pub structural: f64,
    pub feature: f64,
    pub coupled: f64,
}

impl CoupledSim {
    /// `(1 − simT)(1 − simF)`
    pub fn dissimilarity(&self) -> f64 {
        (1.0 - self.structural) * (1.0 - self.feature)
    }
}

/// Sorted sparse rows with unit L2 norm (zero rows stay empty).
#[derive(Clone, Debug)]
struct UnitRows {
    offsets: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl UnitRows {
    fn from_sparse(m: &SparseAdjacency) -> Self {
        let mn = m.row_normalized();
        UnitRows {
            offsets: mn.offsets().to_vec(),
            indices: mn.indices().to_vec(),
            values: mn.values().to_vec(),
        }
    }

    fn from_dense(x: &Dense) -> Self {
        let xn = x.row_normalized();
        let mut offsets = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for i in 0..xn.rows() {
            for (j, &v) in xn.row(i).iter().enumerate() {
                if v != 0.0 {
                    indices.push(j);
                    values.push(v);
                }
            }
            offsets.push(indices.len());
        }
        UnitRows {
            offsets,
            indices,
            values,
        }
    }

    fn is_empty_row(&self, i: usize) -> bool {
        self.offsets[i] == self.offsets[i + 1]
    }

    fn dot(&self, i: usize, j: usize) -> f64 {
        let (a0, a1) = (self.offsets[i], self.offsets[i + 1]);
        let (b0, b1) = (self.offsets[j], self.offsets[j + 1]);
        let (ca, va) = (&self.indices[a0..a1], &self.values[a0..a1]);
        let (cb, vb) = (&self.indices[b0..b1], &self.values[b0..b1]);
        let (mut p, mut q) = (0, 0);
        let mut s = 0.0;
        while p < ca.len() && q < cb.len() {
            match ca[p].cmp(&cb[q]) {
                std::cmp::Ordering::Less => p += 1,
                std::cmp::Ordering::Greater => q += 1,
                std::cmp::Ordering::Equal => {
                    s += va[p] * vb[q];
                    p += 1;
                    q += 1;
                }
            }
        }
        s
    }
}

/// Precomputed unit rows of `M` and `X` for repeated pair queries.
#[derive(Clone, Debug)]
pub struct SimilarityIndex {
    structure: UnitRows,
    features: UnitRows,
}

impl SimilarityIndex {
    pub fn new(m: &SparseAdjacency, x: &Dense) -> Result<Self> {
        if m.n() != x.rows() {
            return Err(Error::DimensionMismatch(format!(
                "diffusion matrix of size {} with {} feature rows",
                m.n(),
                x.rows()
            )));
        }
        Ok(SimilarityIndex {
            structure: UnitRows::from_sparse(m),
            features: UnitRows::from_dense(x),
        })
    }

    pub fn n(&self) -> usize {
        self.structure.offsets.len() - 1
    }

    pub fn pair(&self, i: usize, j: usize) -> CoupledSim {
        let (structural, feature) = if i == j {
            let s = if self.structure.is_empty_row(i) { 0.0 } else { 1.0 };
            let f = if self.features.is_empty_row(i) { 0.0 } else { 1.0 };
            (s, f)
        } else {
            (
                self.structure.dot(i, j).clamp(0.0, 1.0),
                self.features.dot(i, j).clamp(0.0, 1.0),
            )
        };
        CoupledSim {
            structural,
            feature,
            coupled: structural * feature,
        }
    }
}

/// Coupled similarity of one pair. Zero feature rows give a feature
/// similarity of 0.
pub fn coupled_similarity(m: &SparseAdjacency, x: &Dense, i: usize, j: usize) -> Result<CoupledSim> {
    Ok(SimilarityIndex::new(m, x)?.pair(i, j))
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatentGraphPair {
    /// Union-symmetrized homophilic graph `A^S`.
    pub homophilic: SparseAdjacency,
    /// Union-symmetrized heterophilic graph `A^W`.
    pub heterophilic: SparseAdjacency,
    /// Raw per-node top-K selections, in rank order. Empty after loading a
    /// file written without them.
    pub homophilic_lists: Vec<Vec<usize>>,
    pub heterophilic_lists: Vec<Vec<usize>>,
    /// Per-node positives in rank order; the node itself is implied.
    pub positives: Vec<Vec<usize>>,
    pub k: usize,
    pub k_pos: usize,
}

impl LatentGraphPair {
    fn from_lists(
        s_lists: Vec<Vec<usize>>,
        w_lists: Vec<Vec<usize>>,
        positives: Vec<Vec<usize>>,
        k: usize,
        k_pos: usize,
    ) -> Self {
        LatentGraphPair {
            homophilic: SparseAdjacency::from_neighbor_lists(&s_lists).symmetrize_binary(),
            heterophilic: SparseAdjacency::from_neighbor_lists(&w_lists).symmetrize_binary(),
            homophilic_lists: s_lists,
            heterophilic_lists: w_lists,
            positives,
            k,
            k_pos,
        }
    }

    pub fn n(&self) -> usize {
        self.homophilic.n()
    }
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k >= n {
        return Err(Error::Config(format!("need 0 < K < N, got K={k}, N={n}")));
    }
    Ok(())
}

/// Exhaustive construction over all pairs; quadratic in N.
pub fn build_latent_graphs_full(
    m: &SparseAdjacency,
    x: &Dense,
    k: usize,
    k_pos: usize,
) -> Result<LatentGraphPair> {
    build_latent_graphs_full_capped(m, x, k, k_pos, DEFAULT_DENSE_CAP)
}

pub fn build_latent_graphs_full_capped(
    m: &SparseAdjacency,
    x: &Dense,
    k: usize,
    k_pos: usize,
    cap: usize,
) -> Result<LatentGraphPair> {
    let n = m.n();
    if n > cap {
        return Err(Error::DenseCapExceeded { n, cap });
    }
    check_k(n, k)?;
    let index = SimilarityIndex::new(m, x)?;
    let mut s_lists = Vec::with_capacity(n);
    let mut w_lists = Vec::with_capacity(n);
    let mut positives = Vec::with_capacity(n);
    let mut sims = Vec::with_capacity(n);
    for i in 0..n {
        sims.clear();
        sims.extend((0..n).filter(|&j| j != i).map(|j| (j, index.pair(i, j))));
        let s = top_k_scored(sims.iter().map(|&(j, c)| (j, c.coupled)), k.max(k_pos));
        s_lists.push(s.iter().take(k).map(|&(j, _)| j).collect());
        positives.push(s.iter().take(k_pos).map(|&(j, _)| j).collect());
        w_lists.push(top_k(sims.iter().map(|&(j, c)| (j, c.dissimilarity())), k));
    }
    Ok(LatentGraphPair::from_lists(s_lists, w_lists, positives, k, k_pos))
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct ScalableLatentConfig {
    pub k: usize,
    pub k_pos: usize,
    /// Number of anchors sampled for heterophilic candidates.
    pub anchors: usize,
    pub seed: u64,
}

/// Sorted anchor ids: `m` distinct nodes drawn uniformly.
pub fn sample_anchors(n: usize, m: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = rand::seq::index::sample(&mut rng, n, m.min(n)).into_vec();
    a.sort_unstable();
    a
}

/// Neighbor-restricted homophilic graph plus anchor-based heterophilic graph.
pub fn build_latent_graphs_scalable(
    subgraphs: &[&SparseAdjacency],
    x: &Dense,
    cfg: &ScalableLatentConfig,
) -> Result<LatentGraphPair> {
    let m = diffusion_matrix(subgraphs)?;
    let n = m.n();
    check_k(n, cfg.k)?;
    if cfg.anchors == 0 || cfg.anchors > n {
        return Err(Error::Config(format!(
            "anchor count must be in 1..={n}, got {}",
            cfg.anchors
        )));
    }
    let index = SimilarityIndex::new(&m, x)?;
    let anchors = sample_anchors(n, cfg.anchors, cfg.seed);

    let mut nbrs: Vec<Vec<usize>> = vec![Vec::new(); n];
    for a in subgraphs {
        for (i, nb) in nbrs.iter_mut().enumerate() {
            nb.extend(a.row(i).0.iter().copied().filter(|&j| j != i));
        }
    }

    let mut s_lists = Vec::with_capacity(n);
    let mut w_lists = Vec::with_capacity(n);
    let mut positives = Vec::with_capacity(n);
    for (i, nb) in nbrs.iter_mut().enumerate() {
        nb.sort_unstable();
        nb.dedup();
        let s = top_k_scored(
            nb.iter().map(|&j| (j, index.pair(i, j).coupled)),
            cfg.k.max(cfg.k_pos),
        );
        s_lists.push(s.iter().take(cfg.k).map(|&(j, _)| j).collect());
        positives.push(s.iter().take(cfg.k_pos).map(|&(j, _)| j).collect());
        w_lists.push(top_k(
            anchors
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| (j, index.pair(i, j).dissimilarity())),
            cfg.k,
        ));
    }
    Ok(LatentGraphPair::from_lists(
        s_lists, w_lists, positives, cfg.k, cfg.k_pos,
    ))
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LatentAudit {
    /// HR of the symmetrized homophilic graph.
    pub hr_homophilic: f64,
    /// HR of the symmetrized heterophilic graph.
    pub hr_heterophilic: f64,
    /// Fraction of raw directed selections that share the node's label.
    pub raw_hr_homophilic: Option<f64>,
    pub raw_hr_heterophilic: Option<f64>,
}

fn raw_hr(lists: &[Vec<usize>], y: &[usize]) -> Option<f64> {
    let total: usize = lists.iter().map(Vec::len).sum();
    if total == 0 {
        return None;
    }
    let same = lists
        .iter()
        .enumerate()
        .flat_map(|(i, l)| l.iter().map(move |&j| (i, j)))
        .filter(|&(i, j)| y[i] == y[j])
        .count();
    Some(same as f64 / total as f64)
}

pub fn latent_hr_audit(pair: &LatentGraphPair, y: &[usize]) -> Result<LatentAudit> {
    Ok(LatentAudit {
        hr_homophilic: edge_hr(&pair.homophilic, y)?,
        hr_heterophilic: edge_hr(&pair.heterophilic, y)?,
        raw_hr_homophilic: raw_hr(&pair.homophilic_lists, y),
        raw_hr_heterophilic: raw_hr(&pair.heterophilic_lists, y),
    })
}
