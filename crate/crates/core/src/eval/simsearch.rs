//! Similarity search restricted to the most heterophilic nodes.

use serde::{Deserialize, Serialize};

use crate::dense::{dot, Dense};
use crate::error::{Error, Result};
use crate::topk::top_k;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SimAtK {
    pub k: usize,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SimSearch {
    pub metapath: String,
    /// Number of query nodes actually used.
    pub queries: usize,
    pub scores: Vec<SimAtK>,
}

/// Query ids: the `n_lowest` nodes with the lowest defined NHR, ties by id.
pub fn lowest_nhr_nodes(nhr: &[Option<f64>], n_lowest: usize) -> Vec<usize> {
    let mut cand: Vec<(usize, f64)> = nhr
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i, v)))
        .collect();
    cand.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    if cand.len() < n_lowest {
        log::warn!(
            "only {} nodes have a defined NHR, fewer than the {n_lowest} requested",
            cand.len()
        );
    }
    cand.into_iter().take(n_lowest).map(|(i, _)| i).collect()
}

/// For each query, the fraction of its `k` most cosine-similar other nodes
/// that share its label, averaged over queries.
pub fn sim_at_k(emb: &Dense, y: &[usize], queries: &[usize], ks: &[usize]) -> Result<Vec<SimAtK>> {
    let n = emb.rows();
    if y.len() != n {
        return Err(Error::DimensionMismatch("labels and embeddings differ in length".into()));
    }
    let unit = emb.row_normalized();
    let kmax = ks.iter().copied().max().unwrap_or(0).min(n.saturating_sub(1));
    let mut hits = vec![0.0; ks.len()];
    for &q in queries {
        let uq = unit.row(q);
        let ranked = top_k((0..n).filter(|&j| j != q).map(|j| (j, dot(uq, unit.row(j)))), kmax);
        for (h, &k) in hits.iter_mut().zip(ks) {
            let k = k.min(ranked.len());
            if k > 0 {
                let same = ranked[..k].iter().filter(|&&j| y[j] == y[q]).count();
                *h += same as f64 / k as f64;
            }
        }
    }
    let denom = queries.len().max(1) as f64;
    Ok(ks
        .iter()
        .zip(hits)
        .map(|(&k, h)| SimAtK { k, value: h / denom })
        .collect())
}

pub fn sim_search(
    emb: &Dense,
    y: &[usize],
    nhr: &[Option<f64>],
    metapath: &str,
    n_lowest: usize,
    ks: &[usize],
) -> Result<SimSearch> {
    let queries = lowest_nhr_nodes(nhr, n_lowest);
    Ok(SimSearch {
        metapath: metapath.to_string(),
        queries: queries.len(),
        scores: sim_at_k(emb, y, &queries, ks)?,
    })
}
