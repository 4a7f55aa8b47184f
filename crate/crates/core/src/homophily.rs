//! Homophily ratios at edge, meta-path and node level, plus the cosine
//! k-NN feature graph used as a reference point.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dense::{dot, Dense};
use crate::error::{Error, Result};
use crate::graph::{HeteroGraph, MetaPath};
use crate::sparse::SparseAdjacency;
use crate::topk::top_k;

/// Fraction of undirected edges whose endpoints share a label. Each edge is
/// counted once.
pub fn edge_hr(a: &SparseAdjacency, y: &[usize]) -> Result<f64> {
    if y.len() != a.n() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {} nodes",
            y.len(),
            a.n()
        )));
    }
    let (mut same, mut total) = (0usize, 0usize);
    for (i, j) in a.upper_edges() {
        total += 1;
        if y[i] == y[j] {
            same += 1;
        }
    }
    if total == 0 {
        return Err(Error::NoEdges);
    }
    Ok(same as f64 / total as f64)
}

/// Homophily ratio of the meta-path subgraph.
pub fn mhr(g: &HeteroGraph, mp: &MetaPath) -> Result<f64> {
    let y = g.labels().ok_or(Error::LabelsRequired)?;
    let a = subgraph_for(g, mp)?;
    edge_hr(&a, y)
}

/// Per-node fraction of meta-path neighbors sharing the node's label;
/// `None` for isolated nodes.
pub fn nhr(g: &HeteroGraph, mp: &MetaPath) -> Result<Vec<Option<f64>>> {
    let y = g.labels().ok_or(Error::LabelsRequired)?;
    let a = subgraph_for(g, mp)?;
    Ok(node_hr(&a, y))
}

/// [`nhr`] on an explicit adjacency.
pub fn node_hr(a: &SparseAdjacency, y: &[usize]) -> Vec<Option<f64>> {
    (0..a.n())
        .map(|i| {
            let nb: Vec<usize> = a.row(i).0.iter().copied().filter(|&j| j != i).collect();
            if nb.is_empty() {
                None
            } else {
                let same = nb.iter().filter(|&&j| y[j] == y[i]).count();
                Some(same as f64 / nb.len() as f64)
            }
        })
        .collect()
}

fn subgraph_for(g: &HeteroGraph, mp: &MetaPath) -> Result<SparseAdjacency> {
    match g.metapaths().iter().position(|m| m == mp) {
        Some(p) => g.subgraph(p).cloned(),
        None => crate::graph::metapath_adjacency(g, mp),
    }
}

/// Directed cosine k-NN (self excluded, ties to the lower index), then
/// symmetrized by union.
pub fn knn_graph(x: &Dense, k: usize) -> Result<SparseAdjacency> {
    if k == 0 {
        return Err(Error::Config("k must be ≥ 1".into()));
    }
    let n = x.rows();
    let norms = x.row_norms();
    if let Some(i) = norms.iter().position(|&v| v == 0.0) {
        return Err(Error::ZeroNormRow(i));
    }
    let xn = x.row_normalized();
    let mut lists = Vec::with_capacity(n);
    let mut scores = vec![0.0; n];
    for i in 0..n {
        for (j, s) in scores.iter_mut().enumerate() {
            *s = dot(xn.row(i), xn.row(j));
        }
        lists.push(top_k((0..n).filter(|&j| j != i).map(|j| (j, scores[j])), k));
    }
    Ok(SparseAdjacency::from_neighbor_lists(&lists).symmetrize_binary())
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MetapathHomophily {
    pub name: String,
    pub mhr: f64,
    pub edges: usize,
    pub isolated_nodes: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct HomophilyReport {
    pub num_nodes: usize,
    pub metapaths: Vec<MetapathHomophily>,
    /// `nhr[i][p]`, missing for nodes isolated under meta-path `p`.
    pub nhr: Vec<Vec<Option<f64>>>,
    /// K → HR of the union-symmetrized k-NN feature graph.
    pub knn_hr: BTreeMap<usize, f64>,
}

impl HomophilyReport {
    /// Tab-separated `node_id, metapath, value` rows; isolated nodes skipped.
    pub fn nhr_tsv(&self) -> String {
        let mut out = String::from("node_id\tmetapath\tvalue\n");
        for (i, row) in self.nhr.iter().enumerate() {
            for (p, v) in row.iter().enumerate() {
                if let Some(v) = v {
                    out.push_str(&format!("{i}\t{}\t{v}\n", self.metapaths[p].name));
                }
            }
        }
        out
    }
}

pub fn homophily_report(g: &HeteroGraph, knn_ks: &[usize]) -> Result<HomophilyReport> {
    let y = g.labels().ok_or(Error::LabelsRequired)?;
    let n = g.num_targets();
    let mut metapaths = Vec::new();
    let mut nhr = vec![Vec::with_capacity(g.metapaths().len()); n];
    for (p, mp) in g.metapaths().iter().enumerate() {
        let a = g.subgraph(p)?;
        let per_node = node_hr(a, y);
        let isolated = per_node.iter().filter(|v| v.is_none()).count();
        for (row, v) in nhr.iter_mut().zip(per_node) {
            row.push(v);
        }
        metapaths.push(MetapathHomophily {
            name: mp.name.clone(),
            mhr: edge_hr(a, y)?,
            edges: a.upper_edge_count(),
            isolated_nodes: isolated,
        });
    }
    let mut knn_hr = BTreeMap::new();
    for &k in knn_ks {
        let a = knn_graph(g.features(), k)?;
        knn_hr.insert(k, edge_hr(&a, y)?);
    }
    Ok(HomophilyReport {
        num_nodes: n,
        metapaths,
        nhr,
        knn_hr,
    })
}
