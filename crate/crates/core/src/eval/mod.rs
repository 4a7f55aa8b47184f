//! Downstream evaluation of frozen embeddings.

pub mod cluster;
pub mod metrics;
pub mod probe;
pub mod simsearch;
pub mod synth;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dense::Dense;
use crate::error::{Error, Result};
use crate::graph::HeteroGraph;
use crate::homophily::node_hr;

pub use cluster::{cluster_eval, kmeans, silhouette, ClusterScores};
pub use probe::{linear_probe, ProbeScores};
pub use simsearch::{sim_search, SimAtK, SimSearch};
pub use synth::{generate_synthetic, EdgeProbs, SyntheticSpec};

/// Mean and population standard deviation.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Stat {
        if values.is_empty() {
            return Stat { mean: 0.0, std: 0.0 };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Stat {
            mean,
            std: var.sqrt(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub runs: usize,
    pub restarts: usize,
    pub n_lowest: usize,
    pub ks: Vec<usize>,
    pub silhouette_points: usize,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            runs: 10,
            restarts: 10,
            n_lowest: 200,
            ks: vec![5, 10],
            silhouette_points: 2000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct EvalReport {
    pub num_nodes: usize,
    pub dim: usize,
    /// Keyed by train split tag.
    pub classification: BTreeMap<String, ProbeScores>,
    pub clustering: ClusterScores,
    pub similarity: Vec<SimSearch>,
    pub silhouette: f64,
}

/// Every protocol on one embedding. Labels are required; classification
/// runs once per train split found on the graph.
pub fn evaluate_embedding(g: &HeteroGraph, emb: &Dense, cfg: &EvalConfig) -> Result<EvalReport> {
    let y = g.labels().ok_or(Error::LabelsRequired)?;
    if emb.rows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} embedding rows for {} nodes",
            emb.rows(),
            y.len()
        )));
    }
    let mut classification = BTreeMap::new();
    if let Some(s) = g.splits() {
        for (tag, train) in &s.train {
            let scores = linear_probe(emb, y, train, &s.val, &s.test, cfg.runs, cfg.seed)?;
            classification.insert(tag.clone(), scores);
        }
    }
    let clustering = cluster_eval(emb, y, cfg.restarts, cfg.seed)?;
    let mut similarity = Vec::new();
    for (mp, a) in g.metapaths().iter().zip(g.subgraphs()?) {
        let nhr = node_hr(a, y);
        similarity.push(sim_search(emb, y, &nhr, &mp.name, cfg.n_lowest, &cfg.ks)?);
    }
    Ok(EvalReport {
        num_nodes: emb.rows(),
        dim: emb.cols(),
        classification,
        clustering,
        similarity,
        silhouette: silhouette(emb, y, cfg.silhouette_points, cfg.seed),
    })
}
