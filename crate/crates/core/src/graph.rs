//! Heterogeneous graph model and meta-path subgraph extraction.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use crate::dense::Dense;
use crate::error::{Error, Result};
use crate::sparse::SparseAdjacency;

/// A typed edge list between two node types.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeType {
    pub name: String,
    pub src_type: String,
    pub dst_type: String,
    pub pairs: Vec<(usize, usize)>,
}

/// One hop of a meta-path: an edge type, optionally walked dst → src.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub edge_type: String,
    pub reversed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MetaPath {
    pub name: String,
    pub steps: Vec<Step>,
}

impl MetaPath {
    pub fn new(name: impl Into<String>, steps: Vec<Step>) -> Self {
        MetaPath {
            name: name.into(),
            steps,
        }
    }
}

impl fmt::Display for MetaPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.name)?;
        for (k, s) in self.steps.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            if s.reversed {
                f.write_str("~")?;
            }
            f.write_str(&s.edge_type)?;
        }
        Ok(())
    }
}

/// Parses `NAME: edgetype,~edgetype,...`.
impl FromStr for MetaPath {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (name, rest) = s
            .split_once(':')
            .ok_or_else(|| format!("expected `NAME: edge,edge`, got `{s}`"))?;
        let name = name.trim();
        if name.is_empty() {
            return Err("empty metapath name".into());
        }
        let mut steps = Vec::new();
        for tok in rest.split(',') {
            let tok = tok.trim();
            let (reversed, et) = match tok.strip_prefix('~') {
                Some(t) => (true, t.trim()),
                None => (false, tok),
            };
            if et.is_empty() {
                return Err(format!("empty edge type in metapath `{name}`"));
            }
            steps.push(Step {
                edge_type: et.to_string(),
                reversed,
            });
        }
        Ok(MetaPath::new(name, steps))
    }
}

/// Node ids per evaluation split.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Splits {
    /// Keyed by tag: `train20`, `train40`, `train60`.
    pub train: BTreeMap<String, Vec<usize>>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

pub const TRAIN_TAGS: [&str; 3] = ["train20", "train40", "train60"];

/// Immutable heterogeneous graph with features and optional labels on the
/// target node type.
#[derive(Debug)]
pub struct HeteroGraph {
    node_types: Vec<(String, usize)>,
    edge_types: Vec<EdgeType>,
    target_type: String,
    features: Dense,
    labels: Option<Vec<usize>>,
    metapaths: Vec<MetaPath>,
    splits: Option<Splits>,
    subgraph_cache: Vec<OnceLock<SparseAdjacency>>,
}

impl HeteroGraph {
    pub fn new(
        node_types: Vec<(String, usize)>,
        edge_types: Vec<EdgeType>,
        target_type: impl Into<String>,
        features: Dense,
        labels: Option<Vec<usize>>,
        metapaths: Vec<MetaPath>,
    ) -> Result<Self> {
        let target_type = target_type.into();
        let count_of = |t: &str| {
            node_types
                .iter()
                .find(|(n, _)| n == t)
                .map(|&(_, c)| c)
                .ok_or_else(|| Error::UnknownNodeType(t.to_string()))
        };
        let n = count_of(&target_type)?;
        for et in &edge_types {
            let ns = count_of(&et.src_type)?;
            let nd = count_of(&et.dst_type)?;
            for &(s, d) in &et.pairs {
                if s >= ns || d >= nd {
                    return Err(Error::IndexOutOfRange(format!(
                        "edge ({s}→{d}) of `{}` exceeds type counts {}={ns}, {}={nd}",
                        et.name, et.src_type, et.dst_type
                    )));
                }
            }
        }
        if features.rows() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} feature rows for {n} target nodes",
                features.rows()
            )));
        }
        for i in 0..features.rows() {
            for (j, &v) in features.row(i).iter().enumerate() {
                if v < 0.0 || !v.is_finite() {
                    return Err(Error::NegativeFeature { node: i, col: j });
                }
            }
        }
        if let Some(y) = &labels {
            if y.len() != n {
                return Err(Error::LabelOutOfRange(format!(
                    "{} labels for {n} target nodes",
                    y.len()
                )));
            }
        }
        let g = HeteroGraph {
            subgraph_cache: (0..metapaths.len()).map(|_| OnceLock::new()).collect(),
            node_types,
            edge_types,
            target_type,
            features,
            labels,
            metapaths,
            splits: None,
        };
        for mp in &g.metapaths {
            g.resolve(mp)?;
        }
        Ok(g)
    }

    pub fn with_splits(mut self, splits: Splits) -> Result<Self> {
        let n = self.num_targets();
        let all = splits
            .train
            .values()
            .flatten()
            .chain(&splits.val)
            .chain(&splits.test);
        for &i in all {
            if i >= n {
                return Err(Error::IndexOutOfRange(format!("split node {i} ≥ {n}")));
            }
        }
        self.splits = Some(splits);
        Ok(self)
    }

    pub fn node_types(&self) -> &[(String, usize)] {
        &self.node_types
    }

    pub fn edge_types(&self) -> &[EdgeType] {
        &self.edge_types
    }

    pub fn target_type(&self) -> &str {
        &self.target_type
    }

    pub fn num_targets(&self) -> usize {
        self.features.rows()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn features(&self) -> &Dense {
        &self.features
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn num_classes(&self) -> Option<usize> {
        self.labels
            .as_ref()
            .map(|y| y.iter().max().map_or(0, |&m| m + 1))
    }

    pub fn metapaths(&self) -> &[MetaPath] {
        &self.metapaths
    }

    pub fn splits(&self) -> Option<&Splits> {
        self.splits.as_ref()
    }

    pub fn type_count(&self, t: &str) -> Option<usize> {
        self.node_types.iter().find(|(n, _)| n == t).map(|&(_, c)| c)
    }

    fn edge_type(&self, name: &str) -> Result<&EdgeType> {
        self.edge_types
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| Error::UnknownEdgeType(name.to_string()))
    }

    /// Resolves each step to `(edge type, src type, dst type)` and checks the
    /// type chain starts and ends at the target type.
    fn resolve<'a>(&'a self, mp: &MetaPath) -> Result<Vec<(&'a EdgeType, &'a str, &'a str)>> {
        let err = |msg: String| Error::MetaPath {
            name: mp.name.clone(),
            msg,
        };
        if mp.steps.is_empty() {
            return Err(err("no steps".into()));
        }
        let mut out = Vec::with_capacity(mp.steps.len());
        for s in &mp.steps {
            let et = self.edge_type(&s.edge_type)?;
            let (a, b) = if s.reversed {
                (et.dst_type.as_str(), et.src_type.as_str())
            } else {
                (et.src_type.as_str(), et.dst_type.as_str())
            };
            out.push((et, a, b));
        }
        if out[0].1 != self.target_type {
            return Err(err(format!(
                "starts at `{}`, target type is `{}`",
                out[0].1, self.target_type
            )));
        }
        for w in out.windows(2) {
            if w[0].2 != w[1].1 {
                return Err(err(format!(
                    "step `{}` ends at `{}` but `{}` starts at `{}`",
                    w[0].0.name, w[0].2, w[1].0.name, w[1].1
                )));
            }
        }
        let last = out.last().expect("non-empty").2;
        if last != self.target_type {
            return Err(err(format!(
                "ends at `{last}`, target type is `{}`",
                self.target_type
            )));
        }
        Ok(out)
    }

    /// Cached adjacency of the `p`-th meta-path subgraph.
    pub fn subgraph(&self, p: usize) -> Result<&SparseAdjacency> {
        if let Some(a) = self.subgraph_cache[p].get() {
            return Ok(a);
        }
        let a = metapath_adjacency(self, &self.metapaths[p])?;
        Ok(self.subgraph_cache[p].get_or_init(|| a))
    }

    pub fn subgraphs(&self) -> Result<Vec<&SparseAdjacency>> {
        (0..self.metapaths.len()).map(|p| self.subgraph(p)).collect()
    }

    /// Union over meta-paths of each target node's first-order neighbors.
    pub fn neighbor_union(&self) -> Result<Vec<Vec<usize>>> {
        let n = self.num_targets();
        let mut out = vec![Vec::new(); n];
        for a in self.subgraphs()? {
            for (i, nb) in out.iter_mut().enumerate() {
                nb.extend_from_slice(a.row(i).0);
            }
        }
        for nb in &mut out {
            nb.sort_unstable();
            nb.dedup();
        }
        Ok(out)
    }
}

/// Adjacency lists of one step, indexed by the step's source-side node.
fn step_lists(et: &EdgeType, reversed: bool, n_from: usize) -> Vec<Vec<usize>> {
    let mut lists = vec![Vec::new(); n_from];
    for &(s, d) in &et.pairs {
        let (a, b) = if reversed { (d, s) } else { (s, d) };
        lists[a].push(b);
    }
    for l in &mut lists {
        l.sort_unstable();
        l.dedup();
    }
    lists
}

/// Binary, symmetric, loop-free adjacency of the homogeneous subgraph
/// induced by `mp` over target nodes.
///
/// Each row is one boolean product chain: the reachable set is pruned to
/// distinct nodes after every hop, so path multiplicities never accumulate.
pub fn metapath_adjacency(g: &HeteroGraph, mp: &MetaPath) -> Result<SparseAdjacency> {
    let steps = g.resolve(mp)?;
    let lists: Vec<Vec<Vec<usize>>> = steps
        .iter()
        .zip(&mp.steps)
        .map(|((et, from, _), s)| {
            let n_from = g.type_count(from).expect("validated type");
            step_lists(et, s.reversed, n_from)
        })
        .collect();
    let n = g.num_targets();
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
    let max_count = g.node_types.iter().map(|&(_, c)| c).max().unwrap_or(0);
    let mut mark = vec![false; max_count];
    let mut frontier: Vec<usize> = Vec::new();
    let mut next: Vec<usize> = Vec::new();
    for (i, row) in rows.iter_mut().enumerate() {
        frontier.clear();
        frontier.push(i);
        for hop in &lists {
            next.clear();
            for &u in &frontier {
                for &v in &hop[u] {
                    if !mark[v] {
                        mark[v] = true;
                        next.push(v);
                    }
                }
            }
            for &v in &next {
                mark[v] = false;
            }
            std::mem::swap(&mut frontier, &mut next);
        }
        row.extend(frontier.iter().copied().filter(|&j| j != i));
    }
    let a = SparseAdjacency::from_neighbor_lists(&rows);
    Ok(a.symmetrize_binary())
}
