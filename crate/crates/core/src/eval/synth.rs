//! Planted-partition heterogeneous graphs with known homophily.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense::Dense;
use crate::error::{Error, Result};
use crate::graph::{EdgeType, HeteroGraph, MetaPath, Splits, Step, TRAIN_TAGS};

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct EdgeProbs {
    /// Edge probability between two nodes of the same class.
    pub intra: f64,
    /// Edge probability between two nodes of different classes.
    pub inter: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_per_class: usize,
    pub classes: usize,
    /// One entry per meta-path.
    pub metapaths: Vec<EdgeProbs>,
    pub feature_dim: usize,
    /// Features are the class one-hot plus `U(0, noise)` per column.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_per_class: 100,
            classes: 3,
            metapaths: vec![
                EdgeProbs {
                    intra: 0.05,
                    inter: 0.005,
                },
                EdgeProbs {
                    intra: 0.01,
                    inter: 0.02,
                },
            ],
            feature_dim: 32,
            noise: 2.0,
            seed: 0,
        }
    }
}

pub const TARGET_TYPE: &str = "T";

impl SyntheticSpec {
    pub fn num_nodes(&self) -> usize {
        self.n_per_class * self.classes
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.classes < 2 || self.n_per_class < 2 {
            return bad("need at least two classes of at least two nodes".into());
        }
        if self.feature_dim < self.classes {
            return bad(format!(
                "feature_dim {} is below the class count {}",
                self.feature_dim, self.classes
            ));
        }
        if self.metapaths.is_empty() {
            return bad("at least one metapath is required".into());
        }
        for (k, p) in self.metapaths.iter().enumerate() {
            if !(0.0..=1.0).contains(&p.intra) || !(0.0..=1.0).contains(&p.inter) {
                return bad(format!("metapath {k}: probabilities must lie in [0, 1]"));
            }
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad("noise must be non-negative".into());
        }
        Ok(())
    }

    /// Expected edges within and across classes for meta-path `p`.
    pub fn expected_edges(&self, p: usize) -> (f64, f64) {
        let n = self.n_per_class as f64;
        let c = self.classes as f64;
        let intra_pairs = c * n * (n - 1.0) / 2.0;
        let inter_pairs = c * (c - 1.0) / 2.0 * n * n;
        let e = self.metapaths[p];
        (e.intra * intra_pairs, e.inter * inter_pairs)
    }

    /// Ratio of expected homophilic edges to expected edges.
    pub fn expected_mhr(&self, p: usize) -> f64 {
        let (a, b) = self.expected_edges(p);
        a / (a + b)
    }

    pub fn metapath_name(p: usize) -> String {
        format!("M{}", p + 1)
    }
}

/// Node `i` belongs to class `i / n_per_class`. Train splits are nested
/// (`train20 ⊂ train40 ⊂ train60` per class); the nodes left after the
/// largest train split are halved into validation and test.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<HeteroGraph> {
    spec.validate()?;
    let n = spec.num_nodes();
    let y: Vec<usize> = (0..n).map(|i| i / spec.n_per_class).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut edge_types = Vec::new();
    let mut metapaths = Vec::new();
    for (p, probs) in spec.metapaths.iter().enumerate() {
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let q = if y[i] == y[j] { probs.intra } else { probs.inter };
                if rng.gen::<f64>() < q {
                    pairs.push((i, j));
                }
            }
        }
        let name = format!("m{}", p + 1);
        edge_types.push(EdgeType {
            name: name.clone(),
            src_type: TARGET_TYPE.into(),
            dst_type: TARGET_TYPE.into(),
            pairs,
        });
        metapaths.push(MetaPath::new(
            SyntheticSpec::metapath_name(p),
            vec![Step {
                edge_type: name,
                reversed: false,
            }],
        ));
    }

    let mut x = Dense::zeros(n, spec.feature_dim);
    for i in 0..n {
        let row = x.row_mut(i);
        for v in row.iter_mut() {
            *v = rng.gen::<f64>() * spec.noise;
        }
        row[y[i]] += 1.0;
    }

    let mut splits = Splits::default();
    let sizes = [20usize, 40, 60];
    for c in 0..spec.classes {
        let mut members: Vec<usize> = (c * spec.n_per_class..(c + 1) * spec.n_per_class).collect();
        members.shuffle(&mut rng);
        let largest = sizes
            .iter()
            .copied()
            .filter(|&s| s < members.len())
            .max()
            .unwrap_or(members.len() / 2);
        for (tag, &size) in TRAIN_TAGS.iter().zip(&sizes) {
            let take = size.min(largest);
            splits
                .train
                .entry(tag.to_string())
                .or_default()
                .extend_from_slice(&members[..take]);
        }
        let rest = &members[largest..];
        let half = rest.len() / 2;
        splits.val.extend_from_slice(&rest[..half]);
        splits.test.extend_from_slice(&rest[half..]);
    }
    for v in splits.train.values_mut() {
        v.sort_unstable();
    }
    splits.val.sort_unstable();
    splits.test.sort_unstable();

    HeteroGraph::new(
        vec![(TARGET_TYPE.into(), n)],
        edge_types,
        TARGET_TYPE,
        x,
        Some(y),
        metapaths,
    )?
    .with_splits(splits)
}
