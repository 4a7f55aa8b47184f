//! Stand-alone forward operations, for inspection and testing.

use crate::dense::Dense;
use crate::error::{Error, Result};
use crate::filters::{high_pass, low_pass, FilterPair};
use crate::graph::HeteroGraph;
use crate::latent::LatentGraphPair;
use crate::sparse::SparseAdjacency;

use super::nn::{normalize_rows, Activation, Head};
use super::objective::{fusion_forward, nce_direction, normalized_streams, positive_sets, sce_rows, Inputs};
use super::Params;

/// Per meta-path `(H̃^l, H̃^h)`: the encoded features, low- and high-pass
/// filtered over the meta-path subgraph, with unit rows. High-pass rows of
/// nodes isolated in the subgraph are zero.
pub fn encode_dual(
    g: &HeteroGraph,
    params: &Params,
    act: Activation,
    r: usize,
) -> Result<Vec<(Dense, Dense)>> {
    let filters: Vec<FilterPair> = g.subgraphs()?.into_iter().map(FilterPair::new).collect();
    let id = SparseAdjacency::identity(g.num_targets());
    let inputs = Inputs::Full {
        x: g.features(),
        filters: &filters,
        latent_low: &id,
        latent_high: &id,
        r,
    };
    let (low, high, _, _) = normalized_streams(params, act, &inputs)?;
    Ok(low.into_iter().zip(high).collect())
}

fn check_streams(low: &[Dense], high: &[Dense]) -> Result<()> {
    if low.is_empty() || low.len() != high.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} low and {} high streams",
            low.len(),
            high.len()
        )));
    }
    let shape = low[0].shape();
    if low.iter().chain(high).any(|m| m.shape() != shape) {
        return Err(Error::DimensionMismatch("stream shapes differ".into()));
    }
    Ok(())
}

/// Attention-weighted sum of the low and high streams.
pub fn fuse(low: &[Dense], high: &[Dense], q_low: &[f64], q_high: &[f64]) -> Result<Dense> {
    check_streams(low, high)?;
    let streams: Vec<&Dense> = low.iter().chain(high).collect();
    Ok(fusion_forward(&streams, low.len(), q_low, q_high).z)
}

/// Per-node weights over the `2P` streams, low streams first.
pub fn fusion_weights(
    low: &[Dense],
    high: &[Dense],
    q_low: &[f64],
    q_high: &[f64],
) -> Result<Vec<Vec<f64>>> {
    check_streams(low, high)?;
    let streams: Vec<&Dense> = low.iter().chain(high).collect();
    Ok(fusion_forward(&streams, low.len(), q_low, q_high).beta)
}

/// Mean over reconstructions and rows of `(1 − cos(X_i, X̂_i))^γ`, with the
/// number of rows whose cosine was undefined.
pub fn sce_loss(x: &Dense, reconstructions: &[Dense], gamma: f64) -> Result<(f64, usize)> {
    if reconstructions.is_empty() {
        return Ok((0.0, 0));
    }
    let mut sum = 0.0;
    let mut degenerate = 0;
    for xh in reconstructions {
        if xh.shape() != x.shape() {
            return Err(Error::DimensionMismatch("reconstruction shape".into()));
        }
        let (s, d) = sce_rows(x, xh, gamma, 0.0, None);
        sum += s;
        degenerate += d;
    }
    Ok((sum / (x.rows() * reconstructions.len()) as f64, degenerate))
}

/// `(Z^l, Z^h)`: encoded features low-passed over `A^S` and high-passed
/// over `A^W`.
pub fn latent_reps(
    params: &Params,
    act: Activation,
    x: &Dense,
    pair: &LatentGraphPair,
    r: usize,
) -> Result<(Dense, Dense)> {
    let f = act.apply(&params.encoder.forward(x));
    Ok((low_pass(&pair.homophilic, &f, r)?, high_pass(&pair.heterophilic, &f, r)?))
}

/// Symmetric contrastive loss between two representations of the same rows:
/// each is projected by its head and compared by cosine, `positives` holds
/// extra positive row ids per row (self is always positive).
pub fn infonce(
    z: &Dense,
    z_other: &Dense,
    positives: &[Vec<usize>],
    tau: f64,
    head: &Head,
    head_other: &Head,
) -> Result<f64> {
    if z.shape() != z_other.shape() {
        return Err(Error::DimensionMismatch("contrasted matrices differ in shape".into()));
    }
    if !(tau > 0.0) {
        return Err(Error::Config("tau must be positive".into()));
    }
    let n = z.rows();
    if n == 0 {
        return Ok(0.0);
    }
    let (u, _) = normalize_rows(&head.forward(z).0);
    let (v, _) = normalize_rows(&head_other.forward(z_other).0);
    let pos = positive_sets(positives, n);
    let sum = nce_direction(&u, &v, &pos, tau, 0.0, None) + nce_direction(&v, &u, &pos, tau, 0.0, None);
    Ok(sum / (2 * n) as f64)
}

/// Unweighted sum of the contrastive and reconstruction terms.
pub fn total_loss(contrastive: f64, sce: f64) -> f64 {
    contrastive + sce
}
