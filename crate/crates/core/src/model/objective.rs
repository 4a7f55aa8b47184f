//! Forward pass, losses and exact gradients.

use crate::dense::{dot, norm, Dense};
use crate::error::{Error, Result};
use crate::filters::{apply_power, FilterPair};
use crate::sparse::SparseAdjacency;

use super::nn::{elu, elu_grad, map, normalize_rows, normalize_rows_backward, Activation};
use super::Params;

/// What the encoder sees.
pub enum Inputs<'a> {
    /// Raw features; filters act on the encoded matrix. `latent_low` and
    /// `latent_high` are the already renormalized operators
    /// `Ã^S_sym` and `L̃^W_sym`.
    Full {
        x: &'a Dense,
        filters: &'a [FilterPair],
        latent_low: &'a SparseAdjacency,
        latent_high: &'a SparseAdjacency,
        r: usize,
    },
    /// Rows of features that were filtered before encoding.
    Prefiltered {
        low: &'a [Dense],
        high: &'a [Dense],
        latent_low: &'a Dense,
        latent_high: &'a Dense,
    },
}

impl Inputs<'_> {
    fn rows(&self) -> usize {
        match self {
            Inputs::Full { x, .. } => x.rows(),
            Inputs::Prefiltered { latent_low, .. } => latent_low.rows(),
        }
    }

    fn num_streams(&self) -> usize {
        match self {
            Inputs::Full { filters, .. } => filters.len(),
            Inputs::Prefiltered { low, .. } => low.len(),
        }
    }
}

/// Multipliers on the three loss terms. Training uses all ones.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub sce: f64,
    pub contrast_low: f64,
    pub contrast_high: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            sce: 1.0,
            contrast_low: 1.0,
            contrast_high: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossBreakdown {
    pub sce: f64,
    /// Contrastive term against `Z^l`.
    pub contrast_low: f64,
    /// Contrastive term against `Z^h`.
    pub contrast_high: f64,
    /// Weighted sum of the three terms.
    pub total: f64,
    /// Reconstruction rows whose cosine was undefined and taken as 0.
    pub degenerate_rows: usize,
}

impl LossBreakdown {
    pub fn contrastive(&self) -> f64 {
        self.contrast_low + self.contrast_high
    }
}

pub struct Evaluation {
    pub loss: LossBreakdown,
    pub z: Dense,
}

struct Encoded {
    h_low: Vec<Dense>,
    h_high: Vec<Dense>,
    z_low: Dense,
    z_high: Dense,
    /// Pre-activation encoder outputs, one per encoded block.
    pre: Vec<Dense>,
}

fn encode(params: &Params, act: Activation, inputs: &Inputs) -> Result<Encoded> {
    match inputs {
        Inputs::Full {
            x,
            filters,
            latent_low,
            latent_high,
            r,
        } => {
            if x.cols() != params.feature_dim() {
                return Err(Error::DimensionMismatch(format!(
                    "features have {} columns, encoder expects {}",
                    x.cols(),
                    params.feature_dim()
                )));
            }
            let pre = params.encoder.forward(x);
            let f = act.apply(&pre);
            let mut h_low = Vec::with_capacity(filters.len());
            let mut h_high = Vec::with_capacity(filters.len());
            for fp in filters.iter() {
                h_low.push(fp.apply_low(&f, *r)?);
                h_high.push(fp.apply_high(&f, *r)?);
            }
            Ok(Encoded {
                h_low,
                h_high,
                z_low: apply_power(latent_low, &f, *r)?,
                z_high: apply_power(latent_high, &f, *r)?,
                pre: vec![pre],
            })
        }
        Inputs::Prefiltered {
            low,
            high,
            latent_low,
            latent_high,
        } => {
            let n = latent_low.rows();
            let blocks = low.iter().chain(high.iter()).chain([*latent_low, *latent_high]);
            let mut pre = Vec::with_capacity(2 * low.len() + 2);
            let mut out = Vec::with_capacity(2 * low.len() + 2);
            for b in blocks {
                if b.rows() != n || b.cols() != params.feature_dim() {
                    return Err(Error::DimensionMismatch(format!(
                        "pre-filtered block {}x{}, expected {n}x{}",
                        b.rows(),
                        b.cols(),
                        params.feature_dim()
                    )));
                }
                let p = params.encoder.forward(b);
                out.push(act.apply(&p));
                pre.push(p);
            }
            let z_high = out.pop().expect("latent high block");
            let z_low = out.pop().expect("latent low block");
            let h_high = out.split_off(low.len());
            Ok(Encoded {
                h_low: out,
                h_high,
                z_low,
                z_high,
                pre,
            })
        }
    }
}

/// Softmax fusion of the `2P` normalized streams (low then high).
pub(super) struct Fusion {
    scores: Vec<Vec<f64>>,
    pub(super) beta: Vec<Vec<f64>>,
    pub(super) z: Dense,
}

pub(super) fn fusion_forward(streams: &[&Dense], p: usize, q_low: &[f64], q_high: &[f64]) -> Fusion {
    let n = streams[0].rows();
    let d = streams[0].cols();
    let mut z = Dense::zeros(n, d);
    let mut scores = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);
    for i in 0..n {
        let s: Vec<f64> = streams
            .iter()
            .enumerate()
            .map(|(k, h)| dot(if k < p { q_low } else { q_high }, h.row(i)))
            .collect();
        let w: Vec<f64> = s.iter().map(|&v| elu(v)).collect();
        let mx = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = w.iter().map(|&v| (v - mx).exp()).collect();
        let total: f64 = e.iter().sum();
        let b: Vec<f64> = e.iter().map(|v| v / total).collect();
        let zi = z.row_mut(i);
        for (k, h) in streams.iter().enumerate() {
            for (o, &v) in zi.iter_mut().zip(h.row(i)) {
                *o += b[k] * v;
            }
        }
        scores.push(s);
        beta.push(b);
    }
    Fusion { scores, beta, z }
}

/// Returns per-stream gradients and accumulates into `g_q_low`/`g_q_high`.
fn fusion_backward(
    fusion: &Fusion,
    streams: &[&Dense],
    p: usize,
    q_low: &[f64],
    q_high: &[f64],
    g_z: &Dense,
    g_q_low: &mut [f64],
    g_q_high: &mut [f64],
) -> Vec<Dense> {
    let (n, d) = g_z.shape();
    let mut g_streams = vec![Dense::zeros(n, d); streams.len()];
    for i in 0..n {
        let gz = g_z.row(i);
        let b = &fusion.beta[i];
        let gb: Vec<f64> = streams.iter().map(|h| dot(gz, h.row(i))).collect();
        let mean: f64 = b.iter().zip(&gb).map(|(x, y)| x * y).sum();
        for (k, h) in streams.iter().enumerate() {
            let gs = b[k] * (gb[k] - mean) * elu_grad(fusion.scores[i][k]);
            let (q, gq) = if k < p {
                (q_low, &mut *g_q_low)
            } else {
                (q_high, &mut *g_q_high)
            };
            let hi = h.row(i);
            for (g, &v) in gq.iter_mut().zip(hi) {
                *g += gs * v;
            }
            let out = g_streams[k].row_mut(i);
            for ((o, &gzj), &qj) in out.iter_mut().zip(gz).zip(q) {
                *o += b[k] * gzj + gs * qj;
            }
        }
    }
    g_streams
}

/// `(1 − cos)^γ` per row and, when asked, its gradient w.r.t. `xhat`
/// times `scale`.
pub(super) fn sce_rows(
    x: &Dense,
    xhat: &Dense,
    gamma: f64,
    scale: f64,
    mut grad: Option<&mut Dense>,
) -> (f64, usize) {
    let mut sum = 0.0;
    let mut degenerate = 0;
    for i in 0..x.rows() {
        let (xi, hi) = (x.row(i), xhat.row(i));
        let (nx, nh) = (norm(xi), norm(hi));
        if nx == 0.0 || nh == 0.0 {
            degenerate += 1;
            sum += 1.0;
            continue;
        }
        let c = dot(xi, hi) / (nx * nh);
        let base = (1.0 - c).max(0.0);
        sum += base.powf(gamma);
        if let Some(g) = grad.as_deref_mut() {
            let dc = -gamma * base.powf(gamma - 1.0) * scale;
            for ((o, &a), &b) in g.row_mut(i).iter_mut().zip(xi).zip(hi) {
                *o += dc * (a / (nx * nh) - c * b / (nh * nh));
            }
        }
    }
    (sum, degenerate)
}

/// `{i} ∪ list`, restricted to `0..n`, sorted and deduplicated.
pub(super) fn positive_sets(positives: &[Vec<usize>], n: usize) -> Vec<Vec<usize>> {
    (0..n)
        .map(|i| {
            let mut s: Vec<usize> = std::iter::once(i)
                .chain(positives.get(i).into_iter().flatten().copied().filter(|&j| j < n))
                .collect();
            s.sort_unstable();
            s.dedup();
            s
        })
        .collect()
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let mx = values.clone().fold(f64::NEG_INFINITY, f64::max);
    mx + values.map(|v| (v - mx).exp()).sum::<f64>().ln()
}

/// `Σ_i −log(Σ_{j∈P_i} e^{a_i·b_j/τ} / Σ_k e^{a_i·b_k/τ})` for unit rows
/// `a`, `b`, streamed one anchor row at a time. Gradients of `scale` times
/// the sum are accumulated into `grads`.
pub(super) fn nce_direction(
    a: &Dense,
    b: &Dense,
    pos: &[Vec<usize>],
    tau: f64,
    scale: f64,
    mut grads: Option<(&mut Dense, &mut Dense)>,
) -> f64 {
    let n = a.rows();
    let mut logits = vec![0.0; n];
    let mut coef = vec![0.0; n];
    let mut total = 0.0;
    for i in 0..n {
        let ai = a.row(i);
        for (k, l) in logits.iter_mut().enumerate() {
            *l = dot(ai, b.row(k)) / tau;
        }
        let lse_all = log_sum_exp(logits.iter().copied());
        let lse_pos = log_sum_exp(pos[i].iter().map(|&j| logits[j]));
        total += lse_all - lse_pos;
        if let Some((ga, gb)) = grads.as_mut() {
            for (c, &l) in coef.iter_mut().zip(&logits) {
                *c = (l - lse_all).exp();
            }
            for &j in &pos[i] {
                coef[j] -= (logits[j] - lse_pos).exp();
            }
            let s = scale / tau;
            let gai = ga.row_mut(i);
            for (k, &c) in coef.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                for (g, &v) in gai.iter_mut().zip(b.row(k)) {
                    *g += s * c * v;
                }
            }
            for (k, &c) in coef.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                for (g, &v) in gb.row_mut(k).iter_mut().zip(ai) {
                    *g += s * c * v;
                }
            }
        }
    }
    total
}

/// Encoder, filters, normalization and fusion only.
pub fn fused_embedding(params: &Params, act: Activation, inputs: &Inputs) -> Result<Dense> {
    let enc = encode(params, act, inputs)?;
    let p = enc.h_low.len();
    let ht: Vec<Dense> = enc
        .h_low
        .iter()
        .chain(&enc.h_high)
        .map(|h| normalize_rows(h).0)
        .collect();
    let refs: Vec<&Dense> = ht.iter().collect();
    Ok(fusion_forward(&refs, p, &params.q_low, &params.q_high).z)
}

pub(super) fn normalized_streams(
    params: &Params,
    act: Activation,
    inputs: &Inputs,
) -> Result<(Vec<Dense>, Vec<Dense>, Dense, Dense)> {
    let enc = encode(params, act, inputs)?;
    let low = enc.h_low.iter().map(|h| normalize_rows(h).0).collect();
    let high = enc.h_high.iter().map(|h| normalize_rows(h).0).collect();
    Ok((low, high, enc.z_low, enc.z_high))
}

/// Full objective on one set of rows. `positives` holds local row ids
/// (self is always added, ids outside the rows are ignored). When `grad`
/// is given, exact gradients of the weighted total are accumulated into it.
#[allow(clippy::too_many_arguments)]
pub fn evaluate(
    params: &Params,
    act: Activation,
    inputs: &Inputs,
    target: &Dense,
    positives: &[Vec<usize>],
    gamma: f64,
    tau: f64,
    weights: LossWeights,
    mut grad: Option<&mut Params>,
) -> Result<Evaluation> {
    let n = inputs.rows();
    let p = inputs.num_streams();
    if p == 0 {
        return Err(Error::Config("at least one metapath is required".into()));
    }
    if target.rows() != n || target.cols() != params.feature_dim() {
        return Err(Error::DimensionMismatch(format!(
            "target {}x{}, expected {n}x{}",
            target.rows(),
            target.cols(),
            params.feature_dim()
        )));
    }
    let d = params.dim();
    let enc = encode(params, act, inputs)?;
    let norm_low: Vec<(Dense, Vec<f64>)> = enc.h_low.iter().map(normalize_rows).collect();
    let norm_high: Vec<(Dense, Vec<f64>)> = enc.h_high.iter().map(normalize_rows).collect();

    let mut g_ht: Vec<Dense> = vec![Dense::zeros(n, d); 2 * p];

    // reconstruction
    let sce_scale = 1.0 / (n * p) as f64;
    let mut sce_sum = 0.0;
    let mut degenerate = 0;
    for q in 0..p {
        let c = norm_low[q].0.hcat(&norm_high[q].0);
        let pre = params.decoder.forward(&c);
        let xhat = map(&pre, elu);
        let mut g_xhat = grad.as_ref().map(|_| Dense::zeros(n, xhat.cols()));
        let (s, dg) = sce_rows(target, &xhat, gamma, weights.sce * sce_scale, g_xhat.as_mut());
        sce_sum += s;
        degenerate += dg;
        if let (Some(gp), Some(gx)) = (grad.as_deref_mut(), g_xhat) {
            let g_pre = Activation::Elu.backward(&pre, &gx);
            let g_c = params.decoder.backward(&c, &g_pre, &mut gp.decoder);
            let (gl, gh) = g_c.hsplit(d);
            g_ht[q].add_assign(&gl);
            g_ht[p + q].add_assign(&gh);
        }
    }
    let sce = sce_sum * sce_scale;

    // fusion
    let streams: Vec<&Dense> = norm_low.iter().chain(&norm_high).map(|(u, _)| u).collect();
    let fusion = fusion_forward(&streams, p, &params.q_low, &params.q_high);

    // projections
    let (zt, tr_z) = params.heads[0].forward(&fusion.z);
    let (zlt, tr_l) = params.heads[1].forward(&enc.z_low);
    let (zht, tr_h) = params.heads[2].forward(&enc.z_high);
    let (u, nu) = normalize_rows(&zt);
    let (vl, nvl) = normalize_rows(&zlt);
    let (vh, nvh) = normalize_rows(&zht);

    let pos = positive_sets(positives, n);
    let half = 1.0 / (2 * n) as f64;
    let mut gu = Dense::zeros(n, d);
    let mut gvl = Dense::zeros(n, d);
    let mut gvh = Dense::zeros(n, d);
    let want = grad.is_some();
    let sl = weights.contrast_low * half;
    let sh = weights.contrast_high * half;
    let contrast_low = half
        * (nce_direction(&u, &vl, &pos, tau, sl, want.then_some((&mut gu, &mut gvl)))
            + nce_direction(&vl, &u, &pos, tau, sl, want.then_some((&mut gvl, &mut gu))));
    let contrast_high = half
        * (nce_direction(&u, &vh, &pos, tau, sh, want.then_some((&mut gu, &mut gvh)))
            + nce_direction(&vh, &u, &pos, tau, sh, want.then_some((&mut gvh, &mut gu))));

    let total = weights.sce * sce
        + weights.contrast_low * contrast_low
        + weights.contrast_high * contrast_high;
    let loss = LossBreakdown {
        sce,
        contrast_low,
        contrast_high,
        total,
        degenerate_rows: degenerate,
    };

    if let Some(gp) = grad {
        let g_zt = normalize_rows_backward(&u, &nu, &gu);
        let g_z = params.heads[0].backward(&fusion.z, &tr_z, &g_zt, &mut gp.heads[0]);
        let g_zlt = normalize_rows_backward(&vl, &nvl, &gvl);
        let g_zl = params.heads[1].backward(&enc.z_low, &tr_l, &g_zlt, &mut gp.heads[1]);
        let g_zht = normalize_rows_backward(&vh, &nvh, &gvh);
        let g_zh = params.heads[2].backward(&enc.z_high, &tr_h, &g_zht, &mut gp.heads[2]);

        let g_fused = fusion_backward(
            &fusion,
            &streams,
            p,
            &params.q_low,
            &params.q_high,
            &g_z,
            &mut gp.q_low,
            &mut gp.q_high,
        );
        let mut g_h = Vec::with_capacity(2 * p);
        for (k, (gf, gs)) in g_fused.into_iter().zip(g_ht).enumerate() {
            let mut g = gf;
            g.add_assign(&gs);
            let (unit, norms) = if k < p { &norm_low[k] } else { &norm_high[k - p] };
            g_h.push(normalize_rows_backward(unit, norms, &g));
        }

        match inputs {
            Inputs::Full {
                x,
                filters,
                latent_low,
                latent_high,
                r,
            } => {
                // every filter operator is symmetric, so its adjoint is itself
                let mut g_f = apply_power(latent_low, &g_zl, *r)?;
                g_f.add_assign(&apply_power(latent_high, &g_zh, *r)?);
                for (q, fp) in filters.iter().enumerate() {
                    g_f.add_assign(&fp.apply_low(&g_h[q], *r)?);
                    g_f.add_assign(&fp.apply_high(&g_h[p + q], *r)?);
                }
                let g_pre = act.backward(&enc.pre[0], &g_f);
                params.encoder.accumulate(x, &g_pre, &mut gp.encoder);
            }
            Inputs::Prefiltered {
                low,
                high,
                latent_low,
                latent_high,
            } => {
                let blocks = low.iter().chain(high.iter()).chain([*latent_low, *latent_high]);
                let grads = g_h.iter().chain([&g_zl, &g_zh]);
                for ((b, g), pre) in blocks.zip(grads).zip(&enc.pre) {
                    let g_pre = act.backward(pre, g);
                    params.encoder.accumulate(b, &g_pre, &mut gp.encoder);
                }
            }
        }
    }

    Ok(Evaluation { loss, z: fusion.z })
}
