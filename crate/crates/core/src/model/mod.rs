//! The trainable model: a shared encoder, dual-frequency meta-path streams,
//! adaptive fusion, a cosine reconstruction decoder and latent-graph guided
//! contrastive heads, optimized with Adam.

pub mod nn;
mod objective;
mod ops;
mod state_io;
mod train;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense::Dense;
use crate::error::{Error, Result};

pub use nn::{Activation, Head, Linear};
pub use objective::{evaluate, fused_embedding, Evaluation, Inputs, LossBreakdown, LossWeights};
pub use ops::{encode_dual, fuse, fusion_weights, infonce, latent_reps, sce_loss, total_loss};
pub use state_io::{decode_state, encode_state, read_state, write_state, MODEL_MAGIC};
pub use train::{train_full, train_scalable, EpochLog, TrainOutcome};

/// Hyperparameters. Serialized as a flat JSON object; missing keys take
/// their defaults.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub d: usize,
    pub r: usize,
    pub k: usize,
    pub k_pos: usize,
    pub gamma: f64,
    pub tau: f64,
    pub lr: f64,
    pub weight_decay: f64,
    pub patience: usize,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub encoder: Activation,
    pub anchors: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            d: 64,
            r: 2,
            k: 5,
            k_pos: 2,
            gamma: 1.0,
            tau: 0.5,
            lr: 1e-3,
            weight_decay: 0.0,
            patience: 10,
            max_epochs: 300,
            batch_size: 5120,
            seed: 0,
            encoder: Activation::Elu,
            anchors: 1000,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.d == 0 {
            return bad("d must be positive");
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad("tau must be positive");
        }
        if !(self.gamma >= 1.0 && self.gamma.is_finite()) {
            return bad("gamma must be at least 1");
        }
        if self.patience == 0 {
            return bad("patience must be at least 1");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be positive");
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad("weight_decay must be non-negative");
        }
        Ok(())
    }
}

/// Every trainable tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    pub encoder: Linear,
    pub decoder: Linear,
    pub q_low: Vec<f64>,
    pub q_high: Vec<f64>,
    /// Projection heads for `Z`, `Z^l` and `Z^h`, in that order.
    pub heads: [Head; 3],
}

pub const PARAM_NAMES: [&str; 18] = [
    "encoder.weight",
    "encoder.bias",
    "decoder.weight",
    "decoder.bias",
    "q_low",
    "q_high",
    "head_z.hidden.weight",
    "head_z.hidden.bias",
    "head_z.output.weight",
    "head_z.output.bias",
    "head_low.hidden.weight",
    "head_low.hidden.bias",
    "head_low.output.weight",
    "head_low.output.bias",
    "head_high.hidden.weight",
    "head_high.hidden.bias",
    "head_high.output.weight",
    "head_high.output.bias",
];

impl Params {
    pub fn zeros(d_f: usize, d: usize) -> Self {
        Params {
            encoder: Linear::zeros(d_f, d),
            decoder: Linear::zeros(2 * d, d_f),
            q_low: vec![0.0; d],
            q_high: vec![0.0; d],
            heads: [Head::zeros(d), Head::zeros(d), Head::zeros(d)],
        }
    }

    /// Seeded fan-in scaled uniform initialization, zero biases.
    pub fn init(d_f: usize, d: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let encoder = Linear::kaiming(d_f, d, &mut rng);
        let decoder = Linear::kaiming(2 * d, d_f, &mut rng);
        let q = Linear::kaiming(d, 2, &mut rng).weight.transpose();
        let heads = [
            Head::kaiming(d, &mut rng),
            Head::kaiming(d, &mut rng),
            Head::kaiming(d, &mut rng),
        ];
        Params {
            encoder,
            decoder,
            q_low: q.row(0).to_vec(),
            q_high: q.row(1).to_vec(),
            heads,
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.encoder.fan_in()
    }

    pub fn dim(&self) -> usize {
        self.encoder.fan_out()
    }

    pub fn zeros_like(&self) -> Self {
        Params::zeros(self.feature_dim(), self.dim())
    }

    /// Tensors in [`PARAM_NAMES`] order.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = vec![
            self.encoder.weight.data(),
            &self.encoder.bias,
            self.decoder.weight.data(),
            &self.decoder.bias,
            &self.q_low,
            &self.q_high,
        ];
        for h in &self.heads {
            out.push(h.hidden.weight.data());
            out.push(&h.hidden.bias);
            out.push(h.output.weight.data());
            out.push(&h.output.bias);
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![
            self.encoder.weight.data_mut(),
            &mut self.encoder.bias,
            self.decoder.weight.data_mut(),
            &mut self.decoder.bias,
            &mut self.q_low,
            &mut self.q_high,
        ];
        for h in &mut self.heads {
            out.push(h.hidden.weight.data_mut());
            out.push(&mut h.hidden.bias);
            out.push(h.output.weight.data_mut());
            out.push(&mut h.output.bias);
        }
        out
    }

    pub fn num_values(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Name of the first tensor holding a non-finite value.
    pub fn first_non_finite(&self) -> Option<&'static str> {
        self.tensors()
            .iter()
            .zip(PARAM_NAMES)
            .find(|(t, _)| t.iter().any(|v| !v.is_finite()))
            .map(|(_, n)| n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl AdamHyper {
    pub fn new(lr: f64, weight_decay: f64) -> Self {
        AdamHyper {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
        }
    }
}

/// Parameters plus optimizer moments.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelState {
    pub params: Params,
    pub m: Params,
    pub v: Params,
    pub step: u64,
    pub activation: Activation,
}

impl ModelState {
    pub fn new(d_f: usize, cfg: &TrainConfig) -> Self {
        let params = Params::init(d_f, cfg.d, cfg.seed);
        ModelState {
            m: params.zeros_like(),
            v: params.zeros_like(),
            params,
            step: 0,
            activation: cfg.encoder,
        }
    }

    /// One Adam update. The weight-decay term `λθ` is added to `grad` first.
    pub fn adam_step(&mut self, grad: &Params, hp: &AdamHyper) {
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - hp.beta1.powi(t);
        let c2 = 1.0 - hp.beta2.powi(t);
        let linear = self.activation == Activation::Linear;
        let tensors = self
            .params
            .tensors_mut()
            .into_iter()
            .zip(self.m.tensors_mut())
            .zip(self.v.tensors_mut())
            .zip(grad.tensors())
            .enumerate();
        for (idx, (((p, m), v), g)) in tensors {
            // the linear encoder carries no bias
            if linear && idx == 1 {
                continue;
            }
            for (((p, m), v), &g) in p.iter_mut().zip(m.iter_mut()).zip(v.iter_mut()).zip(g) {
                let g = g + hp.weight_decay * *p;
                *m = hp.beta1 * *m + (1.0 - hp.beta1) * g;
                *v = hp.beta2 * *v + (1.0 - hp.beta2) * g * g;
                *p -= hp.lr * (*m / c1) / ((*v / c2).sqrt() + hp.eps);
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EmbeddingRole {
    #[serde(rename = "Z")]
    Fused,
    #[serde(rename = "Z_low")]
    LatentLow,
    #[serde(rename = "Z_high")]
    LatentHigh,
    #[serde(rename = "H_low")]
    StreamLow,
    #[serde(rename = "H_high")]
    StreamHigh,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    pub role: EmbeddingRole,
    pub matrix: Dense,
}

impl Embedding {
    pub fn new(role: EmbeddingRole, matrix: Dense) -> Result<Self> {
        if !matrix.all_finite() {
            return Err(Error::NonFinite(format!("{role:?} embedding")));
        }
        if matches!(role, EmbeddingRole::StreamLow | EmbeddingRole::StreamHigh) {
            for i in 0..matrix.rows() {
                let n = crate::dense::norm(matrix.row(i));
                // zero rows come from nodes isolated in the filtering graph
                if (n - 1.0).abs() > 1e-9 && n != 0.0 {
                    return Err(Error::DimensionMismatch(format!(
                        "row {i} of a normalized stream has norm {n}"
                    )));
                }
            }
        }
        Ok(Embedding { role, matrix })
    }
}
