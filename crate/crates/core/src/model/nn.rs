//! Small building blocks with explicit backward passes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dense::{dot, Dense};

/// Floor on row norms in L2 normalization.
pub const NORM_EPS: f64 = 1e-12;

#[inline]
pub fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

#[inline]
pub fn elu_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        x.exp()
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Elu,
    /// No nonlinearity and no bias: a purely linear map.
    Linear,
}

impl Activation {
    pub fn apply(self, pre: &Dense) -> Dense {
        match self {
            Activation::Linear => pre.clone(),
            Activation::Elu => map(pre, elu),
        }
    }

    /// `g ⊙ act'(pre)`
    pub fn backward(self, pre: &Dense, g: &Dense) -> Dense {
        match self {
            Activation::Linear => g.clone(),
            Activation::Elu => {
                let mut out = g.clone();
                for (o, &p) in out.data_mut().iter_mut().zip(pre.data()) {
                    *o *= elu_grad(p);
                }
                out
            }
        }
    }

    pub fn uses_bias(self) -> bool {
        matches!(self, Activation::Elu)
    }
}

pub fn map(m: &Dense, f: impl Fn(f64) -> f64) -> Dense {
    let mut out = m.clone();
    for v in out.data_mut() {
        *v = f(*v);
    }
    out
}

/// Affine map `x W + b` with `W` stored `in × out`.
#[derive(Clone, Debug, PartialEq)]
pub struct Linear {
    pub weight: Dense,
    pub bias: Vec<f64>,
}

impl Linear {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Linear {
            weight: Dense::zeros(fan_in, fan_out),
            bias: vec![0.0; fan_out],
        }
    }

    /// Kaiming-uniform weights (`bound = √(6 / fan_in)`), zero bias.
    pub fn kaiming<R: Rng>(fan_in: usize, fan_out: usize, rng: &mut R) -> Self {
        let bound = (6.0 / fan_in as f64).sqrt();
        let mut weight = Dense::zeros(fan_in, fan_out);
        for v in weight.data_mut() {
            *v = rng.gen_range(-bound..bound);
        }
        Linear {
            weight,
            bias: vec![0.0; fan_out],
        }
    }

    pub fn fan_in(&self) -> usize {
        self.weight.rows()
    }

    pub fn fan_out(&self) -> usize {
        self.weight.cols()
    }

    pub fn forward(&self, x: &Dense) -> Dense {
        let mut out = x.matmul(&self.weight).expect("linear input width");
        out.add_row_vector(&self.bias);
        out
    }

    /// Accumulates parameter gradients into `grad` and returns `∂/∂x`.
    pub fn backward(&self, x: &Dense, g_out: &Dense, grad: &mut Linear) -> Dense {
        self.accumulate(x, g_out, grad);
        g_out.matmul_t(&self.weight).expect("linear grad width")
    }

    /// Parameter gradients only.
    pub fn accumulate(&self, x: &Dense, g_out: &Dense, grad: &mut Linear) {
        grad.weight
            .add_assign(&x.t_matmul(g_out).expect("linear grad rows"));
        for (b, s) in grad.bias.iter_mut().zip(g_out.column_sums()) {
            *b += s;
        }
    }
}

/// Rows scaled to unit norm, with the norms used.
pub fn normalize_rows(h: &Dense) -> (Dense, Vec<f64>) {
    let mut out = h.clone();
    let mut norms = Vec::with_capacity(h.rows());
    for i in 0..h.rows() {
        let r = out.row_mut(i);
        let n = dot(r, r).sqrt().max(NORM_EPS);
        for v in r.iter_mut() {
            *v /= n;
        }
        norms.push(n);
    }
    (out, norms)
}

/// Backward of [`normalize_rows`]: `(g − u (u·g)) / ‖h‖`.
pub fn normalize_rows_backward(unit: &Dense, norms: &[f64], g: &Dense) -> Dense {
    let mut out = g.clone();
    for i in 0..g.rows() {
        let u = unit.row(i);
        let ug = dot(u, g.row(i));
        let n = norms[i];
        for (o, &uj) in out.row_mut(i).iter_mut().zip(u) {
            *o = (*o - uj * ug) / n;
        }
    }
    out
}

/// Projection head: `elu(x W1 + b1) W2 + b2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Head {
    pub hidden: Linear,
    pub output: Linear,
}

pub struct HeadTrace {
    pre: Dense,
    act: Dense,
}

impl Head {
    pub fn zeros(d: usize) -> Self {
        Head {
            hidden: Linear::zeros(d, d),
            output: Linear::zeros(d, d),
        }
    }

    pub fn kaiming<R: Rng>(d: usize, rng: &mut R) -> Self {
        Head {
            hidden: Linear::kaiming(d, d, rng),
            output: Linear::kaiming(d, d, rng),
        }
    }

    pub fn forward(&self, x: &Dense) -> (Dense, HeadTrace) {
        let pre = self.hidden.forward(x);
        let act = map(&pre, elu);
        let out = self.output.forward(&act);
        (out, HeadTrace { pre, act })
    }

    pub fn backward(&self, x: &Dense, trace: &HeadTrace, g_out: &Dense, grad: &mut Head) -> Dense {
        let g_act = self.output.backward(&trace.act, g_out, &mut grad.output);
        let g_pre = Activation::Elu.backward(&trace.pre, &g_act);
        self.hidden.backward(x, &g_pre, &mut grad.hidden)
    }
}
